import asyncio
import logging
from typing import List, Sequence

import numpy as np

from src.shared.errors import EmptyInput
from src.services.corpus.domain.entities import OpinionTuple
from src.services.corpus.domain.value_objects import EmbeddingVector, GroupKey, cosine_matrix, stack_vectors
from src.services.provider.domain.gateway import ProviderGateway
from .entities import CohesionStats, GroupClustering, HdbscanParams, OpinionCluster
from .hdbscan import hdbscan, pairwise_euclidean

logger = logging.getLogger(__name__)


def cohesion(cluster_points: Sequence[EmbeddingVector]) -> CohesionStats:
    """Mean cosine distance to the centroid and mean pairwise cosine similarity"""
    if not cluster_points:
        raise EmptyInput("cohesion of an empty cluster")
    matrix = stack_vectors(cluster_points)
    n = matrix.shape[0]
    if n == 1:
        return CohesionStats(0.0, 1.0, 1)

    centroid = matrix.mean(axis=0)
    centroid_norm = float(np.linalg.norm(centroid))
    if centroid_norm == 0.0:
        distances = np.ones(n)
    else:
        norms = np.linalg.norm(matrix, axis=1)
        safe = np.where(norms == 0.0, 1.0, norms)
        cos = np.clip(matrix @ centroid / (safe * centroid_norm), -1.0, 1.0)
        distances = np.maximum(1.0 - cos, 0.0)

    sims = cosine_matrix(matrix)
    upper = sims[np.triu_indices(n, k=1)]
    return CohesionStats(float(distances.mean()), float(upper.mean()), n)


def select_representatives(cluster_points: Sequence[EmbeddingVector], count: int = 3) -> List[int]:
    """Medoid first, then farthest-point picks; ties go to the lowest index"""
    if count < 1:
        raise ValueError("count must be >= 1")
    if not cluster_points:
        return []
    dist = pairwise_euclidean(stack_vectors(cluster_points))
    n = dist.shape[0]
    picked = [int(np.argmin(dist.mean(axis=1)))]
    nearest = dist[picked[0]].copy()
    while len(picked) < min(count, n):
        candidates = nearest.copy()
        candidates[picked] = -np.inf
        choice = int(np.argmax(candidates))
        picked.append(choice)
        nearest = np.minimum(nearest, dist[choice])
    return picked


class ClusteringDomainService:
    """Per-group density clustering of opinion embeddings"""

    def __init__(self, gateway: ProviderGateway, params: HdbscanParams, representatives_per_cluster: int = 3):
        self.gateway = gateway
        self.params = params
        self.representatives_per_cluster = representatives_per_cluster

    async def embed_opinions(self, tuples: Sequence[OpinionTuple]) -> List[EmbeddingVector]:
        return await self.gateway.embed_batch([t.opinion for t in tuples])

    async def cluster_group(self, group: GroupKey, tuples: Sequence[OpinionTuple]) -> GroupClustering:
        """Embed, cluster, score cohesion and pick representatives for one group"""
        if not tuples:
            raise EmptyInput(f"group {group} has no opinions")
        vectors = await self.embed_opinions(tuples)
        result = await asyncio.to_thread(hdbscan, vectors, self.params)

        clusters: List[OpinionCluster] = []
        for cluster_id, members in enumerate(result.clusters):
            points = [vectors[i] for i in members]
            reps = select_representatives(points, self.representatives_per_cluster)
            clusters.append(OpinionCluster(
                cluster_id=cluster_id,
                member_ids=tuple(tuples[i].opinion_id for i in members),
                cohesion=cohesion(points),
                representative_ids=tuple(tuples[members[r]].opinion_id for r in reps),
            ))
        noise_ids = tuple(tuples[i].opinion_id for i in result.noise())
        logger.debug(f"Group {group}: {len(tuples)} opinions, {len(clusters)} clusters, {len(noise_ids)} noise")
        return GroupClustering(group, self.params, tuple(clusters), noise_ids, result=result)
