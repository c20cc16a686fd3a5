import logging
from typing import List, Mapping, Sequence, Tuple

import numpy as np

from src.shared.errors import BaseSizeMismatch, InsufficientOpinions
from src.shared.seeding import derive_seed
from src.services.clustering.domain.entities import GroupClustering, OpinionCluster
from src.services.corpus.domain.entities import OpinionTuple
from src.services.corpus.domain.value_objects import EmbeddingVector, GroupKey, cosine_matrix, stack_vectors
from src.services.provider.domain.gateway import ProviderGateway
from .entities import PATTERN_LENGTH, BenchVariant, DuplicationPattern, MmrConfig, Ordering

logger = logging.getLogger(__name__)

MAX_CENTROID_DISTANCE = 0.2
MIN_PAIRWISE_SIMILARITY = 0.7

_BUILTIN_PATTERNS: Tuple[Tuple[Tuple[int, ...], str], ...] = (
    ((3000, 5, 5, 5, 5, 5, 5, 5, 5, 3000), "Extreme redundancy at boundaries"),
    ((5, 5, 5, 3000, 3000, 5, 5, 5, 5, 5), "Extreme redundancy in the middle"),
    ((3000, 3000, 5, 5, 5, 5, 5, 5, 5, 5), "Extreme redundancy at the start"),
    ((3000, 5, 5, 3000, 5, 5, 5, 5, 5, 5), "Extreme redundancy scattered across positions"),
    ((2000, 2000, 5, 5, 5, 5, 5, 5, 5, 2000), "High redundancy at boundaries"),
    ((2000, 2000, 2000, 5, 5, 5, 5, 5, 5, 5), "High redundancy at the start"),
    ((5, 5, 5, 5, 5, 5, 5, 2000, 2000, 2000), "High redundancy at the end"),
    ((2000, 2000, 5, 5, 2000, 5, 5, 5, 5, 5), "High redundancy scattered across positions"),
    ((5, 5, 5, 5, 2000, 5, 5, 5, 2000, 2000), "High redundancy at end positions"),
    ((1000, 1000, 1000, 1000, 5, 5, 5, 5, 5, 2000), "Mixed redundancy levels"),
)


def builtin_patterns() -> List[DuplicationPattern]:
    return [
        DuplicationPattern(i, counts, description)
        for i, (counts, description) in enumerate(_BUILTIN_PATTERNS, start=1)
    ]


def filter_quality_clusters(
    clusters: Sequence[OpinionCluster],
    max_centroid_distance: float = MAX_CENTROID_DISTANCE,
    min_pairwise_similarity: float = MIN_PAIRWISE_SIMILARITY,
) -> List[OpinionCluster]:
    """Clusters that are tight on both cohesion measures; bounds are inclusive"""
    return [
        c for c in clusters
        if c.cohesion.avg_centroid_distance <= max_centroid_distance
        and c.cohesion.avg_pairwise_similarity >= min_pairwise_similarity
    ]


def mmr_select(pool: Sequence[EmbeddingVector], cfg: MmrConfig = MmrConfig()) -> List[int]:
    """Greedy maximal marginal relevance over a pool of embeddings.

    Relevance is the mean cosine similarity to the other pool members (0 for
    a singleton pool) and the redundancy penalty over an empty selection is 0.
    Ties go to the lowest index.
    """
    n = len(pool)
    if n == 0:
        return []
    sims = cosine_matrix(stack_vectors(pool))
    relevance = np.zeros(n) if n == 1 else (sims.sum(axis=1) - np.diag(sims)) / (n - 1)

    selected: List[int] = []
    penalty = np.zeros(n)
    available = np.ones(n, dtype=bool)
    while len(selected) < min(cfg.max_selected, n):
        scores = (1.0 - cfg.lambda_) * relevance - cfg.lambda_ * penalty
        scores[~available] = -np.inf
        choice = int(np.argmax(scores))
        selected.append(choice)
        available[choice] = False
        penalty = sims[choice].copy() if len(selected) == 1 else np.maximum(penalty, sims[choice])
    return selected


def cluster_representative(group: GroupKey, cluster: OpinionCluster, seed: int) -> str:
    """Seeded uniform pick among the cluster members"""
    rng = np.random.default_rng(derive_seed(seed, str(group), cluster.cluster_id))
    return cluster.member_ids[int(rng.integers(len(cluster.member_ids)))]


def strategic_select(
    group: GroupKey,
    quality_clusters: Sequence[OpinionCluster],
    noise_ids: Sequence[str],
    noise_embeddings: Sequence[EmbeddingVector],
    target: int = 10,
    seed: int = 0,
    mmr: MmrConfig = MmrConfig(),
) -> List[str]:
    """Base opinion ids: one per quality cluster (largest first), then MMR fills from noise"""
    if len(noise_ids) != len(noise_embeddings):
        raise ValueError("noise ids and embeddings must align")
    fill_capacity = min(len(noise_ids), mmr.max_selected)
    available = len(quality_clusters) + fill_capacity
    if available < target:
        raise InsufficientOpinions(group, available, target)

    ranked = sorted(quality_clusters, key=lambda c: (-len(c.member_ids), c.cluster_id))
    chosen = [cluster_representative(group, c, seed) for c in ranked[:target]]
    needed = target - len(chosen)
    if needed:
        picks = mmr_select(noise_embeddings, MmrConfig(mmr.lambda_, needed))
        chosen.extend(noise_ids[i] for i in picks)
    return chosen


def apply_pattern(
    base: Sequence[str],
    pattern: DuplicationPattern,
    ordering: Ordering,
    seed: int,
    group: GroupKey,
    base_ids: Sequence[str] = (),
) -> BenchVariant:
    """Repeat the i-th base opinion counts[i] times, optionally shuffled"""
    if len(base) != PATTERN_LENGTH:
        raise BaseSizeMismatch(PATTERN_LENGTH, len(base))
    sequence = [text for text, count in zip(base, pattern.counts) for _ in range(count)]
    if ordering is Ordering.SHUFFLED:
        order = np.random.default_rng(seed).permutation(len(sequence))
        sequence = [sequence[int(i)] for i in order]
    return BenchVariant(
        group=group,
        pattern_id=pattern.pattern_id,
        ordering=ordering,
        opinion_sequence=tuple(sequence),
        seed=seed,
        base_opinion_ids=tuple(base_ids),
        base_opinions=tuple(base),
    )


def variant_seed(seed: int, group: GroupKey, pattern_id: int, ordering: Ordering) -> int:
    return derive_seed(seed, "bench", str(group), pattern_id, ordering.value)


def generate_benchmark(
    bases: Mapping[GroupKey, Sequence[Tuple[str, str]]],
    patterns: Sequence[DuplicationPattern],
    orderings: Sequence[Ordering],
    seed: int,
) -> List[BenchVariant]:
    """Every group x pattern x ordering; bases hold (opinion_id, text) pairs"""
    variants: List[BenchVariant] = []
    for group in sorted(bases):
        ids = [opinion_id for opinion_id, _ in bases[group]]
        texts = [text for _, text in bases[group]]
        for pattern in patterns:
            for ordering in orderings:
                variants.append(apply_pattern(
                    texts, pattern, ordering, variant_seed(seed, group, pattern.pattern_id, ordering), group, ids,
                ))
    logger.debug(f"Generated {len(variants)} variants over {len(bases)} groups")
    return variants


class BenchmarkDomainService:
    """Builds the fixed-size base opinion set of each group"""

    def __init__(
        self,
        gateway: ProviderGateway,
        mmr: MmrConfig,
        target: int = 10,
        seed: int = 0,
        max_centroid_distance: float = MAX_CENTROID_DISTANCE,
        min_pairwise_similarity: float = MIN_PAIRWISE_SIMILARITY,
    ):
        self.gateway = gateway
        self.mmr = mmr
        self.target = target
        self.seed = seed
        self.max_centroid_distance = max_centroid_distance
        self.min_pairwise_similarity = min_pairwise_similarity

    async def build_base(self, clustering: GroupClustering, opinions: Mapping[str, OpinionTuple]) -> List[Tuple[str, str]]:
        """(opinion_id, text) pairs of the group's base set"""
        quality = filter_quality_clusters(clustering.clusters, self.max_centroid_distance, self.min_pairwise_similarity)
        noise = [opinions[i] for i in clustering.noise_ids]
        needed = self.target - len(quality)
        embeddings: List[EmbeddingVector] = []
        if needed > 0 and noise:
            embeddings = await self.gateway.embed_batch([o.opinion for o in noise])
        ids = strategic_select(
            clustering.group, quality, [o.opinion_id for o in noise] if embeddings else [], embeddings,
            self.target, self.seed, self.mmr,
        )
        return [(i, opinions[i].opinion) for i in ids]
