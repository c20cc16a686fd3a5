from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from src.shared.errors import InvalidRecord
from src.services.corpus.domain.value_objects import GroupKey

NOISE = -1


@dataclass(frozen=True)
class HdbscanParams:
    """Density clustering parameters"""
    min_samples: int = 5
    min_cluster_size: int = 5
    cluster_selection_epsilon: float = 0.05
    allow_single_cluster: bool = True

    def __post_init__(self):
        if self.min_samples < 1:
            raise InvalidRecord("min_samples must be positive")
        if self.min_cluster_size < 2:
            raise InvalidRecord("min_cluster_size must be at least 2")
        if self.cluster_selection_epsilon < 0:
            raise InvalidRecord("cluster_selection_epsilon must be non-negative")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "min_samples": self.min_samples,
            "min_cluster_size": self.min_cluster_size,
            "cluster_selection_epsilon": self.cluster_selection_epsilon,
            "allow_single_cluster": self.allow_single_cluster,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HdbscanParams":
        return cls(
            min_samples=int(data["min_samples"]),
            min_cluster_size=int(data["min_cluster_size"]),
            cluster_selection_epsilon=float(data["cluster_selection_epsilon"]),
            allow_single_cluster=bool(data.get("allow_single_cluster", True)),
        )


@dataclass(frozen=True)
class ClusteringResult:
    """Partition of n points into clusters 0..C-1 plus noise (-1)"""
    labels: Tuple[int, ...]
    clusters: Tuple[Tuple[int, ...], ...]
    params: HdbscanParams

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
        object.__setattr__(self, "clusters", tuple(tuple(c) for c in self.clusters))
        for cluster_id, members in enumerate(self.clusters):
            if len(members) < self.params.min_cluster_size:
                raise InvalidRecord(f"cluster {cluster_id} is smaller than min_cluster_size")
            for index in members:
                if self.labels[index] != cluster_id:
                    raise InvalidRecord(f"point {index} is listed in cluster {cluster_id} but labelled otherwise")
        if sum(len(c) for c in self.clusters) != sum(1 for x in self.labels if x != NOISE):
            raise InvalidRecord("labels and cluster member lists disagree")

    @classmethod
    def from_labels(cls, labels: List[int], params: HdbscanParams) -> "ClusteringResult":
        count = max(labels, default=NOISE) + 1
        clusters: List[List[int]] = [[] for _ in range(count)]
        for index, label in enumerate(labels):
            if label != NOISE:
                clusters[label].append(index)
        return cls(tuple(labels), tuple(tuple(c) for c in clusters), params)

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def noise(self) -> List[int]:
        return [i for i, label in enumerate(self.labels) if label == NOISE]


@dataclass(frozen=True)
class CohesionStats:
    """Cluster tightness measured in cosine space"""
    avg_centroid_distance: float
    avg_pairwise_similarity: float
    size: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "avg_centroid_distance": round(self.avg_centroid_distance, 12),
            "avg_pairwise_similarity": round(self.avg_pairwise_similarity, 12),
            "size": self.size,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CohesionStats":
        return cls(
            avg_centroid_distance=float(data["avg_centroid_distance"]),
            avg_pairwise_similarity=float(data["avg_pairwise_similarity"]),
            size=int(data["size"]),
        )


@dataclass(frozen=True)
class OpinionCluster:
    """One cluster of a group, by opinion id"""
    cluster_id: int
    member_ids: Tuple[str, ...]
    cohesion: CohesionStats
    representative_ids: Tuple[str, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.cluster_id,
            "member_opinion_ids": list(self.member_ids),
            "cohesion": self.cohesion.to_dict(),
            "representative_ids": list(self.representative_ids),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OpinionCluster":
        return cls(
            cluster_id=int(data["id"]),
            member_ids=tuple(data["member_opinion_ids"]),
            cohesion=CohesionStats.from_dict(data["cohesion"]),
            representative_ids=tuple(data["representative_ids"]),
        )


@dataclass(frozen=True)
class GroupClustering:
    """Clustering outcome of one product-theme-sentiment group"""
    group: GroupKey
    params: HdbscanParams
    clusters: Tuple[OpinionCluster, ...]
    noise_ids: Tuple[str, ...]
    result: Optional[ClusteringResult] = field(default=None, compare=False)

    @property
    def size(self) -> int:
        return sum(len(c.member_ids) for c in self.clusters) + len(self.noise_ids)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "group_key": self.group.to_dict(),
            "params": self.params.to_dict(),
            "clusters": [c.to_dict() for c in self.clusters],
            "noise_opinion_ids": list(self.noise_ids),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GroupClustering":
        try:
            return cls(
                group=GroupKey.from_dict(data["group_key"]),
                params=HdbscanParams.from_dict(data["params"]),
                clusters=tuple(OpinionCluster.from_dict(c) for c in data["clusters"]),
                noise_ids=tuple(data["noise_opinion_ids"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidRecord(f"malformed cluster record: {e}") from e
