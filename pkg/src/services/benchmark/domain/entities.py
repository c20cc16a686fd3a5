from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Tuple

from src.shared.errors import InvalidRecord
from src.services.corpus.domain.value_objects import GroupKey

PATTERN_LENGTH = 10


class Ordering(Enum):
    """Input ordering of a benchmark variant"""
    GROUPED = "grouped"
    SHUFFLED = "shuffled"


@dataclass(frozen=True)
class MmrConfig:
    """Maximal marginal relevance settings"""
    lambda_: float = 0.8
    max_selected: int = 10

    def __post_init__(self):
        if not 0.0 <= self.lambda_ <= 1.0:
            raise InvalidRecord(f"MMR lambda must lie in [0, 1], got {self.lambda_}")
        if self.max_selected < 1:
            raise InvalidRecord("max_selected must be positive")


@dataclass(frozen=True)
class DuplicationPattern:
    """Per-position repeat counts applied to a base opinion set"""
    pattern_id: int
    counts: Tuple[int, ...]
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if len(self.counts) != PATTERN_LENGTH:
            raise InvalidRecord(f"pattern {self.pattern_id} must have {PATTERN_LENGTH} counts")
        if any(c < 1 for c in self.counts):
            raise InvalidRecord(f"pattern {self.pattern_id} has a count below 1")

    @property
    def total(self) -> int:
        return sum(self.counts)

    def to_dict(self) -> Dict[str, Any]:
        return {"id": self.pattern_id, "counts": list(self.counts), "description": self.description}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DuplicationPattern":
        try:
            return cls(int(data["id"]), tuple(data["counts"]), str(data.get("description", "")))
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidRecord(f"malformed duplication pattern: {e}") from e


@dataclass(frozen=True)
class BenchVariant:
    """One redundancy-injected opinion sequence for a group"""
    group: GroupKey
    pattern_id: int
    ordering: Ordering
    opinion_sequence: Tuple[str, ...]
    seed: int
    base_opinion_ids: Tuple[str, ...] = ()
    base_opinions: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "group_key": self.group.to_dict(),
            "pattern_id": self.pattern_id,
            "ordering": self.ordering.value,
            "seed": self.seed,
            "opinion_sequence": list(self.opinion_sequence),
            "base_opinion_ids": list(self.base_opinion_ids),
            "base_opinions": list(self.base_opinions),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BenchVariant":
        try:
            return cls(
                group=GroupKey.from_dict(data["group_key"]),
                pattern_id=int(data["pattern_id"]),
                ordering=Ordering(data["ordering"]),
                opinion_sequence=tuple(data["opinion_sequence"]),
                seed=int(data["seed"]),
                base_opinion_ids=tuple(data.get("base_opinion_ids", ())),
                base_opinions=tuple(data.get("base_opinions", ())),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidRecord(f"malformed benchmark variant: {e}") from e
