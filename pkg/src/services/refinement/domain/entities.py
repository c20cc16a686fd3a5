from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set, Tuple

from src.shared.errors import ConflictingDecision, InvalidRecord
from src.services.corpus.domain.entities import ThemeSet


@dataclass(frozen=True)
class MergeDecision:
    """Fold several themes into one target (which may be one of the sources)"""
    sources: Tuple[str, ...]
    target: str
    definition: Optional[str] = None

    def theme_ids(self) -> Set[str]:
        return set(self.sources) | {self.target}

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"sources": list(self.sources), "target": self.target}
        if self.definition is not None:
            data["definition"] = self.definition
        return data


@dataclass(frozen=True)
class SplitTarget:
    theme_id: str
    definition: str = ""


@dataclass(frozen=True)
class SplitDecision:
    """Replace a broad theme by narrower new themes"""
    source: str
    targets: Tuple[SplitTarget, ...]

    def theme_ids(self) -> Set[str]:
        return {self.source} | {t.theme_id for t in self.targets}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "source": self.source,
            "targets": [{"theme_id": t.theme_id, "definition": t.definition} for t in self.targets],
        }


@dataclass(frozen=True)
class HumanDecisionFile:
    """Curator decisions applied on top of the refined theme set"""
    merges: Tuple[MergeDecision, ...] = ()
    splits: Tuple[SplitDecision, ...] = ()
    drops: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "merges", tuple(self.merges))
        object.__setattr__(self, "splits", tuple(self.splits))
        object.__setattr__(self, "drops", tuple(self.drops))
        self.validate()

    def is_empty(self) -> bool:
        return not (self.merges or self.splits or self.drops)

    def validate(self) -> None:
        """A theme id may take part in at most one decision"""
        owners: Dict[str, int] = {}
        decisions: List[Set[str]] = [m.theme_ids() for m in self.merges]
        decisions += [s.theme_ids() for s in self.splits]
        decisions += [{d} for d in self.drops]
        for merge in self.merges:
            if not merge.sources:
                raise ConflictingDecision(merge.target, "merge has no sources")
        for split in self.splits:
            if not split.targets:
                raise ConflictingDecision(split.source, "split has no targets")
            if split.source in {t.theme_id for t in split.targets}:
                raise ConflictingDecision(split.source, "split target repeats its source")
        for index, ids in enumerate(decisions):
            for theme_id in ids:
                if theme_id in owners and owners[theme_id] != index:
                    raise ConflictingDecision(theme_id)
                owners[theme_id] = index

    def to_dict(self) -> Dict[str, Any]:
        return {
            "merges": [m.to_dict() for m in self.merges],
            "splits": [s.to_dict() for s in self.splits],
            "drops": list(self.drops),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HumanDecisionFile":
        try:
            merges = tuple(
                MergeDecision(
                    sources=tuple(str(s) for s in m["sources"]),
                    target=str(m["target"]),
                    definition=m.get("definition"),
                )
                for m in data.get("merges", [])
            )
            splits = tuple(
                SplitDecision(
                    source=str(s["source"]),
                    targets=tuple(
                        SplitTarget(str(t["theme_id"]), str(t.get("definition", "")))
                        if isinstance(t, dict) else SplitTarget(str(t))
                        for t in s["targets"]
                    ),
                )
                for s in data.get("splits", [])
            )
            drops = tuple(str(d) for d in data.get("drops", []))
        except (KeyError, TypeError, AttributeError) as e:
            raise InvalidRecord(f"malformed decisions file: {e}") from e
        return cls(merges=merges, splits=splits, drops=drops)


@dataclass(frozen=True)
class FlaggedTheme:
    """Theme proposed for human review"""
    theme_id: str
    count: int
    nearest_existing: Optional[str] = None
    similarity: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theme_id": self.theme_id,
            "count": self.count,
            "nearest_existing": self.nearest_existing,
            "similarity": round(self.similarity, 6),
        }


@dataclass(frozen=True)
class RefinementOutcome:
    """Result of the automatic refinement passes, before human decisions"""
    filtered: Dict[str, int]
    survivors: Dict[str, int]
    merged_into: Dict[str, str]
    flagged: Tuple[FlaggedTheme, ...]
    theme_set: ThemeSet = field(default_factory=ThemeSet)

    def flagged_ids(self) -> List[str]:
        return [f.theme_id for f in self.flagged]
