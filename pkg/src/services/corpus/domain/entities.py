from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple

from src.shared.errors import EmptyReview, InvalidRecord, UnknownTheme
from src.shared.seeding import short_id
from .value_objects import Sentiment


class ThemeOrigin(Enum):
    """Theme origin enumeration"""
    GENERATED = "generated"
    MERGED = "merged"
    SPLIT = "split"
    HUMAN = "human"


class SummaryScope(Enum):
    """Summary scope enumeration"""
    THEME = "theme"
    PRODUCT = "product"


def _require(data: Dict[str, Any], *names: str) -> None:
    missing = [n for n in names if n not in data]
    if missing:
        raise InvalidRecord(f"missing field(s): {', '.join(missing)}")


@dataclass(frozen=True)
class Review:
    """Review domain entity"""
    review_id: str
    product_id: str
    text: str
    metadata: Dict[str, str] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if not self.review_id:
            raise InvalidRecord("review_id must be non-empty")
        if not self.text or not self.text.strip():
            raise EmptyReview(self.review_id)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "review_id": self.review_id,
            "product_id": self.product_id,
            "text": self.text,
        }
        if self.metadata:
            data["metadata"] = dict(self.metadata)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Review":
        _require(data, "review_id", "product_id", "text")
        metadata = data.get("metadata") or {}
        return cls(
            review_id=str(data["review_id"]),
            product_id=str(data["product_id"]),
            text=str(data["text"]),
            metadata={str(k): str(v) for k, v in metadata.items()},
        )


@dataclass(frozen=True)
class OpinionTuple:
    """Aspect-based opinion extracted from one review"""
    review_id: str
    theme: str
    aspect: str
    opinion: str
    sentiment: Sentiment

    def __post_init__(self):
        if not self.theme:
            raise InvalidRecord("theme must be non-empty")
        if not self.aspect.strip() or not self.opinion.strip():
            raise InvalidRecord(f"aspect and opinion must be non-empty (review {self.review_id})")

    def dedup_key(self) -> Tuple[str, str, str, str]:
        """Equality used when collating extractions; review_id is not part of it"""
        return (
            self.theme,
            self.aspect.strip().casefold(),
            self.opinion.strip().casefold(),
            self.sentiment.value,
        )

    @property
    def opinion_id(self) -> str:
        return short_id(self.review_id, *self.dedup_key())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "review_id": self.review_id,
            "theme": self.theme,
            "aspect": self.aspect,
            "opinion": self.opinion,
            "sentiment": self.sentiment.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OpinionTuple":
        _require(data, "review_id", "theme", "aspect", "opinion", "sentiment")
        return cls(
            review_id=str(data["review_id"]),
            theme=str(data["theme"]),
            aspect=str(data["aspect"]),
            opinion=str(data["opinion"]),
            sentiment=Sentiment.parse(data["sentiment"]),
        )


@dataclass(frozen=True)
class ThemeDefinition:
    """Theme domain entity"""
    theme_id: str
    definition: str = ""
    frequency: int = 0
    origin: ThemeOrigin = ThemeOrigin.GENERATED

    def __post_init__(self):
        if not self.theme_id:
            raise InvalidRecord("theme_id must be non-empty")
        if self.frequency < 0:
            raise InvalidRecord(f"theme {self.theme_id!r} has negative frequency")

    def describe(self) -> str:
        """Definition text, falling back to a generic one for generated themes"""
        if self.definition.strip():
            return self.definition.strip()
        return f"Opinions about {self.theme_id.replace('_', ' ')}."

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theme_id": self.theme_id,
            "definition": self.definition,
            "frequency": self.frequency,
            "origin": self.origin.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ThemeDefinition":
        _require(data, "theme_id")
        try:
            origin = ThemeOrigin(data.get("origin", ThemeOrigin.GENERATED.value))
        except ValueError as e:
            raise InvalidRecord(f"unknown theme origin {data.get('origin')!r}") from e
        return cls(
            theme_id=str(data["theme_id"]),
            definition=str(data.get("definition", "")),
            frequency=int(data.get("frequency", 0)),
            origin=origin,
        )


@dataclass(frozen=True)
class ThemeSet:
    """Ordered collection of themes with unique ids"""
    themes: Tuple[ThemeDefinition, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "themes", tuple(self.themes))
        seen = set()
        for theme in self.themes:
            if theme.theme_id in seen:
                raise InvalidRecord(f"duplicate theme_id {theme.theme_id!r}")
            seen.add(theme.theme_id)

    @classmethod
    def create(cls, themes: Iterable[ThemeDefinition]) -> "ThemeSet":
        return cls(tuple(themes))

    def __iter__(self) -> Iterator[ThemeDefinition]:
        return iter(self.themes)

    def __len__(self) -> int:
        return len(self.themes)

    def __contains__(self, theme_id: object) -> bool:
        return any(t.theme_id == theme_id for t in self.themes)

    def ids(self) -> List[str]:
        return [t.theme_id for t in self.themes]

    def get(self, theme_id: str) -> ThemeDefinition:
        for theme in self.themes:
            if theme.theme_id == theme_id:
                return theme
        raise UnknownTheme(theme_id)

    def frequencies(self) -> Dict[str, int]:
        return {t.theme_id: t.frequency for t in self.themes}


@dataclass(frozen=True)
class Summary:
    """Theme-level or product-level summary with provenance"""
    scope: SummaryScope
    key: str
    product_id: str
    text: str
    source_opinion_ids: Tuple[str, ...]
    theme_id: Optional[str] = None
    template_id: str = ""
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "source_opinion_ids", tuple(self.source_opinion_ids))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        if self.scope is SummaryScope.THEME and not self.theme_id:
            raise InvalidRecord("theme summaries need a theme_id")

    @staticmethod
    def theme_key(product_id: str, theme_id: str) -> str:
        return f"{product_id}|{theme_id}"

    @property
    def summary_id(self) -> str:
        return short_id(self.scope.value, self.key)

    def word_count(self) -> int:
        return len(self.text.split())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "summary_id": self.summary_id,
            "scope": self.scope.value,
            "key": self.key,
            "product_id": self.product_id,
            "theme_id": self.theme_id,
            "text": self.text,
            "source_opinion_ids": list(self.source_opinion_ids),
            "template_id": self.template_id,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Summary":
        _require(data, "scope", "key", "product_id", "text", "source_opinion_ids")
        return cls(
            scope=SummaryScope(data["scope"]),
            key=str(data["key"]),
            product_id=str(data["product_id"]),
            text=str(data["text"]),
            source_opinion_ids=tuple(data["source_opinion_ids"]),
            theme_id=data.get("theme_id"),
            template_id=str(data.get("template_id", "")),
            warnings=tuple(data.get("warnings", ())),
        )
