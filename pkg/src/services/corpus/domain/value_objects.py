import math
from dataclasses import dataclass
from enum import Enum
from functools import total_ordering
from typing import Any, Dict, Iterable, Sequence, Tuple

import numpy as np

from src.shared.errors import DimensionMismatch, InvalidRecord, UnknownSentiment


class Sentiment(Enum):
    """Opinion sentiment enumeration"""
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"

    @classmethod
    def parse(cls, label: Any) -> "Sentiment":
        """Parse a label case-insensitively after trimming"""
        if isinstance(label, str):
            key = label.strip().casefold()
            for member in cls:
                if member.value == key:
                    return member
        raise UnknownSentiment(label)


def parse_sentiment(label: str) -> Sentiment:
    return Sentiment.parse(label)


@total_ordering
@dataclass(frozen=True)
class GroupKey:
    """Product-theme-sentiment partition key, ordered lexicographically"""
    product_id: str
    theme_id: str
    sentiment: Sentiment

    def sort_key(self) -> Tuple[str, str, str]:
        return (self.product_id, self.theme_id, self.sentiment.value)

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, GroupKey):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return f"{self.product_id}|{self.theme_id}|{self.sentiment.value}"

    def to_dict(self) -> Dict[str, str]:
        return {
            "product_id": self.product_id,
            "theme_id": self.theme_id,
            "sentiment": self.sentiment.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GroupKey":
        return cls(
            product_id=str(data["product_id"]),
            theme_id=str(data["theme_id"]),
            sentiment=Sentiment.parse(data["sentiment"]),
        )


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-length vector of finite reals"""
    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise InvalidRecord("embedding must have at least one dimension")
        if not all(math.isfinite(v) for v in values):
            raise InvalidRecord("embedding entries must be finite")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return len(self.values)

    @classmethod
    def from_array(cls, array: Iterable[float]) -> "EmbeddingVector":
        return cls(tuple(float(v) for v in array))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def normalized(self) -> "EmbeddingVector":
        """Return the L2-normalized copy"""
        norm = self.norm()
        if norm == 0.0:
            raise InvalidRecord("cannot normalize a zero vector")
        return EmbeddingVector.from_array(self.as_array() / norm)

    def cosine(self, other: "EmbeddingVector") -> float:
        if other.dim != self.dim:
            raise DimensionMismatch(self.dim, other.dim)
        a, b = self.as_array(), other.as_array()
        denom = float(np.linalg.norm(a) * np.linalg.norm(b))
        if denom == 0.0:
            return 0.0
        return float(np.clip(np.dot(a, b) / denom, -1.0, 1.0))

    def to_dict(self) -> Dict[str, Any]:
        return {"values": list(self.values), "dim": self.dim}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EmbeddingVector":
        vector = cls(tuple(data["values"]))
        if "dim" in data and int(data["dim"]) != vector.dim:
            raise DimensionMismatch(int(data["dim"]), vector.dim)
        return vector


def stack_vectors(vectors: Sequence[EmbeddingVector]) -> np.ndarray:
    """Stack vectors into an (n, dim) matrix, checking that all dims agree"""
    if not vectors:
        return np.zeros((0, 0), dtype=np.float64)
    dim = vectors[0].dim
    for vector in vectors:
        if vector.dim != dim:
            raise DimensionMismatch(dim, vector.dim)
    return np.vstack([v.as_array() for v in vectors])


def cosine_matrix(matrix: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities of the rows of ``matrix``"""
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = matrix / safe[:, None]
    return np.clip(unit @ unit.T, -1.0, 1.0)
