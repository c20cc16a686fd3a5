import re
import unicodedata
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

from src.shared.errors import InvalidRecord
from src.shared.seeding import sha256_text
from src.services.corpus.domain.entities import OpinionTuple

_NON_WORD = re.compile(r"[\W_]+")


def normalize_theme_key(theme: str) -> str:
    """Canonical lower_snake_case key used to merge discovered theme names.

    Accents are folded away ("café" and "cafe" share a key) and letters of any
    script are kept. A name with no letters or digits gets a digest key.
    """
    decomposed = unicodedata.normalize("NFKD", theme.strip())
    folded = "".join(ch for ch in decomposed if not unicodedata.combining(ch)).casefold()
    key = _NON_WORD.sub("_", folded).strip("_")
    return key or f"theme_{sha256_text(theme.strip())[:12]}"


@dataclass(frozen=True)
class DroppedTuple:
    """Record of a payload item that could not become an OpinionTuple"""
    review_id: str
    theme: str
    reason: str
    item: Any = None

    def to_dict(self) -> Dict[str, Any]:
        return {"review_id": self.review_id, "theme": self.theme, "reason": self.reason, "item": self.item}


@dataclass(frozen=True)
class DiscoveryOutput:
    """Tuples discovered in one review"""
    review_id: str
    tuples: Tuple[OpinionTuple, ...] = ()
    dropped: Tuple[DroppedTuple, ...] = ()
    raw_response: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tuples", tuple(self.tuples))
        object.__setattr__(self, "dropped", tuple(self.dropped))
        for item in self.tuples:
            if item.review_id != self.review_id:
                raise InvalidRecord(
                    f"tuple from review {item.review_id!r} inside output of {self.review_id!r}"
                )

    def tuple_records(self) -> List[Dict[str, Any]]:
        return [
            {**t.to_dict(), "theme_key": normalize_theme_key(t.theme), "opinion_id": t.opinion_id}
            for t in self.tuples
        ]

    def audit_record(self) -> Dict[str, Any]:
        return {
            "review_id": self.review_id,
            "raw_response": self.raw_response,
            "tuple_count": len(self.tuples),
            "dropped": [d.to_dict() for d in self.dropped],
        }
