from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from src.services.corpus.domain.entities import OpinionTuple
from src.services.discovery.domain.entities import DroppedTuple


@dataclass(frozen=True)
class PassResult:
    """One shuffled extraction pass over a review"""
    pass_index: int
    seed: int
    permutation: Tuple[str, ...]
    tuples: Tuple[OpinionTuple, ...] = ()
    dropped: Tuple[DroppedTuple, ...] = ()
    raw_response: str = ""
    error: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.error is None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pass_index": self.pass_index,
            "seed": self.seed,
            "permutation": list(self.permutation),
            "raw_response": self.raw_response,
            "opinion_ids": [t.opinion_id for t in self.tuples],
            "dropped": [d.to_dict() for d in self.dropped],
            "error": self.error,
        }


@dataclass(frozen=True)
class ValidationRecord:
    """Binary validation verdict for one tuple, with the model's justification"""
    opinion_id: str
    theme: str
    accepted: bool
    response: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "opinion_id": self.opinion_id,
            "theme": self.theme,
            "accepted": self.accepted,
            "response": self.response,
        }


@dataclass(frozen=True)
class ReviewExtraction:
    """Validated tuples of one review plus the audit trail that produced them"""
    review_id: str
    candidates: Tuple[OpinionTuple, ...]
    validated: Tuple[OpinionTuple, ...]
    passes: Tuple[PassResult, ...]
    validations: Tuple[ValidationRecord, ...]

    def audit_record(self) -> Dict[str, Any]:
        return {
            "review_id": self.review_id,
            "passes": [p.to_dict() for p in self.passes],
            "candidate_ids": [t.opinion_id for t in self.candidates],
            "validations": [v.to_dict() for v in self.validations],
        }
