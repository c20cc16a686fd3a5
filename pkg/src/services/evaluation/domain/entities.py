from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterable, Optional

from src.shared.errors import EmptyTally, InvalidRecord

ANSWERS = (1, 2, 3)
TIE = 3


class JudgeDimension(Enum):
    """Pairwise judging criterion"""
    COVERAGE = "coverage"
    FAITHFULNESS = "faithfulness"


@dataclass(frozen=True)
class JudgeVerdict:
    """Debiased pairwise verdict: 1 or 2 names the preferred summary, 3 a tie"""
    answer: int
    reasoning: str
    dimension: JudgeDimension
    first_answer: int
    swapped_answer: Optional[int] = None
    consistent: bool = True

    def __post_init__(self):
        for value in (self.answer, self.first_answer):
            if value not in ANSWERS:
                raise InvalidRecord(f"judge answer must be 1, 2 or 3, got {value!r}")
        if self.swapped_answer is not None and self.swapped_answer not in ANSWERS:
            raise InvalidRecord(f"judge answer must be 1, 2 or 3, got {self.swapped_answer!r}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "answer": self.answer,
            "reasoning": self.reasoning,
            "dimension": self.dimension.value,
            "first_answer": self.first_answer,
            "swapped_answer": self.swapped_answer,
            "consistent": self.consistent,
        }


@dataclass
class PreferenceTally:
    """Counts of verdicts preferring summary 1, summary 2, or neither"""
    prefer_1: int = 0
    prefer_2: int = 0
    tie: int = 0

    @classmethod
    def from_answers(cls, answers: Iterable[int]) -> "PreferenceTally":
        tally = cls()
        for answer in answers:
            tally.add(answer)
        return tally

    def add(self, answer: int) -> None:
        if answer == 1:
            self.prefer_1 += 1
        elif answer == 2:
            self.prefer_2 += 1
        elif answer == TIE:
            self.tie += 1
        else:
            raise InvalidRecord(f"judge answer must be 1, 2 or 3, got {answer!r}")

    @property
    def total(self) -> int:
        return self.prefer_1 + self.prefer_2 + self.tie

    def percentages(self) -> Dict[str, float]:
        if self.total == 0:
            raise EmptyTally("no verdicts to report")
        return {
            "prefer_1": 100.0 * self.prefer_1 / self.total,
            "prefer_2": 100.0 * self.prefer_2 / self.total,
            "tie": 100.0 * self.tie / self.total,
        }

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"prefer_1": self.prefer_1, "prefer_2": self.prefer_2, "tie": self.tie}
        if self.total:
            data["percentages"] = {k: round(v, 6) for k, v in self.percentages().items()}
        return data
