from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from src.prompts import inputs
from src.shared.errors import EmptyInput, InvalidRecord


@dataclass(frozen=True)
class SummaryItem:
    """One line of a summary prompt"""
    label: str
    text: str
    source_id: str


@dataclass(frozen=True)
class SummaryRequestBundle:
    """Ordered prompt input for one theme or product summary"""
    key: str
    items: Tuple[SummaryItem, ...]
    template_id: str
    word_bounds: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise EmptyInput(f"no input items for summary {self.key}")
        if self.word_bounds is not None and not (0 < self.word_bounds[0] <= self.word_bounds[1]):
            raise InvalidRecord(f"invalid word bounds {self.word_bounds}")

    @classmethod
    def create(
        cls,
        key: str,
        items: Sequence[SummaryItem],
        template_id: str,
        word_bounds: Optional[Tuple[int, int]] = None,
    ) -> "SummaryRequestBundle":
        return cls(key, tuple(items), template_id, word_bounds)

    def source_ids(self) -> Tuple[str, ...]:
        seen = dict.fromkeys(item.source_id for item in self.items)
        return tuple(seen)

    def user_prompt(self) -> str:
        return inputs.opinion_lines([(item.label, item.text) for item in self.items])

    def length_warning(self, text: str) -> Optional[str]:
        """Message when the summary falls outside the word bounds, else None"""
        if self.word_bounds is None:
            return None
        low, high = self.word_bounds
        count = len(text.split())
        if low <= count <= high:
            return None
        return f"summary has {count} words, expected {low}-{high}"
