import asyncio
import logging
from pathlib import Path
from typing import List, Sequence, Union

from src.prompts.catalog import BUILTIN_PREFIX, load_builtin_theme_records
from src.shared.errors import InvalidRecord, MissingInput
from src.shared.jsonl import iter_jsonl, write_jsonl
from ..domain.entities import OpinionTuple, Review, ThemeDefinition, ThemeSet
from ..domain.repositories import OpinionRepository, ReviewRepository, ThemeRepository

logger = logging.getLogger(__name__)


def _ensure_exists(path: Path) -> None:
    if not path.is_file():
        raise MissingInput(path)


def _load_reviews(path: Path) -> List[Review]:
    _ensure_exists(path)
    reviews: List[Review] = []
    seen = set()
    for number, record in enumerate(iter_jsonl(path), start=1):
        try:
            review = Review.from_dict(record)
        except InvalidRecord as e:
            raise InvalidRecord(f"{path}: {e}", line=number) from e
        if review.review_id in seen:
            raise InvalidRecord(f"{path}: duplicate review_id {review.review_id!r}", line=number)
        seen.add(review.review_id)
        reviews.append(review)
    return reviews


class JsonlReviewRepository(ReviewRepository):
    """JSONL implementation of ReviewRepository"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    async def list_reviews(self) -> List[Review]:
        """Load reviews.jsonl, rejecting duplicate ids"""
        reviews = await asyncio.to_thread(_load_reviews, self.path)
        logger.info(f"Loaded {len(reviews)} reviews from {self.path}")
        return reviews


class JsonlOpinionRepository(OpinionRepository):
    """JSONL implementation of OpinionRepository"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    @property
    def location(self) -> Path:
        return self.path

    async def save_all(self, opinions: Sequence[OpinionTuple], run_id: str) -> int:
        records = [
            {**o.to_dict(), "opinion_id": o.opinion_id, "run_id": run_id}
            for o in opinions
        ]
        return await asyncio.to_thread(write_jsonl, self.path, records)

    async def list_opinions(self) -> List[OpinionTuple]:
        def _load() -> List[OpinionTuple]:
            _ensure_exists(self.path)
            return [OpinionTuple.from_dict(r) for r in iter_jsonl(self.path)]

        return await asyncio.to_thread(_load)


def load_theme_set(path: Union[str, Path]) -> ThemeSet:
    path = Path(path)
    _ensure_exists(path)
    return ThemeSet.create(ThemeDefinition.from_dict(r) for r in iter_jsonl(path))


class JsonlThemeRepository(ThemeRepository):
    """JSONL implementation of ThemeRepository"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    async def save(self, theme_set: ThemeSet, run_id: str) -> Path:
        records = [{**t.to_dict(), "run_id": run_id} for t in theme_set]
        await asyncio.to_thread(write_jsonl, self.path, records)
        return self.path

    async def load(self) -> ThemeSet:
        return await asyncio.to_thread(load_theme_set, self.path)


def resolve_theme_set(reference: str) -> ThemeSet:
    """Load a theme set from a JSONL path or a ``builtin:<name>`` catalog"""
    if reference.startswith(BUILTIN_PREFIX):
        records = load_builtin_theme_records(reference[len(BUILTIN_PREFIX):])
        return ThemeSet.create(ThemeDefinition.from_dict(r) for r in records)
    return load_theme_set(reference)
