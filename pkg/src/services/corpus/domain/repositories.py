from abc import ABC, abstractmethod
from pathlib import Path
from typing import List, Sequence
from .entities import OpinionTuple, Review, ThemeSet


class ReviewRepository(ABC):
    """Review corpus repository interface"""

    @abstractmethod
    async def list_reviews(self) -> List[Review]:
        """List reviews in file order"""
        pass


class OpinionRepository(ABC):
    """Opinion tuple repository interface"""

    @property
    @abstractmethod
    def location(self) -> Path:
        """Where the opinions are stored"""
        pass

    @abstractmethod
    async def save_all(self, opinions: Sequence[OpinionTuple], run_id: str) -> int:
        """Replace stored opinions"""
        pass

    @abstractmethod
    async def list_opinions(self) -> List[OpinionTuple]:
        """List stored opinions in stored order"""
        pass


class ThemeRepository(ABC):
    """Theme set repository interface"""

    @abstractmethod
    async def save(self, theme_set: ThemeSet, run_id: str) -> Path:
        """Replace the stored theme set and return where it went"""
        pass

    @abstractmethod
    async def load(self) -> ThemeSet:
        """Load the stored theme set"""
        pass
