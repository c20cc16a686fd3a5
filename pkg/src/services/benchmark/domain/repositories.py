from abc import ABC, abstractmethod
from pathlib import Path
from typing import List, Sequence
from .entities import BenchVariant, DuplicationPattern


class BenchVariantRepository(ABC):
    """Benchmark variant repository interface"""

    @abstractmethod
    async def save_all(self, variants: Sequence[BenchVariant], run_id: str) -> Path:
        """Replace stored variants and return their path"""
        pass

    @abstractmethod
    async def list_variants(self) -> List[BenchVariant]:
        """List stored variants"""
        pass

    @abstractmethod
    async def exists(self) -> bool:
        """Whether variants have been generated"""
        pass


class PatternRepository(ABC):
    """Source of duplication patterns"""

    @abstractmethod
    async def load(self) -> List[DuplicationPattern]:
        """Patterns in id order"""
        pass
