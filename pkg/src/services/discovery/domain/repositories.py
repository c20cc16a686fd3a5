from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List, Sequence
from src.services.corpus.domain.entities import OpinionTuple
from .entities import DiscoveryOutput


class DiscoveryRepository(ABC):
    """Discovery output repository interface"""

    @abstractmethod
    async def save(self, outputs: Sequence[DiscoveryOutput], frequencies: Dict[str, int], run_id: str) -> List[Path]:
        """Replace stored tuples, frequencies and audit; return the written paths"""
        pass

    @abstractmethod
    async def list_tuples(self) -> List[OpinionTuple]:
        """Discovered tuples in stored order"""
        pass

    @abstractmethod
    async def load_frequencies(self) -> Dict[str, int]:
        """Normalized theme key to tuple count"""
        pass
