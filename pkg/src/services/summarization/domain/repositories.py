from abc import ABC, abstractmethod
from pathlib import Path
from typing import List, Sequence

from src.services.corpus.domain.entities import Summary, SummaryScope


class SummaryRepository(ABC):
    """Theme and product summary repository interface"""

    @abstractmethod
    async def save_all(self, scope: SummaryScope, summaries: Sequence[Summary], run_id: str) -> Path:
        """Replace the stored summaries of one scope and return their path"""
        pass

    @abstractmethod
    async def list_summaries(self, scope: SummaryScope) -> List[Summary]:
        """List stored summaries of one scope in stored order"""
        pass
