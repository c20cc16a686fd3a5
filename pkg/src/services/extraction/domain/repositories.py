from abc import ABC, abstractmethod
from pathlib import Path
from typing import Sequence
from .entities import ReviewExtraction


class ExtractionAuditRepository(ABC):
    """Per-review audit of extraction passes and validation verdicts"""

    @abstractmethod
    async def save(self, extractions: Sequence[ReviewExtraction], run_id: str) -> Path:
        """Replace the stored audit and return its path"""
        pass
