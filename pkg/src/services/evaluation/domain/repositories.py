from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Sequence


class EvaluationReportRepository(ABC):
    """Evaluation outputs repository interface"""

    @abstractmethod
    async def save_report(self, report: Dict[str, Any], run_id: str) -> Path:
        """Replace the evaluation report and return its path"""
        pass

    @abstractmethod
    async def save_alignscore_pairs(self, pairs: Sequence[Dict[str, Any]], run_id: str) -> Path:
        """Replace the exported (context, claim) pairs and return their path"""
        pass

