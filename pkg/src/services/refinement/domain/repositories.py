from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List, Optional
from .entities import HumanDecisionFile, RefinementOutcome


class DecisionRepository(ABC):
    """Curator decision file interface"""

    @abstractmethod
    async def load(self) -> Optional[HumanDecisionFile]:
        """Return the decisions, or None when no decision file exists"""
        pass


class RefinementReportRepository(ABC):
    """Exports supporting human review"""

    @abstractmethod
    async def save(self, outcome: RefinementOutcome, aspects: Dict[str, Dict[str, int]], run_id: str) -> List[Path]:
        """Write flagged themes and aspect frequency tables"""
        pass
