from abc import ABC, abstractmethod
from pathlib import Path
from typing import List, Sequence
from .entities import GroupClustering


class ClusterRepository(ABC):
    """Per-group clustering repository interface"""

    @abstractmethod
    async def save_all(self, groups: Sequence[GroupClustering], run_id: str) -> Path:
        """Replace stored clusterings and return their path"""
        pass

    @abstractmethod
    async def list_groups(self) -> List[GroupClustering]:
        """List stored clusterings in group order"""
        pass
