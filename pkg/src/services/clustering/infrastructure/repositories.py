import asyncio
import logging
from pathlib import Path
from typing import List, Sequence, Union

from src.shared.errors import InvalidRecord, MissingInput
from src.shared.jsonl import iter_jsonl, write_jsonl
from ..domain.entities import GroupClustering
from ..domain.repositories import ClusterRepository

logger = logging.getLogger(__name__)

CLUSTERS_FILE = "clusters.jsonl"


class JsonlClusterRepository(ClusterRepository):
    """JSONL implementation of ClusterRepository"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    async def save_all(self, groups: Sequence[GroupClustering], run_id: str) -> Path:
        records = [{**g.to_dict(), "run_id": run_id} for g in groups]
        count = await asyncio.to_thread(write_jsonl, self.path, records)
        logger.info(f"Wrote {count} group clusterings to {self.path}")
        return self.path

    async def list_groups(self) -> List[GroupClustering]:
        def _load() -> List[GroupClustering]:
            if not self.path.is_file():
                raise MissingInput(self.path, "summarize")
            groups = []
            for number, record in enumerate(iter_jsonl(self.path), start=1):
                try:
                    groups.append(GroupClustering.from_dict(record))
                except InvalidRecord as e:
                    raise InvalidRecord(f"{self.path}: {e}", line=number) from e
            return sorted(groups, key=lambda g: g.group)

        return await asyncio.to_thread(_load)
