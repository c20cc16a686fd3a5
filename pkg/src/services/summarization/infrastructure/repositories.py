import asyncio
import logging
from pathlib import Path
from typing import List, Sequence, Union

from src.shared.errors import MissingInput
from src.shared.jsonl import iter_jsonl, write_jsonl
from src.services.corpus.domain.entities import Summary, SummaryScope
from ..domain.repositories import SummaryRepository

logger = logging.getLogger(__name__)

THEME_SUMMARIES_FILE = "theme_summaries.jsonl"
PRODUCT_SUMMARIES_FILE = "product_summaries.jsonl"


class JsonlSummaryRepository(SummaryRepository):
    """Summaries stored as one JSONL file per scope"""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)

    def path_for(self, scope: SummaryScope) -> Path:
        name = THEME_SUMMARIES_FILE if scope is SummaryScope.THEME else PRODUCT_SUMMARIES_FILE
        return self.out_dir / name

    async def save_all(self, scope: SummaryScope, summaries: Sequence[Summary], run_id: str) -> Path:
        path = self.path_for(scope)
        records = [{**s.to_dict(), "run_id": run_id} for s in summaries]
        count = await asyncio.to_thread(write_jsonl, path, records)
        logger.info(f"Wrote {count} {scope.value} summaries to {path}")
        return path

    async def list_summaries(self, scope: SummaryScope) -> List[Summary]:
        path = self.path_for(scope)

        def _load() -> List[Summary]:
            if not path.is_file():
                raise MissingInput(path, "evaluate")
            return [Summary.from_dict(r) for r in iter_jsonl(path)]

        return await asyncio.to_thread(_load)
