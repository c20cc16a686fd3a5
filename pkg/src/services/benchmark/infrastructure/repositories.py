import asyncio
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

from src.shared.errors import InvalidRecord, MissingInput
from src.shared.jsonl import iter_jsonl, read_json, write_jsonl
from ..domain.entities import BenchVariant, DuplicationPattern
from ..domain.repositories import BenchVariantRepository, PatternRepository
from ..domain.services import builtin_patterns

logger = logging.getLogger(__name__)

VARIANTS_FILE = "bench_variants.jsonl"


class JsonlBenchVariantRepository(BenchVariantRepository):
    """JSONL implementation of BenchVariantRepository"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    async def save_all(self, variants: Sequence[BenchVariant], run_id: str) -> Path:
        records = [{**v.to_dict(), "run_id": run_id} for v in variants]
        count = await asyncio.to_thread(write_jsonl, self.path, records)
        logger.info(f"Wrote {count} benchmark variants to {self.path}")
        return self.path

    async def list_variants(self) -> List[BenchVariant]:
        def _load() -> List[BenchVariant]:
            if not self.path.is_file():
                raise MissingInput(self.path, "evaluate")
            return [BenchVariant.from_dict(r) for r in iter_jsonl(self.path)]

        return await asyncio.to_thread(_load)

    async def exists(self) -> bool:
        return self.path.is_file()


def load_patterns_file(path: Union[str, Path]) -> List[DuplicationPattern]:
    """Patterns from a JSON list of {id, counts, description}"""
    path = Path(path)
    if not path.is_file():
        raise MissingInput(path, "bench-generate")
    raw = read_json(path)
    if not isinstance(raw, list) or not raw:
        raise InvalidRecord(f"{path}: expected a non-empty list of patterns")
    patterns = sorted((DuplicationPattern.from_dict(r) for r in raw), key=lambda p: p.pattern_id)
    ids = [p.pattern_id for p in patterns]
    if len(set(ids)) != len(ids):
        raise InvalidRecord(f"{path}: duplicate pattern ids")
    return patterns


class FilePatternRepository(PatternRepository):
    """Patterns from an optional file, else the built-in table"""

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path else None

    async def load(self) -> List[DuplicationPattern]:
        if self.path is None:
            return builtin_patterns()
        return await asyncio.to_thread(load_patterns_file, self.path)
