import asyncio
from pathlib import Path
from typing import Sequence, Union

from src.shared.jsonl import write_jsonl
from ..domain.entities import ReviewExtraction
from ..domain.repositories import ExtractionAuditRepository

OPINIONS_FILE = "validated_opinions.jsonl"
AUDIT_FILE = "extraction_audit.jsonl"


class JsonlExtractionAuditRepository(ExtractionAuditRepository):
    """JSONL implementation of ExtractionAuditRepository"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    async def save(self, extractions: Sequence[ReviewExtraction], run_id: str) -> Path:
        records = [{**e.audit_record(), "run_id": run_id} for e in extractions]
        await asyncio.to_thread(write_jsonl, self.path, records)
        return self.path
