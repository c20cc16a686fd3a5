import asyncio
import logging
from pathlib import Path
from typing import Any, Dict, Sequence, Union

from src.shared.jsonl import write_json, write_jsonl
from ..domain.repositories import EvaluationReportRepository

logger = logging.getLogger(__name__)

REPORT_FILE = "eval_report.json"
ALIGNSCORE_FILE = "alignscore_export.jsonl"


class JsonEvaluationReportRepository(EvaluationReportRepository):
    """Report as one JSON document, AlignScore pairs as JSONL"""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.report_path = self.out_dir / REPORT_FILE
        self.alignscore_path = self.out_dir / ALIGNSCORE_FILE

    async def save_report(self, report: Dict[str, Any], run_id: str) -> Path:
        await asyncio.to_thread(write_json, self.report_path, {**report, "run_id": run_id})
        logger.info(f"Wrote evaluation report to {self.report_path}")
        return self.report_path

    async def save_alignscore_pairs(self, pairs: Sequence[Dict[str, Any]], run_id: str) -> Path:
        records = [{**p, "run_id": run_id} for p in pairs]
        await asyncio.to_thread(write_jsonl, self.alignscore_path, records)
        return self.alignscore_path

