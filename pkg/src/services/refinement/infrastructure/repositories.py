import asyncio
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

from src.shared.errors import InvalidRecord
from src.shared.jsonl import read_json, write_json
from ..domain.entities import HumanDecisionFile, RefinementOutcome
from ..domain.repositories import DecisionRepository, RefinementReportRepository

logger = logging.getLogger(__name__)

FLAGGED_FILE = "flagged_themes.json"
ASPECTS_FILE = "aspect_frequencies.json"
THEME_SET_FILE = "theme_set.jsonl"


class JsonDecisionRepository(DecisionRepository):
    """decisions.json reader"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    async def load(self) -> Optional[HumanDecisionFile]:
        def _load() -> Optional[HumanDecisionFile]:
            if not self.path.is_file():
                return None
            data = read_json(self.path)
            if not isinstance(data, dict):
                raise InvalidRecord(f"{self.path}: decisions must be a JSON object")
            return HumanDecisionFile.from_dict(data)

        decisions = await asyncio.to_thread(_load)
        if decisions is not None:
            logger.info(f"Loaded human decisions from {self.path}")
        return decisions


class JsonRefinementReportRepository(RefinementReportRepository):
    """flagged_themes.json and aspect_frequencies.json writer"""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.flagged_path = self.out_dir / FLAGGED_FILE
        self.aspects_path = self.out_dir / ASPECTS_FILE

    def _write(self, outcome: RefinementOutcome, aspects: Dict[str, Dict[str, int]], run_id: str) -> List[Path]:
        write_json(self.flagged_path, {
            "run_id": run_id,
            "flagged": [f.to_dict() for f in outcome.flagged],
            "survivors": [{"theme_id": k, "count": v} for k, v in outcome.survivors.items()],
            "merged_into": outcome.merged_into,
        })
        write_json(self.aspects_path, {
            "run_id": run_id,
            "themes": [
                {"theme_id": theme, "aspects": [{"aspect": a, "count": c} for a, c in counts.items()]}
                for theme, counts in aspects.items()
            ],
        })
        return [self.flagged_path, self.aspects_path]

    async def save(self, outcome: RefinementOutcome, aspects: Dict[str, Dict[str, int]], run_id: str) -> List[Path]:
        return await asyncio.to_thread(self._write, outcome, aspects, run_id)
