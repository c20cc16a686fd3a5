import asyncio
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Union

from src.shared.errors import InvalidRecord, MissingInput
from src.shared.jsonl import iter_jsonl, read_json, write_json, write_jsonl
from src.services.corpus.domain.entities import OpinionTuple
from ..domain.entities import DiscoveryOutput
from ..domain.repositories import DiscoveryRepository

logger = logging.getLogger(__name__)

TUPLES_FILE = "discovery_tuples.jsonl"
FREQUENCIES_FILE = "theme_frequencies.json"
AUDIT_FILE = "discovery_audit.jsonl"


class JsonlDiscoveryRepository(DiscoveryRepository):
    """Discovery outputs stored as files under the run output directory"""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.tuples_path = self.out_dir / TUPLES_FILE
        self.frequencies_path = self.out_dir / FREQUENCIES_FILE
        self.audit_path = self.out_dir / AUDIT_FILE

    def _write(self, outputs: Sequence[DiscoveryOutput], frequencies: Dict[str, int], run_id: str) -> List[Path]:
        tuples = [
            {**record, "run_id": run_id}
            for output in outputs
            for record in output.tuple_records()
        ]
        write_jsonl(self.tuples_path, tuples)
        write_json(self.frequencies_path, {
            "run_id": run_id,
            "frequencies": [{"theme_id": k, "count": v} for k, v in frequencies.items()],
        })
        write_jsonl(self.audit_path, [{**o.audit_record(), "run_id": run_id} for o in outputs])
        logger.info(f"Wrote {len(tuples)} discovered tuples over {len(frequencies)} themes to {self.out_dir}")
        return [self.tuples_path, self.frequencies_path, self.audit_path]

    async def save(self, outputs: Sequence[DiscoveryOutput], frequencies: Dict[str, int], run_id: str) -> List[Path]:
        return await asyncio.to_thread(self._write, outputs, frequencies, run_id)

    async def list_tuples(self) -> List[OpinionTuple]:
        def _load() -> List[OpinionTuple]:
            if not self.tuples_path.is_file():
                raise MissingInput(self.tuples_path, "refine")
            return [OpinionTuple.from_dict(r) for r in iter_jsonl(self.tuples_path)]

        return await asyncio.to_thread(_load)

    async def load_frequencies(self) -> Dict[str, int]:
        def _load() -> Dict[str, int]:
            if not self.frequencies_path.is_file():
                raise MissingInput(self.frequencies_path, "refine")
            data = read_json(self.frequencies_path)
            try:
                return {str(r["theme_id"]): int(r["count"]) for r in data["frequencies"]}
            except (KeyError, TypeError, ValueError) as e:
                raise InvalidRecord(f"{self.frequencies_path}: malformed frequency table") from e

        return await asyncio.to_thread(_load)
