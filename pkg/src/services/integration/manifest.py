import asyncio
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

from src.shared.errors import InvalidRecord
from src.shared.jsonl import read_json, write_json
from src.shared.seeding import sha256_file, short_id

logger = logging.getLogger(__name__)

RUNS_DIR = ".runs"
EVENTS_FILE = "events.jsonl"


def digest_files(paths: Iterable[Path]) -> Dict[str, Optional[str]]:
    """sha256 per path; None for a file that does not exist"""
    return {str(p): (sha256_file(p) if p.is_file() else None) for p in sorted(set(paths), key=str)}


def derive_run_id(stage: str, config_digest: str, input_digests: Dict[str, Optional[str]]) -> str:
    """Keyed on file names and digests, not on directories"""
    named = sorted((Path(p).name, d or "") for p, d in input_digests.items())
    return short_id(stage, config_digest, named)


@dataclass
class RunManifest:
    """Record of one completed stage execution"""
    run_id: str
    stage: str
    config_digest: str
    seed: int
    inputs: Dict[str, Optional[str]] = field(default_factory=dict)
    outputs: Dict[str, Optional[str]] = field(default_factory=dict)
    counts: Dict[str, int] = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""

    def outputs_intact(self) -> bool:
        """True when every recorded output still has its recorded digest"""
        current = digest_files(Path(p) for p in self.outputs)
        return all(current[p] is not None and current[p] == d for p, d in self.outputs.items())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "stage": self.stage,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "inputs": dict(self.inputs),
            "outputs": dict(self.outputs),
            "counts": dict(self.counts),
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        try:
            return cls(
                run_id=str(data["run_id"]),
                stage=str(data["stage"]),
                config_digest=str(data["config_digest"]),
                seed=int(data["seed"]),
                inputs=dict(data.get("inputs", {})),
                outputs=dict(data.get("outputs", {})),
                counts=dict(data.get("counts", {})),
                started_at=str(data.get("started_at", "")),
                finished_at=str(data.get("finished_at", "")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidRecord(f"malformed run manifest: {e}") from e


class ManifestStore:
    """One manifest file per stage under <out_dir>/.runs"""

    def __init__(self, out_dir: Union[str, Path]):
        self.runs_dir = Path(out_dir) / RUNS_DIR

    def path_for(self, stage: str) -> Path:
        return self.runs_dir / f"{stage}.json"

    async def load(self, stage: str) -> Optional[RunManifest]:
        path = self.path_for(stage)
        if not path.is_file():
            return None
        try:
            return RunManifest.from_dict(await asyncio.to_thread(read_json, path))
        except InvalidRecord as e:
            logger.warning(f"Ignoring unreadable manifest {path}: {e}")
            return None

    async def save(self, manifest: RunManifest) -> Path:
        path = self.path_for(manifest.stage)
        await asyncio.to_thread(write_json, path, manifest.to_dict())
        return path
