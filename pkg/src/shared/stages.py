from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

STAGES = ("discover", "refine", "extract", "cluster", "summarize", "bench-generate", "evaluate")
RUN_ALL_STAGES = ("discover", "refine", "extract", "cluster", "summarize", "evaluate")


@dataclass
class StageReport:
    """Outcome of one stage handler run"""
    stage: str
    outputs: List[Path] = field(default_factory=list)
    counts: Dict[str, int] = field(default_factory=dict)
    paused: bool = False
    message: str = ""
