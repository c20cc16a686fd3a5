from dataclasses import dataclass
from typing import Optional


@dataclass
class SummarizeCommand:
    """Command to generate theme summaries and then product summaries"""
    run_id: str
    include_noise: bool = True
    shuffle_seed: Optional[int] = None
    workers: int = 4
