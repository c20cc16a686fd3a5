from dataclasses import dataclass, field
from typing import List


@dataclass
class GenerateBenchmarkCommand:
    """Command to build redundancy benchmark variants from clustered groups"""
    run_id: str
    orderings: List[str] = field(default_factory=lambda: ["grouped", "shuffled"])
    workers: int = 4
