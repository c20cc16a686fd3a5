from dataclasses import dataclass


@dataclass
class ClusterOpinionsCommand:
    """Command to cluster validated opinions per product, theme and sentiment"""
    run_id: str
    workers: int = 4
