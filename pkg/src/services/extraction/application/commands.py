from dataclasses import dataclass


@dataclass
class ExtractOpinionsCommand:
    """Command to run shuffled extraction and validation over the corpus"""
    run_id: str
    workers: int = 4
