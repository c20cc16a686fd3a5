from dataclasses import dataclass


@dataclass
class EvaluateCommand:
    """Command to score summaries and, optionally, run the redundancy stress test"""
    run_id: str
    source_themes: str = "prompt"
    top_themes: int = 6
    stress_test: bool = False
    workers: int = 4
