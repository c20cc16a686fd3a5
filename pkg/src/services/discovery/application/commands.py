from dataclasses import dataclass


@dataclass
class DiscoverThemesCommand:
    """Command to run unconstrained discovery over the review corpus"""
    run_id: str
    template_id: str = "discovery_space"
    workers: int = 4
