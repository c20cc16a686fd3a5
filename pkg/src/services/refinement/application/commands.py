from dataclasses import dataclass
from typing import Optional


@dataclass
class RefineThemesCommand:
    """Command to turn discovered theme frequencies into the active theme set"""
    run_id: str
    existing_theme_set: Optional[str] = None
    require_human: bool = False
