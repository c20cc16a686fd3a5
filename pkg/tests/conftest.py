from pathlib import Path
from typing import Any, Callable, Dict

import pytest

from src.event_bus import ApplicationEventBus
from src.prompts.catalog import PromptCatalog
from src.settings import PipelineSettings, deep_merge
from src.services.provider.infrastructure.mock_gateway import MockProviderGateway
from tests.fixtures.test_data import write_corpus


@pytest.fixture
def catalog() -> PromptCatalog:
    return PromptCatalog()


@pytest.fixture
def mock_gateway() -> MockProviderGateway:
    return MockProviderGateway()


@pytest.fixture
def event_bus() -> ApplicationEventBus:
    return ApplicationEventBus()


@pytest.fixture
def corpus_path(tmp_path: Path) -> Path:
    """3 products x 10 reviews"""
    return write_corpus(tmp_path / "reviews.jsonl")


@pytest.fixture
def make_settings(tmp_path: Path, corpus_path: Path) -> Callable[..., PipelineSettings]:
    """Mock-provider settings over the sample corpus; keyword overrides are merged in"""

    def _make(**overrides: Any) -> PipelineSettings:
        base: Dict[str, Any] = {
            "provider": {"backend": "mock"},
            "refinement": {"min_frequency": 2, "existing_theme_set": "builtin:space"},
            "evaluation": {"geval_runs": 1},
            "paths": {"reviews": str(corpus_path), "out_dir": str(tmp_path / "out")},
        }
        return PipelineSettings.load(overrides=deep_merge(base, overrides))

    return _make
