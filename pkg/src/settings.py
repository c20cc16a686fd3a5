import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from src.shared.errors import ConfigError
from src.shared.seeding import canonical_json, sha256_text

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ProviderConfig(_Section):
    """Chat-completion and embedding endpoint settings"""
    backend: Literal["live", "mock"] = Field(default="mock", description="live HTTP endpoint or offline mock")
    base_url: str = Field(default="http://localhost:8080", description="Adapter base URL (POST /chat, POST /embed)")
    api_key_env_var: str = Field(default="REVIEW_DIGEST_API_KEY", description="Env var holding the bearer token")
    max_parallel: int = Field(default=4, ge=1, description="Maximum simultaneous live calls")
    max_retries: int = Field(default=3, ge=0, description="Retries on transient failures and malformed payloads")
    backoff_base_ms: int = Field(default=500, gt=0, description="Base delay for exponential backoff")
    timeout_seconds: float = Field(default=60.0, gt=0, description="Per-request timeout")
    embedding_model: str = Field(default="all-MiniLM-L6-v2", description="Embedding model identifier")
    mock_strict: bool = Field(default=False, description="Mock raises on unscripted prompts instead of answering heuristically")
    mock_embedding_dim: int = Field(default=32, ge=1, description="Bucket count of the mock embedder")
    mock_script: Optional[str] = Field(default=None, description="JSON file mapping prompt hashes to scripted responses")

    def resolve_api_key(self) -> str:
        key = os.environ.get(self.api_key_env_var, "")
        if not key:
            raise ConfigError(f"Environment variable {self.api_key_env_var} is not set")
        return key


class ModelSettings(_Section):
    """Per-stage model identifiers"""
    discovery: str = "gpt-4.1"
    extraction: str = "gpt-4.1"
    summarization: str = "gpt-4o"
    judge: str = "gpt-4o"
    temperature: float = Field(default=0.0, ge=0.0)
    max_tokens: int = Field(default=1024, gt=0)


class TemplateSettings(_Section):
    """Prompt template ids per stage"""
    discovery: str = "discovery_space"
    extraction: str = "extraction_space"
    validation: str = "validation_space"
    theme_summary: str = "theme_summary_space"
    product_summary: str = "product_summary_space"
    redundancy_summary: str = "redundancy_theme_summary"
    judge_coverage: str = "judge_coverage"
    judge_faithfulness: str = "judge_faithfulness"
    sentiment_score: str = "sentiment_score"
    geval: str = "geval_space"
    theme_identification: str = "theme_identification_space"
    examples_file: Optional[str] = Field(default=None, description="Few-shot examples keyed by template id")


class RefinementConfig(_Section):
    """Theme refinement thresholds"""
    min_frequency: int = Field(default=100, ge=0)
    similarity_threshold: float = Field(default=0.85, gt=0.0, le=1.0, description="Cosine threshold tau")
    flag_frequency: int = Field(default=50, ge=0)
    require_human: bool = Field(default=False, description="Pause when flagged themes have no decisions file")
    existing_theme_set: Optional[str] = Field(default=None, description="Path or builtin:<name> of the current theme set")


class ExtractionConfig(_Section):
    """Constrained extraction settings"""
    k_shuffles: int = Field(default=3, ge=1)
    shuffle_seed: Optional[int] = Field(default=None, description="Defaults to a seed derived from the master seed")
    validation_model: str = "gpt-4.1-mini"


class ClusteringSettings(_Section):
    min_samples: int = Field(default=5, ge=1)
    min_cluster_size: int = Field(default=5, ge=2)
    cluster_selection_epsilon: float = Field(default=0.05, ge=0.0)
    allow_single_cluster: bool = True
    representatives_per_cluster: int = Field(default=3, ge=1)


class SummarizationSettings(_Section):
    include_noise_opinions: bool = True
    shuffle_opinions: bool = False
    word_bounds: Optional[Tuple[int, int]] = None

    @field_validator("word_bounds")
    @classmethod
    def _ordered_bounds(cls, value):
        if value is not None and not (0 < value[0] <= value[1]):
            raise ValueError("word_bounds must satisfy 0 < min <= max")
        return value


class BenchmarkSettings(_Section):
    mmr_lambda: float = Field(default=0.8, ge=0.0, le=1.0)
    mmr_max_selected: int = Field(default=10, ge=1)
    target: int = Field(default=10, ge=1)
    max_centroid_distance: float = Field(default=0.2, ge=0.0)
    min_pairwise_similarity: float = Field(default=0.7, ge=-1.0, le=1.0)
    orderings: List[Literal["grouped", "shuffled"]] = Field(default_factory=lambda: ["grouped", "shuffled"])
    patterns_file: Optional[str] = None


class EvaluationSettings(_Section):
    geval_runs: int = Field(default=3, ge=1)
    position_debias: bool = True
    source_themes: Literal["prompt", "opinions"] = "prompt"
    stress_test: bool = False
    top_themes: int = Field(default=6, ge=1)


class PathSettings(_Section):
    reviews: str = "reviews.jsonl"
    decisions: Optional[str] = Field(default=None, description="decisions.json; defaults to <out_dir>/decisions.json")
    out_dir: str = "out"


class PipelineSettings(BaseSettings):
    """Run configuration loaded from one JSON file plus CLI overrides"""
    model_config = SettingsConfigDict(extra="forbid", frozen=True)

    seed: int = Field(default=13, description="Master seed; every stage seed derives from it")
    workers: int = Field(default=4, ge=1, description="Worker pool size")
    log_level: str = Field(default="INFO")
    provider: ProviderConfig = Field(default_factory=ProviderConfig)
    models: ModelSettings = Field(default_factory=ModelSettings)
    templates: TemplateSettings = Field(default_factory=TemplateSettings)
    refinement: RefinementConfig = Field(default_factory=RefinementConfig)
    extraction: ExtractionConfig = Field(default_factory=ExtractionConfig)
    clustering: ClusteringSettings = Field(default_factory=ClusteringSettings)
    summarization: SummarizationSettings = Field(default_factory=SummarizationSettings)
    benchmark: BenchmarkSettings = Field(default_factory=BenchmarkSettings)
    evaluation: EvaluationSettings = Field(default_factory=EvaluationSettings)
    paths: PathSettings = Field(default_factory=PathSettings)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # environment only supplies secrets, read through ProviderConfig.resolve_api_key
        return (init_settings,)

    @model_validator(mode="after")
    def _known_log_level(self):
        if logging.getLevelName(self.log_level.upper()) == f"Level {self.log_level.upper()}":
            raise ValueError(f"Unknown log level {self.log_level}")
        return self

    @classmethod
    def load(
        cls,
        path: Optional[Union[str, Path]] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ) -> "PipelineSettings":
        """Load settings from a JSON file, then apply nested overrides"""
        data: Dict[str, Any] = {}
        if path is not None:
            path = Path(path)
            if not path.is_file():
                raise ConfigError(f"Config file not found: {path}")
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as e:
                raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
            if not isinstance(data, dict):
                raise ConfigError(f"Config file {path} must contain a JSON object")
            base = path.parent
            paths = data.get("paths")
            if isinstance(paths, dict):
                data["paths"] = {
                    k: (str(base / v) if isinstance(v, str) and not Path(v).is_absolute() else v)
                    for k, v in paths.items()
                }
        merged = deep_merge(data, overrides or {})
        try:
            return cls(**merged)
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration: {e}") from e

    def config_digest(self) -> str:
        """Digest of the settings that can change stage outputs.

        Paths are covered by input digests; pool sizes and logging are excluded.
        """
        dump = self.model_dump(
            mode="json",
            exclude={
                "workers": True,
                "log_level": True,
                "paths": True,
                "provider": {"max_parallel", "timeout_seconds", "api_key_env_var"},
            },
        )
        return sha256_text(canonical_json(dump))

    @property
    def out_dir(self) -> Path:
        return Path(self.paths.out_dir)

    @property
    def decisions_path(self) -> Path:
        if self.paths.decisions:
            return Path(self.paths.decisions)
        return self.out_dir / "decisions.json"


def deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    result = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = deep_merge(result[key], value)
        else:
            result[key] = value
    return result
