from pathlib import Path
from typing import Dict, Optional

from .event_bus import ApplicationEventBus
from .prompts.catalog import BUILTIN_PREFIX, PromptCatalog
from .settings import PipelineSettings
from .shared.seeding import derive_seed
from .services.benchmark.application.commands import GenerateBenchmarkCommand
from .services.benchmark.application.handlers import BenchmarkCommandHandler
from .services.benchmark.domain.entities import MmrConfig
from .services.benchmark.domain.services import BenchmarkDomainService
from .services.benchmark.infrastructure.repositories import (
    VARIANTS_FILE,
    FilePatternRepository,
    JsonlBenchVariantRepository,
)
from .services.clustering.application.commands import ClusterOpinionsCommand
from .services.clustering.application.handlers import ClusteringCommandHandler
from .services.clustering.domain.entities import HdbscanParams
from .services.clustering.domain.services import ClusteringDomainService
from .services.clustering.infrastructure.repositories import CLUSTERS_FILE, JsonlClusterRepository
from .services.corpus.infrastructure.repositories import (
    JsonlOpinionRepository,
    JsonlReviewRepository,
    JsonlThemeRepository,
)
from .services.discovery.application.commands import DiscoverThemesCommand
from .services.discovery.application.handlers import DiscoveryCommandHandler
from .services.discovery.domain.services import DiscoveryDomainService
from .services.discovery.infrastructure.repositories import FREQUENCIES_FILE, TUPLES_FILE, JsonlDiscoveryRepository
from .services.evaluation.application.commands import EvaluateCommand
from .services.evaluation.application.handlers import EvaluationCommandHandler
from .services.evaluation.domain.services import EvaluationDomainService
from .services.evaluation.infrastructure.repositories import JsonEvaluationReportRepository
from .services.extraction.application.commands import ExtractOpinionsCommand
from .services.extraction.application.handlers import ExtractionCommandHandler
from .services.extraction.domain.services import ExtractionDomainService
from .services.extraction.infrastructure.repositories import (
    AUDIT_FILE,
    OPINIONS_FILE,
    JsonlExtractionAuditRepository,
)
from .services.integration.manifest import EVENTS_FILE, RUNS_DIR
from .services.integration.service_orchestrator import PipelineOrchestrator, StagePlan
from .services.provider.domain.gateway import ProviderGateway
from .services.provider.infrastructure.http_gateway import HttpProviderGateway
from .services.provider.infrastructure.mock_gateway import MockProviderGateway
from .services.refinement.application.commands import RefineThemesCommand
from .services.refinement.application.handlers import RefinementCommandHandler
from .services.refinement.domain.services import RefinementDomainService
from .services.refinement.infrastructure.repositories import (
    THEME_SET_FILE,
    JsonDecisionRepository,
    JsonRefinementReportRepository,
)
from .services.summarization.application.commands import SummarizeCommand
from .services.summarization.application.handlers import SummarizationCommandHandler
from .services.summarization.domain.services import SummarizationDomainService
from .services.summarization.infrastructure.repositories import (
    PRODUCT_SUMMARIES_FILE,
    THEME_SUMMARIES_FILE,
    JsonlSummaryRepository,
)


# Provider Dependencies
def get_provider_gateway(settings: PipelineSettings) -> ProviderGateway:
    """Get the gateway selected by provider.backend"""
    provider = settings.provider
    if provider.backend == "live":
        return HttpProviderGateway(provider, api_key=provider.resolve_api_key())
    gateway = MockProviderGateway(
        strict=provider.mock_strict,
        embedding_dim=provider.mock_embedding_dim,
        max_retries=provider.max_retries,
    )
    if provider.mock_script:
        gateway.load_script(provider.mock_script)
    return gateway


def get_prompt_catalog(settings: PipelineSettings) -> PromptCatalog:
    return PromptCatalog.with_examples_file(settings.templates.examples_file)


def get_event_bus(settings: PipelineSettings) -> ApplicationEventBus:
    return ApplicationEventBus(log_path=settings.out_dir / RUNS_DIR / EVENTS_FILE)


# Domain Service Dependencies
def get_discovery_service(settings: PipelineSettings, gateway: ProviderGateway, catalog: PromptCatalog) -> DiscoveryDomainService:
    return DiscoveryDomainService(
        gateway,
        catalog,
        model=settings.models.discovery,
        temperature=settings.models.temperature,
        max_tokens=settings.models.max_tokens,
        seed=settings.seed,
    )


def get_extraction_service(settings: PipelineSettings, gateway: ProviderGateway, catalog: PromptCatalog) -> ExtractionDomainService:
    shuffle_seed = settings.extraction.shuffle_seed
    if shuffle_seed is None:
        shuffle_seed = derive_seed(settings.seed, "extract")
    return ExtractionDomainService(
        gateway,
        catalog,
        settings.extraction,
        shuffle_seed=shuffle_seed,
        model=settings.models.extraction,
        extraction_template=settings.templates.extraction,
        validation_template=settings.templates.validation,
        temperature=settings.models.temperature,
        max_tokens=settings.models.max_tokens,
    )


def get_clustering_service(settings: PipelineSettings, gateway: ProviderGateway) -> ClusteringDomainService:
    cfg = settings.clustering
    params = HdbscanParams(
        min_samples=cfg.min_samples,
        min_cluster_size=cfg.min_cluster_size,
        cluster_selection_epsilon=cfg.cluster_selection_epsilon,
        allow_single_cluster=cfg.allow_single_cluster,
    )
    return ClusteringDomainService(gateway, params, cfg.representatives_per_cluster)


def get_summarization_service(settings: PipelineSettings, gateway: ProviderGateway, catalog: PromptCatalog) -> SummarizationDomainService:
    return SummarizationDomainService(
        gateway,
        catalog,
        model=settings.models.summarization,
        theme_template=settings.templates.theme_summary,
        product_template=settings.templates.product_summary,
        redundancy_template=settings.templates.redundancy_summary,
        word_bounds=settings.summarization.word_bounds,
        temperature=settings.models.temperature,
        max_tokens=settings.models.max_tokens,
    )


def get_benchmark_service(settings: PipelineSettings, gateway: ProviderGateway) -> BenchmarkDomainService:
    cfg = settings.benchmark
    return BenchmarkDomainService(
        gateway,
        MmrConfig(cfg.mmr_lambda, cfg.mmr_max_selected),
        target=cfg.target,
        seed=derive_seed(settings.seed, "bench-generate"),
        max_centroid_distance=cfg.max_centroid_distance,
        min_pairwise_similarity=cfg.min_pairwise_similarity,
    )


def get_evaluation_service(settings: PipelineSettings, gateway: ProviderGateway, catalog: PromptCatalog) -> EvaluationDomainService:
    templates = settings.templates
    return EvaluationDomainService(
        gateway,
        catalog,
        model=settings.models.judge,
        geval_template=templates.geval,
        theme_identification_template=templates.theme_identification,
        sentiment_template=templates.sentiment_score,
        coverage_template=templates.judge_coverage,
        faithfulness_template=templates.judge_faithfulness,
        geval_runs=settings.evaluation.geval_runs,
        position_debias=settings.evaluation.position_debias,
        temperature=settings.models.temperature,
        max_tokens=settings.models.max_tokens,
    )


def _existing_theme_file(reference: Optional[str]) -> Optional[Path]:
    if not reference or reference.startswith(BUILTIN_PREFIX):
        return None
    return Path(reference)


# Stage wiring
def get_stage_plans(
    settings: PipelineSettings,
    gateway: ProviderGateway,
    event_bus: ApplicationEventBus,
) -> Dict[str, StagePlan]:
    """One plan per stage: the handler invocation plus the files it reads"""
    out = settings.out_dir
    workers = settings.workers
    catalog = get_prompt_catalog(settings)

    reviews_path = Path(settings.paths.reviews)
    reviews = JsonlReviewRepository(reviews_path)
    opinions = JsonlOpinionRepository(out / OPINIONS_FILE)
    themes = JsonlThemeRepository(out / THEME_SET_FILE)
    discovery_store = JsonlDiscoveryRepository(out)
    clusters = JsonlClusterRepository(out / CLUSTERS_FILE)
    summaries = JsonlSummaryRepository(out)
    variants = JsonlBenchVariantRepository(out / VARIANTS_FILE)
    summarization_service = get_summarization_service(settings, gateway, catalog)

    discovery = DiscoveryCommandHandler(get_discovery_service(settings, gateway, catalog), reviews, discovery_store, event_bus)
    refinement = RefinementCommandHandler(
        RefinementDomainService(gateway, settings.refinement),
        discovery_store,
        JsonRefinementReportRepository(out),
        JsonDecisionRepository(settings.decisions_path),
        themes,
        event_bus,
    )
    extraction = ExtractionCommandHandler(
        get_extraction_service(settings, gateway, catalog),
        reviews,
        themes,
        opinions,
        JsonlExtractionAuditRepository(out / AUDIT_FILE),
        event_bus,
    )
    clustering = ClusteringCommandHandler(get_clustering_service(settings, gateway), reviews, opinions, clusters, event_bus)
    summarization = SummarizationCommandHandler(summarization_service, opinions, clusters, summaries, event_bus)
    benchmark = BenchmarkCommandHandler(
        get_benchmark_service(settings, gateway),
        opinions,
        clusters,
        FilePatternRepository(settings.benchmark.patterns_file),
        variants,
        event_bus,
    )
    evaluation = EvaluationCommandHandler(
        get_evaluation_service(settings, gateway, catalog),
        summarization_service,
        reviews,
        opinions,
        themes,
        summaries,
        variants,
        JsonEvaluationReportRepository(out),
        event_bus,
    )

    shuffle_seed = derive_seed(settings.seed, "summarize") if settings.summarization.shuffle_opinions else None
    existing = settings.refinement.existing_theme_set
    existing_file = _existing_theme_file(existing)
    patterns_file = Path(settings.benchmark.patterns_file) if settings.benchmark.patterns_file else None

    return {
        "discover": StagePlan(
            run=lambda run_id: discovery.handle_discover(
                DiscoverThemesCommand(run_id, settings.templates.discovery, workers)
            ),
            required_inputs=[reviews_path],
        ),
        "refine": StagePlan(
            run=lambda run_id: refinement.handle_refine(
                RefineThemesCommand(run_id, existing, settings.refinement.require_human)
            ),
            required_inputs=[out / TUPLES_FILE, out / FREQUENCIES_FILE] + ([existing_file] if existing_file else []),
            optional_inputs=[settings.decisions_path],
        ),
        "extract": StagePlan(
            run=lambda run_id: extraction.handle_extract(ExtractOpinionsCommand(run_id, workers)),
            required_inputs=[reviews_path, out / THEME_SET_FILE],
        ),
        "cluster": StagePlan(
            run=lambda run_id: clustering.handle_cluster(ClusterOpinionsCommand(run_id, workers)),
            required_inputs=[reviews_path, out / OPINIONS_FILE],
        ),
        "summarize": StagePlan(
            run=lambda run_id: summarization.handle_summarize(SummarizeCommand(
                run_id, settings.summarization.include_noise_opinions, shuffle_seed, workers,
            )),
            required_inputs=[out / OPINIONS_FILE, out / CLUSTERS_FILE],
        ),
        "bench-generate": StagePlan(
            run=lambda run_id: benchmark.handle_generate(GenerateBenchmarkCommand(
                run_id, list(settings.benchmark.orderings), workers,
            )),
            required_inputs=[out / OPINIONS_FILE, out / CLUSTERS_FILE] + ([patterns_file] if patterns_file else []),
        ),
        "evaluate": StagePlan(
            run=lambda run_id: evaluation.handle_evaluate(EvaluateCommand(
                run_id,
                settings.evaluation.source_themes,
                settings.evaluation.top_themes,
                settings.evaluation.stress_test,
                workers,
            )),
            required_inputs=[
                reviews_path,
                out / OPINIONS_FILE,
                out / THEME_SET_FILE,
                out / THEME_SUMMARIES_FILE,
                out / PRODUCT_SUMMARIES_FILE,
            ],
            optional_inputs=[out / VARIANTS_FILE] if settings.evaluation.stress_test else [],
        ),
    }


def get_orchestrator(settings: PipelineSettings, gateway: Optional[ProviderGateway] = None) -> PipelineOrchestrator:
    """Get PipelineOrchestrator with dependencies injected"""
    gateway = gateway or get_provider_gateway(settings)
    event_bus = get_event_bus(settings)
    return PipelineOrchestrator(settings, get_stage_plans(settings, gateway, event_bus), event_bus, gateway)
