import logging

from src.event_bus import ApplicationEventBus
from src.shared.concurrency import bounded_gather
from src.shared.errors import InsufficientOpinions
from src.shared.events import BenchGroupSkippedEvent
from src.shared.stages import StageReport
from src.services.clustering.domain.entities import GroupClustering
from src.services.clustering.domain.repositories import ClusterRepository
from src.services.corpus.domain.repositories import OpinionRepository
from ..domain.entities import Ordering
from ..domain.repositories import BenchVariantRepository, PatternRepository
from ..domain.services import BenchmarkDomainService, generate_benchmark
from .commands import GenerateBenchmarkCommand

logger = logging.getLogger(__name__)


class BenchmarkCommandHandler:
    """Handler for redundancy benchmark generation"""

    def __init__(
        self,
        benchmark_service: BenchmarkDomainService,
        opinions: OpinionRepository,
        clusters: ClusterRepository,
        patterns: PatternRepository,
        variants: BenchVariantRepository,
        event_bus: ApplicationEventBus,
    ):
        self.benchmark_service = benchmark_service
        self.opinions = opinions
        self.clusters = clusters
        self.patterns = patterns
        self.variants = variants
        self.event_bus = event_bus

    async def handle_generate(self, command: GenerateBenchmarkCommand) -> StageReport:
        """Handle bench-generate command; groups without enough opinions are skipped"""
        opinions = {o.opinion_id: o for o in await self.opinions.list_opinions()}
        groups = await self.clusters.list_groups()
        patterns = await self.patterns.load()
        orderings = [Ordering(o) for o in command.orderings]

        async def _base(clustering: GroupClustering):
            try:
                return await self.benchmark_service.build_base(clustering, opinions)
            except InsufficientOpinions as e:
                logger.warning(f"Skipping group {clustering.group}: {e}")
                return e

        outcomes = await bounded_gather([lambda g=g: _base(g) for g in groups], command.workers)
        bases = {}
        for clustering, outcome in zip(groups, outcomes):
            if isinstance(outcome, InsufficientOpinions):
                await self.event_bus.publish(BenchGroupSkippedEvent(
                    aggregate_id=str(clustering.group),
                    data={"available": outcome.available, "target": outcome.target},
                ))
                continue
            bases[clustering.group] = outcome

        variants = generate_benchmark(bases, patterns, orderings, self.benchmark_service.seed)
        path = await self.variants.save_all(variants, command.run_id)
        return StageReport(
            stage="bench-generate",
            outputs=[path],
            counts={"groups": len(bases), "skipped": len(groups) - len(bases), "variants": len(variants)},
        )
