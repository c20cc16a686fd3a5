import logging

from src.event_bus import ApplicationEventBus
from src.shared.concurrency import bounded_gather
from src.shared.stages import StageReport
from src.services.corpus.domain.repositories import OpinionRepository, ReviewRepository
from src.services.corpus.domain.services import group_tuples, product_index
from ..domain.repositories import ClusterRepository
from ..domain.services import ClusteringDomainService
from .commands import ClusterOpinionsCommand

logger = logging.getLogger(__name__)


class ClusteringCommandHandler:
    """Handler for opinion clustering commands"""

    def __init__(
        self,
        clustering_service: ClusteringDomainService,
        reviews: ReviewRepository,
        opinions: OpinionRepository,
        clusters: ClusterRepository,
        event_bus: ApplicationEventBus,
    ):
        self.clustering_service = clustering_service
        self.reviews = reviews
        self.opinions = opinions
        self.clusters = clusters
        self.event_bus = event_bus

    async def handle_cluster(self, command: ClusterOpinionsCommand) -> StageReport:
        """Handle cluster command"""
        product_of = product_index(await self.reviews.list_reviews())
        groups = group_tuples(await self.opinions.list_opinions(), product_of)
        logger.info(f"Clustering {sum(len(v) for v in groups.values())} opinions in {len(groups)} groups")

        results = await bounded_gather(
            [lambda g=g, t=t: self.clustering_service.cluster_group(g, t) for g, t in groups.items()],
            command.workers,
        )
        path = await self.clusters.save_all(results, command.run_id)
        return StageReport(
            stage="cluster",
            outputs=[path],
            counts={
                "groups": len(results),
                "clusters": sum(len(r.clusters) for r in results),
                "noise": sum(len(r.noise_ids) for r in results),
            },
        )
