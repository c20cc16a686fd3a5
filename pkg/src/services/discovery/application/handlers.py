import logging

from src.event_bus import ApplicationEventBus
from src.shared.concurrency import bounded_gather
from src.shared.events import RecordDroppedEvent
from src.shared.stages import StageReport
from src.services.corpus.domain.repositories import ReviewRepository
from ..domain.repositories import DiscoveryRepository
from ..domain.services import DiscoveryDomainService, tally_theme_frequencies
from .commands import DiscoverThemesCommand

logger = logging.getLogger(__name__)


class DiscoveryCommandHandler:
    """Handler for discovery commands with event publishing"""

    def __init__(
        self,
        discovery_service: DiscoveryDomainService,
        reviews: ReviewRepository,
        store: DiscoveryRepository,
        event_bus: ApplicationEventBus,
    ):
        self.discovery_service = discovery_service
        self.reviews = reviews
        self.store = store
        self.event_bus = event_bus

    async def handle_discover(self, command: DiscoverThemesCommand) -> StageReport:
        """Handle discover command"""
        reviews = sorted(await self.reviews.list_reviews(), key=lambda r: r.review_id)
        logger.info(f"Discovering themes in {len(reviews)} reviews with {command.template_id}")

        outputs = await bounded_gather(
            [lambda r=r: self.discovery_service.discover(r, command.template_id) for r in reviews],
            command.workers,
        )

        for output in outputs:
            for dropped in output.dropped:
                await self.event_bus.publish(RecordDroppedEvent(
                    aggregate_id=output.review_id,
                    aggregate_type="Review",
                    data={"stage": "discover", **dropped.to_dict()},
                ))

        frequencies = tally_theme_frequencies(outputs)
        paths = await self.store.save(outputs, frequencies, command.run_id)
        return StageReport(
            stage="discover",
            outputs=paths,
            counts={
                "reviews": len(reviews),
                "tuples": sum(len(o.tuples) for o in outputs),
                "dropped": sum(len(o.dropped) for o in outputs),
                "themes": len(frequencies),
            },
        )
