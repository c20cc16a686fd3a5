import logging

from src.event_bus import ApplicationEventBus
from src.shared.concurrency import bounded_gather
from src.shared.events import PassFailedEvent, RecordDroppedEvent
from src.shared.stages import StageReport
from src.services.corpus.domain.repositories import OpinionRepository, ReviewRepository, ThemeRepository
from ..domain.repositories import ExtractionAuditRepository
from ..domain.services import ExtractionDomainService
from .commands import ExtractOpinionsCommand

logger = logging.getLogger(__name__)


class ExtractionCommandHandler:
    """Handler for constrained extraction commands with event publishing"""

    def __init__(
        self,
        extraction_service: ExtractionDomainService,
        reviews: ReviewRepository,
        themes: ThemeRepository,
        opinions: OpinionRepository,
        audit: ExtractionAuditRepository,
        event_bus: ApplicationEventBus,
    ):
        self.extraction_service = extraction_service
        self.reviews = reviews
        self.themes = themes
        self.opinions = opinions
        self.audit = audit
        self.event_bus = event_bus

    async def handle_extract(self, command: ExtractOpinionsCommand) -> StageReport:
        """Handle extract command"""
        reviews = sorted(await self.reviews.list_reviews(), key=lambda r: r.review_id)
        theme_set = await self.themes.load()
        logger.info(f"Extracting {len(theme_set)} themes from {len(reviews)} reviews")

        extractions = await bounded_gather(
            [lambda r=r: self.extraction_service.extract_review(r, theme_set) for r in reviews],
            command.workers,
        )

        for extraction in extractions:
            for result in extraction.passes:
                if not result.succeeded:
                    await self.event_bus.publish(PassFailedEvent(
                        aggregate_id=extraction.review_id,
                        data={"stage": "extract", "pass_index": result.pass_index, "error": result.error},
                    ))
                for dropped in result.dropped:
                    await self.event_bus.publish(RecordDroppedEvent(
                        aggregate_id=extraction.review_id,
                        aggregate_type="Review",
                        data={"stage": "extract", "pass_index": result.pass_index, **dropped.to_dict()},
                    ))

        validated = [t for e in extractions for t in e.validated]
        count = await self.opinions.save_all(validated, command.run_id)
        audit_path = await self.audit.save(extractions, command.run_id)
        candidates = sum(len(e.candidates) for e in extractions)
        logger.info(f"Validated {count} of {candidates} candidate opinions")
        return StageReport(
            stage="extract",
            outputs=[self.opinions.location, audit_path],
            counts={"reviews": len(reviews), "candidates": candidates, "validated": count},
        )
