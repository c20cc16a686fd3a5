import asyncio
import logging

from src.event_bus import ApplicationEventBus
from src.shared.stages import StageReport
from src.services.corpus.domain.repositories import ThemeRepository
from src.services.corpus.infrastructure.repositories import resolve_theme_set
from src.services.discovery.domain.repositories import DiscoveryRepository
from ..domain.repositories import DecisionRepository, RefinementReportRepository
from ..domain.services import RefinementDomainService, aspect_frequency_table, apply_human_decisions
from .commands import RefineThemesCommand

logger = logging.getLogger(__name__)


class RefinementCommandHandler:
    """Handler for theme refinement commands"""

    def __init__(
        self,
        refinement_service: RefinementDomainService,
        discovery_store: DiscoveryRepository,
        reports: RefinementReportRepository,
        decisions: DecisionRepository,
        themes: ThemeRepository,
        event_bus: ApplicationEventBus,
    ):
        self.refinement_service = refinement_service
        self.discovery_store = discovery_store
        self.reports = reports
        self.decisions = decisions
        self.themes = themes
        self.event_bus = event_bus

    async def handle_refine(self, command: RefineThemesCommand) -> StageReport:
        """Handle refine command; reports paused when curation is required"""
        frequencies = await self.discovery_store.load_frequencies()
        tuples = await self.discovery_store.list_tuples()
        existing = None
        if command.existing_theme_set:
            existing = await asyncio.to_thread(resolve_theme_set, command.existing_theme_set)

        outcome = await self.refinement_service.refine(frequencies, existing)
        outputs = await self.reports.save(outcome, aspect_frequency_table(tuples), command.run_id)
        counts = {
            "raw_themes": len(frequencies),
            "after_filter": len(outcome.filtered),
            "after_dedup": len(outcome.survivors),
            "flagged": len(outcome.flagged),
        }

        decisions = await self.decisions.load()
        if decisions is None and command.require_human and outcome.flagged:
            logger.info(f"Pausing for human review of {len(outcome.flagged)} flagged themes")
            return StageReport(
                stage="refine",
                outputs=outputs,
                counts=counts,
                paused=True,
                message=f"{len(outcome.flagged)} flagged themes await decisions",
            )

        theme_set = outcome.theme_set
        if decisions is not None:
            theme_set = apply_human_decisions(theme_set, decisions)
        theme_path = await self.themes.save(theme_set, command.run_id)
        counts["themes"] = len(theme_set)
        logger.info(f"Refined theme set has {len(theme_set)} themes")
        return StageReport(stage="refine", outputs=outputs + [theme_path], counts=counts)
