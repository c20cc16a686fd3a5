import logging
from typing import Dict, List

from src.event_bus import ApplicationEventBus
from src.shared.concurrency import bounded_gather
from src.shared.events import SummaryLengthWarningEvent
from src.shared.seeding import derive_seed
from src.shared.stages import StageReport
from src.services.clustering.domain.repositories import ClusterRepository
from src.services.corpus.domain.entities import Summary, SummaryScope
from src.services.corpus.domain.repositories import OpinionRepository
from ..domain.repositories import SummaryRepository
from ..domain.services import SummarizationDomainService, groups_by_theme, seeded_shuffle, theme_opinions
from .commands import SummarizeCommand

logger = logging.getLogger(__name__)


class SummarizationCommandHandler:
    """Handler for hierarchical summarization commands"""

    def __init__(
        self,
        summarization_service: SummarizationDomainService,
        opinions: OpinionRepository,
        clusters: ClusterRepository,
        summaries: SummaryRepository,
        event_bus: ApplicationEventBus,
    ):
        self.summarization_service = summarization_service
        self.opinions = opinions
        self.clusters = clusters
        self.summaries = summaries
        self.event_bus = event_bus

    async def _warn(self, summaries: List[Summary]) -> None:
        for summary in summaries:
            for warning in summary.warnings:
                await self.event_bus.publish(SummaryLengthWarningEvent(
                    aggregate_id=summary.key,
                    data={"scope": summary.scope.value, "words": summary.word_count(), "warning": warning},
                ))

    async def handle_summarize(self, command: SummarizeCommand) -> StageReport:
        """Handle summarize command"""
        opinions = {o.opinion_id: o for o in await self.opinions.list_opinions()}
        themes = groups_by_theme(await self.clusters.list_groups())

        requests = []
        for (product_id, theme_id), groups in themes.items():
            items = theme_opinions(groups, opinions, command.include_noise)
            if not items:
                logger.info(f"Skipping {Summary.theme_key(product_id, theme_id)}: no clustered opinions")
                continue
            if command.shuffle_seed is not None:
                items = seeded_shuffle(items, derive_seed(command.shuffle_seed, product_id, theme_id))
            requests.append((product_id, theme_id, items))
        logger.info(f"Summarizing {len(requests)} product themes")

        theme_summaries = await bounded_gather(
            [
                lambda p=p, t=t, i=i: self.summarization_service.summarize_theme(p, t, i)
                for p, t, i in requests
            ],
            command.workers,
        )

        by_product: Dict[str, List[Summary]] = {}
        for summary in theme_summaries:
            by_product.setdefault(summary.product_id, []).append(summary)
        product_summaries = await bounded_gather(
            [
                lambda p=p, s=s: self.summarization_service.summarize_product(p, s)
                for p, s in sorted(by_product.items())
            ],
            command.workers,
        )

        await self._warn(theme_summaries + product_summaries)
        theme_path = await self.summaries.save_all(SummaryScope.THEME, theme_summaries, command.run_id)
        product_path = await self.summaries.save_all(SummaryScope.PRODUCT, product_summaries, command.run_id)
        return StageReport(
            stage="summarize",
            outputs=[theme_path, product_path],
            counts={"theme_summaries": len(theme_summaries), "product_summaries": len(product_summaries)},
        )
