import logging
from typing import Any, Dict, List, Optional, Sequence, Set

from src.event_bus import ApplicationEventBus
from src.shared.concurrency import bounded_gather
from src.shared.errors import EmptySource
from src.shared.stages import StageReport
from src.services.benchmark.domain.entities import BenchVariant
from src.services.benchmark.domain.repositories import BenchVariantRepository
from src.services.corpus.domain.entities import OpinionTuple, Review, Summary, SummaryScope, ThemeSet
from src.services.corpus.domain.repositories import OpinionRepository, ReviewRepository, ThemeRepository
from src.services.corpus.domain.services import product_index, top_themes
from src.services.summarization.domain.repositories import SummaryRepository
from src.services.summarization.domain.services import SummarizationDomainService
from ..domain.entities import JudgeDimension, PreferenceTally
from ..domain.repositories import EvaluationReportRepository
from ..domain.services import SENTIMENT_BINS, EvaluationDomainService, aspect_coverage_f1, claims_of, sentiment_bin
from .commands import EvaluateCommand

logger = logging.getLogger(__name__)


def _mean(values: Sequence[float]) -> Optional[float]:
    return round(sum(values) / len(values), 6) if values else None


class EvaluationCommandHandler:
    """Handler for summary evaluation commands"""

    def __init__(
        self,
        evaluation_service: EvaluationDomainService,
        summarization_service: SummarizationDomainService,
        reviews: ReviewRepository,
        opinions: OpinionRepository,
        themes: ThemeRepository,
        summaries: SummaryRepository,
        variants: BenchVariantRepository,
        reports: EvaluationReportRepository,
        event_bus: ApplicationEventBus,
    ):
        self.evaluation_service = evaluation_service
        self.summarization_service = summarization_service
        self.reviews = reviews
        self.opinions = opinions
        self.themes = themes
        self.summaries = summaries
        self.variants = variants
        self.reports = reports
        self.event_bus = event_bus

    async def _source_themes(
        self, mode: str, reviews: List[Review], opinions: List[OpinionTuple], theme_set: ThemeSet
    ) -> Set[str]:
        if mode == "opinions":
            return {o.theme for o in opinions}
        found = [await self.evaluation_service.identify_themes_in_text(r.text, theme_set) for r in reviews]
        return set().union(*found)

    async def _evaluate_product(
        self,
        summary: Summary,
        command: EvaluateCommand,
        reviews: List[Review],
        opinions: List[OpinionTuple],
        product_of: Dict[str, str],
        theme_set: ThemeSet,
    ) -> Dict[str, Any]:
        product_id = summary.product_id
        reviews_text = "\n\n".join(r.text for r in reviews)
        summary_themes = await self.evaluation_service.identify_themes_in_text(summary.text, theme_set)
        source_themes = await self._source_themes(command.source_themes, reviews, opinions, theme_set)
        try:
            coverage_f1: Optional[float] = round(aspect_coverage_f1(summary_themes, source_themes), 6)
        except EmptySource:
            logger.warning(f"Product {product_id} has no source themes; coverage F1 not defined")
            coverage_f1 = None
        geval = await self.evaluation_service.geval_runs_of(reviews_text, summary.text)

        active = {o.theme for o in opinions}
        ranked = top_themes(opinions, product_of, product_id, command.top_themes)
        return {
            "product_id": product_id,
            "coverage_f1": coverage_f1,
            "summary_themes": sorted(summary_themes),
            "source_themes": sorted(source_themes),
            "geval": {"mean": _mean(geval), "runs": geval},
            "theme_coverage": len(summary_themes & set(theme_set.ids())),
            "active_themes": sorted(active),
            "covers_all_themes": active <= summary_themes,
            "top_themes": [{"theme_id": t, "count": c} for t, c in ranked],
            "top_themes_covered": sum(1 for t, _ in ranked if t in summary_themes),
        }

    async def _score_theme_summary(self, summary: Summary) -> Dict[str, Any]:
        score = await self.evaluation_service.sentiment_score(summary.text)
        return {
            "key": summary.key,
            "product_id": summary.product_id,
            "theme_id": summary.theme_id,
            "sentiment_score": score,
            "bin": sentiment_bin(score),
        }

    async def _stress_test(self, variants: List[BenchVariant], workers: int) -> Dict[str, Any]:
        """Redundant (summary 1) against deduplicated (summary 2) inputs, judged pairwise"""
        bases: Dict[str, BenchVariant] = {}
        for variant in variants:
            bases.setdefault(str(variant.group), variant)
        group_keys = sorted(bases)
        dedup = await bounded_gather(
            [lambda k=k: self.summarization_service.summarize_texts(f"{k}|base", bases[k].base_opinions) for k in group_keys],
            workers,
        )
        dedup_text = {k: text for k, (text, _) in zip(group_keys, dedup)}
        redundant = await bounded_gather(
            [
                lambda v=v: self.summarization_service.summarize_texts(
                    f"{v.group}|{v.pattern_id}|{v.ordering.value}", v.opinion_sequence
                )
                for v in variants
            ],
            workers,
        )

        jobs = [
            (variant, dimension, text)
            for variant, (text, _) in zip(variants, redundant)
            for dimension in JudgeDimension
        ]
        verdicts = await bounded_gather(
            [
                lambda v=v, d=d, t=t: self.evaluation_service.pairwise_judge(
                    "\n".join(v.base_opinions), t, dedup_text[str(v.group)], d
                )
                for v, d, t in jobs
            ],
            workers,
        )

        by_condition: Dict[str, PreferenceTally] = {}
        overall = {d.value: PreferenceTally() for d in JudgeDimension}
        records = []
        for (variant, dimension, _), verdict in zip(jobs, verdicts):
            key = f"{variant.pattern_id}|{variant.ordering.value}|{dimension.value}"
            by_condition.setdefault(key, PreferenceTally()).add(verdict.answer)
            overall[dimension.value].add(verdict.answer)
            records.append({
                "group_key": variant.group.to_dict(),
                "pattern_id": variant.pattern_id,
                "ordering": variant.ordering.value,
                **verdict.to_dict(),
            })
        return {
            "by_condition": {k: by_condition[k].to_dict() for k in sorted(by_condition)},
            "overall": {k: v.to_dict() for k, v in overall.items()},
            "verdicts": records,
        }

    async def handle_evaluate(self, command: EvaluateCommand) -> StageReport:
        """Handle evaluate command"""
        reviews = sorted(await self.reviews.list_reviews(), key=lambda r: r.review_id)
        product_of = product_index(reviews)
        opinions = await self.opinions.list_opinions()
        theme_set = await self.themes.load()
        product_summaries = await self.summaries.list_summaries(SummaryScope.PRODUCT)
        theme_summaries = await self.summaries.list_summaries(SummaryScope.THEME)
        logger.info(f"Evaluating {len(product_summaries)} product and {len(theme_summaries)} theme summaries")

        products = await bounded_gather(
            [
                lambda s=s: self._evaluate_product(
                    s,
                    command,
                    [r for r in reviews if r.product_id == s.product_id],
                    [o for o in opinions if product_of.get(o.review_id) == s.product_id],
                    product_of,
                    theme_set,
                )
                for s in product_summaries
            ],
            command.workers,
        )
        scored = await bounded_gather(
            [lambda s=s: self._score_theme_summary(s) for s in theme_summaries],
            command.workers,
        )

        bins = {name: 0 for name in SENTIMENT_BINS}
        for entry in scored:
            bins[entry["bin"]] += 1
        f1_values = [p["coverage_f1"] for p in products if p["coverage_f1"] is not None]
        report: Dict[str, Any] = {
            "products": products,
            "theme_summaries": scored,
            "sentiment_bins": bins,
            "corpus": {
                "products": len(products),
                "mean_coverage_f1": _mean(f1_values),
                "mean_geval": _mean([p["geval"]["mean"] for p in products if p["geval"]["mean"] is not None]),
                "share_covering_all_themes": _mean([1.0 if p["covers_all_themes"] else 0.0 for p in products]),
            },
        }

        if command.stress_test:
            if await self.variants.exists():
                report["stress_test"] = await self._stress_test(await self.variants.list_variants(), command.workers)
            else:
                logger.info("Stress test enabled but no benchmark variants were generated; skipping it")

        context: Dict[str, List[str]] = {}
        for review in reviews:
            context.setdefault(review.product_id, []).append(review.text)
        pairs = [
            {"summary_id": s.summary_id, "scope": s.scope.value, "key": s.key, "context": "\n\n".join(context.get(s.product_id, [])), "claim": claim}
            for s in list(product_summaries) + list(theme_summaries)
            for claim in claims_of(s.text)
        ]
        report_path = await self.reports.save_report(report, command.run_id)
        pairs_path = await self.reports.save_alignscore_pairs(pairs, command.run_id)
        return StageReport(
            stage="evaluate",
            outputs=[report_path, pairs_path],
            counts={"products": len(products), "theme_summaries": len(scored), "alignscore_pairs": len(pairs)},
        )
