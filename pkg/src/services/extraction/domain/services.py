import asyncio
import logging
import re
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.prompts import inputs
from src.prompts.catalog import PromptCatalog
from src.settings import ExtractionConfig
from src.shared.errors import InvalidRecord, MalformedVerdict, PipelineError
from src.shared.seeding import derive_seed
from src.services.corpus.domain.entities import OpinionTuple, Review, ThemeDefinition, ThemeSet
from src.services.discovery.domain.services import parse_absa_payload
from src.services.provider.domain.entities import CompletionRequest
from src.services.provider.domain.gateway import ProviderGateway
from src.services.provider.domain.payloads import parse_json_payload
from .entities import PassResult, ReviewExtraction, ValidationRecord

logger = logging.getLogger(__name__)

_VERDICT = re.compile(r"\s*(yes|no)\b", re.IGNORECASE)


def pass_seed(shuffle_seed: int, review_id: str, pass_index: int) -> int:
    return derive_seed(shuffle_seed, review_id, pass_index)


def shuffle_permutation(theme_ids: Sequence[str], seed: int) -> List[str]:
    """Seeded uniform permutation of theme ids"""
    order = np.random.default_rng(seed).permutation(len(theme_ids))
    return [theme_ids[int(i)] for i in order]


def parse_verdict(response: str) -> bool:
    """True for a reply whose first word is Yes, False for No (case-insensitive)"""
    match = _VERDICT.match(response)
    if match is None:
        raise MalformedVerdict(response)
    return match.group(1).casefold() == "yes"


def collate(passes: Sequence[Sequence[OpinionTuple]]) -> List[OpinionTuple]:
    """Union of pass outputs under tuple equality, independent of pass order.

    Among equal tuples the lexicographically smallest surface form is kept;
    the result is sorted by the equality key.
    """
    chosen: Dict[Tuple[str, str, str, str], OpinionTuple] = {}
    for tuples in passes:
        for item in tuples:
            key = item.dedup_key()
            current = chosen.get(key)
            if current is None or (item.aspect, item.opinion) < (current.aspect, current.opinion):
                chosen[key] = item
    return [chosen[k] for k in sorted(chosen)]


class ExtractionDomainService:
    """Shuffled constrained extraction followed by per-tuple validation"""

    def __init__(
        self,
        gateway: ProviderGateway,
        catalog: PromptCatalog,
        config: ExtractionConfig,
        shuffle_seed: int,
        model: str,
        extraction_template: str = "extraction_space",
        validation_template: str = "validation_space",
        temperature: float = 0.0,
        max_tokens: int = 1024,
    ):
        self.gateway = gateway
        self.catalog = catalog
        self.config = config
        self.shuffle_seed = shuffle_seed
        self.model = model
        self.extraction_template = extraction_template
        self.validation_template = validation_template
        self.temperature = temperature
        self.max_tokens = max_tokens

    def build_constrained_prompt(
        self, review: Review, themes: ThemeSet, permutation: Sequence[str], seed: Optional[int] = None
    ) -> CompletionRequest:
        """Render theme definitions in permutation order; nothing else varies"""
        if sorted(permutation) != sorted(themes.ids()) or len(set(permutation)) != len(permutation):
            raise InvalidRecord("permutation must list every theme exactly once")
        block = inputs.theme_definitions_block([(t, themes.get(t).describe()) for t in permutation])
        return CompletionRequest(
            model=self.model,
            system_prompt=self.catalog.render(self.extraction_template, theme_definitions=block),
            user_prompt=review.text,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            seed=seed,
            template_id=self.extraction_template,
        )

    async def run_pass(self, review: Review, themes: ThemeSet, pass_index: int, raw: List[str]) -> PassResult:
        seed = pass_seed(self.shuffle_seed, review.review_id, pass_index)
        permutation = shuffle_permutation(themes.ids(), seed)
        request = self.build_constrained_prompt(review, themes, permutation, seed=seed)

        def _parse(text: str):
            raw.append(text)
            return parse_json_payload(text)

        payload = await self.gateway.complete_parsed(request, _parse)
        tuples, dropped = parse_absa_payload(review.review_id, payload, allowed_themes=set(themes.ids()))
        return PassResult(pass_index, seed, tuple(permutation), tuple(tuples), tuple(dropped), raw[-1])

    async def run_passes(self, review: Review, themes: ThemeSet) -> List[PassResult]:
        """Run the k passes concurrently; a failed pass is skipped while another succeeded"""
        k = self.config.k_shuffles
        raws: List[List[str]] = [[] for _ in range(k)]
        outcomes = await asyncio.gather(
            *(self.run_pass(review, themes, i, raws[i]) for i in range(k)),
            return_exceptions=True,
        )
        passes: List[PassResult] = []
        failures: List[BaseException] = []
        for i, outcome in enumerate(outcomes):
            if isinstance(outcome, PassResult):
                passes.append(outcome)
                continue
            if not isinstance(outcome, PipelineError):
                raise outcome
            failures.append(outcome)
            logger.warning(f"Extraction pass {i} for review {review.review_id} failed: {outcome}")
            seed = pass_seed(self.shuffle_seed, review.review_id, i)
            passes.append(PassResult(
                i, seed, tuple(shuffle_permutation(themes.ids(), seed)),
                raw_response=raws[i][-1] if raws[i] else "", error=str(outcome),
            ))
        if len(failures) == k:
            logger.error(f"Failed to extract review {review.review_id}: all {k} passes failed")
            raise failures[0]
        return passes

    async def extract_with_shuffles(self, review: Review, themes: ThemeSet) -> List[OpinionTuple]:
        passes = await self.run_passes(review, themes)
        return collate([p.tuples for p in passes if p.succeeded])

    def build_validation_request(self, review: Review, item: OpinionTuple, definition: ThemeDefinition) -> CompletionRequest:
        user = inputs.validation_input(
            review.text,
            definition.theme_id,
            definition.describe(),
            {"aspect": item.aspect, "opinion": item.opinion, "sentiment": item.sentiment.value},
        )
        return CompletionRequest(
            model=self.config.validation_model,
            system_prompt=self.catalog.render(self.validation_template),
            user_prompt=user,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            template_id=self.validation_template,
        )

    async def judge_tuple(self, review: Review, item: OpinionTuple, definition: ThemeDefinition) -> ValidationRecord:
        if item.theme != definition.theme_id:
            raise InvalidRecord(f"tuple theme {item.theme!r} does not match definition {definition.theme_id!r}")
        request = self.build_validation_request(review, item, definition)
        raw: List[str] = []

        def _parse(text: str) -> bool:
            raw.append(text)
            return parse_verdict(text)

        accepted = await self.gateway.complete_parsed(request, _parse)
        return ValidationRecord(item.opinion_id, item.theme, accepted, raw[-1].strip())

    async def validate_tuple(self, review: Review, item: OpinionTuple, definition: ThemeDefinition) -> bool:
        return (await self.judge_tuple(review, item, definition)).accepted

    async def refine_precision_with_audit(
        self, review: Review, tuples: Sequence[OpinionTuple], themes: ThemeSet
    ) -> Tuple[List[OpinionTuple], List[ValidationRecord]]:
        records = list(await asyncio.gather(
            *(self.judge_tuple(review, t, themes.get(t.theme)) for t in tuples)
        ))
        kept = [t for t, r in zip(tuples, records) if r.accepted]
        return kept, records

    async def refine_precision(self, review: Review, tuples: Sequence[OpinionTuple], themes: ThemeSet) -> List[OpinionTuple]:
        """Subset of tuples the validator accepts, input order preserved"""
        kept, _ = await self.refine_precision_with_audit(review, tuples, themes)
        return kept

    async def extract_review(self, review: Review, themes: ThemeSet) -> ReviewExtraction:
        passes = await self.run_passes(review, themes)
        candidates = collate([p.tuples for p in passes if p.succeeded])
        validated, records = await self.refine_precision_with_audit(review, candidates, themes)
        logger.debug(f"Review {review.review_id}: {len(candidates)} candidates, {len(validated)} validated")
        return ReviewExtraction(
            review_id=review.review_id,
            candidates=tuple(candidates),
            validated=tuple(validated),
            passes=tuple(passes),
            validations=tuple(records),
        )
