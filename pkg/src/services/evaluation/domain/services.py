import asyncio
import logging
import math
import re
from typing import AbstractSet, Any, Dict, Iterable, List, Set, Tuple

from src.prompts import inputs
from src.prompts.catalog import PromptCatalog
from src.shared.errors import EmptyInput, EmptySource, MalformedDecimal, MalformedPayload, OutOfRange
from src.services.corpus.domain.entities import ThemeSet
from src.services.provider.domain.entities import CompletionRequest
from src.services.provider.domain.gateway import ProviderGateway
from src.services.provider.domain.payloads import parse_json_payload, require_field
from .entities import TIE, JudgeDimension, JudgeVerdict, PreferenceTally

logger = logging.getLogger(__name__)

NO_FRAGMENTS = "No related fragments"
SENTIMENT_BINS = ("<50", "50-80", ">80")

_DECIMAL = re.compile(r"\s*(\d+(?:\.\d*)?|\.\d+)\s*")
_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")


def aspect_coverage_f1(summary_themes: AbstractSet[str], source_themes: AbstractSet[str]) -> float:
    """F1 between the themes a summary mentions and the themes of its source"""
    if not source_themes:
        raise EmptySource("source theme set is empty")
    if not summary_themes:
        return 0.0
    overlap = len(set(summary_themes) & set(source_themes))
    return 2.0 * overlap / (len(summary_themes) + len(source_themes))


def parse_decimal(response: str) -> float:
    """A lone decimal in [0, 1], e.g. "0.84" """
    match = _DECIMAL.fullmatch(response)
    if not match:
        raise MalformedDecimal(response)
    value = float(match.group(1))
    if not 0.0 <= value <= 1.0:
        raise MalformedDecimal(response)
    return value


def parse_score(payload: Dict[str, Any]) -> int:
    score = require_field(payload, "score")
    if (
        isinstance(score, bool)
        or not isinstance(score, (int, float))
        or not math.isfinite(score)
        or float(score) != int(score)
    ):
        raise MalformedPayload(f"score must be an integer, got {score!r}", 0)
    if not 0 <= score <= 100:
        raise OutOfRange(score, 0, 100)
    return int(score)


def sentiment_bin(score: int) -> str:
    if score < 50:
        return "<50"
    if score <= 80:
        return "50-80"
    return ">80"


def parse_judge_payload(payload: Dict[str, Any]) -> Tuple[int, str]:
    answer = require_field(payload, "answer")
    try:
        value = int(str(answer).strip())
    except ValueError as e:
        raise MalformedPayload(f"answer must be 1, 2 or 3, got {answer!r}", 0) from e
    if value not in (1, 2, 3):
        raise MalformedPayload(f"answer must be 1, 2 or 3, got {answer!r}", 0)
    return value, str(payload.get("reasoning", ""))


def swap_answer(answer: int) -> int:
    """Map a verdict on swapped summaries back to the original positions"""
    return {1: 2, 2: 1, 3: 3}[answer]


def is_no_fragments(response: str) -> bool:
    return response.strip().strip('"').rstrip(".").casefold() == NO_FRAGMENTS.casefold()


def claims_of(text: str) -> List[str]:
    """Sentence-level claims of a summary"""
    return [s.strip() for s in _SENTENCE_END.split(text.strip()) if s.strip()]


def tally(verdicts: Iterable[JudgeVerdict]) -> PreferenceTally:
    return PreferenceTally.from_answers(v.answer for v in verdicts)


class EvaluationDomainService:
    """Model-judged summary metrics"""

    def __init__(
        self,
        gateway: ProviderGateway,
        catalog: PromptCatalog,
        model: str,
        geval_template: str = "geval_space",
        theme_identification_template: str = "theme_identification_space",
        sentiment_template: str = "sentiment_score",
        coverage_template: str = "judge_coverage",
        faithfulness_template: str = "judge_faithfulness",
        geval_runs: int = 3,
        position_debias: bool = True,
        temperature: float = 0.0,
        max_tokens: int = 1024,
    ):
        self.gateway = gateway
        self.catalog = catalog
        self.model = model
        self.geval_template = geval_template
        self.theme_identification_template = theme_identification_template
        self.sentiment_template = sentiment_template
        self.judge_templates = {
            JudgeDimension.COVERAGE: coverage_template,
            JudgeDimension.FAITHFULNESS: faithfulness_template,
        }
        self.geval_runs = geval_runs
        self.position_debias = position_debias
        self.temperature = temperature
        self.max_tokens = max_tokens

    def _request(self, template_id: str, user_prompt: str, seed=None, **variables: Any) -> CompletionRequest:
        return CompletionRequest(
            model=self.model,
            system_prompt=self.catalog.render(template_id, **variables),
            user_prompt=user_prompt,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            seed=seed,
            template_id=template_id,
        )

    async def theme_present(self, text: str, theme_id: str, definition: str) -> bool:
        request = self._request(
            self.theme_identification_template, text, theme_name=theme_id, definition=definition,
        )
        return not is_no_fragments(await self.gateway.complete(request))

    async def identify_themes_in_text(self, text: str, themes: ThemeSet) -> Set[str]:
        """Themes for which the fragment-extraction prompt finds anything"""
        if not text.strip():
            return set()
        present = await asyncio.gather(*(self.theme_present(text, t.theme_id, t.describe()) for t in themes))
        return {t.theme_id for t, found in zip(themes, present) if found}

    async def geval_runs_of(self, reviews_text: str, summary: str) -> List[float]:
        user = inputs.geval_input(reviews_text, summary)
        scores = []
        for run in range(self.geval_runs):
            request = self._request(self.geval_template, user, seed=run)
            scores.append(await self.gateway.complete_parsed(request, parse_decimal))
        return scores

    async def geval_faithfulness(self, reviews_text: str, summary: str) -> float:
        """Mean faithful-opinion fraction over the configured number of runs"""
        scores = await self.geval_runs_of(reviews_text, summary)
        return sum(scores) / len(scores)

    async def sentiment_score(self, theme_summary: str) -> int:
        request = self._request(self.sentiment_template, theme_summary)
        return await self.gateway.complete_parsed(request, lambda raw: parse_score(parse_json_payload(raw)))

    async def theme_coverage_count(self, product_summary: str, themes: ThemeSet) -> int:
        return len(await self.identify_themes_in_text(product_summary, themes) & set(themes.ids()))

    async def judge_once(self, input_text: str, summary1: str, summary2: str, dimension: JudgeDimension) -> Tuple[int, str]:
        request = self._request(self.judge_templates[dimension], inputs.judge_input(input_text, summary1, summary2))
        return parse_judge_payload(await self.gateway.complete_json(request))

    async def pairwise_judge(self, input_text: str, summary_a: str, summary_b: str, dimension: JudgeDimension) -> JudgeVerdict:
        """Judge a against b, then b against a; disagreeing orders count as a tie"""
        if not summary_a.strip() or not summary_b.strip():
            raise EmptyInput("both summaries must be non-empty")
        first, reasoning = await self.judge_once(input_text, summary_a, summary_b, dimension)
        if not self.position_debias:
            return JudgeVerdict(first, reasoning, dimension, first_answer=first)

        swapped, _ = await self.judge_once(input_text, summary_b, summary_a, dimension)
        consistent = swap_answer(swapped) == first
        if not consistent:
            logger.debug(f"Position-inconsistent {dimension.value} verdict: {first} then swapped {swapped}")
        return JudgeVerdict(
            answer=first if consistent else TIE,
            reasoning=reasoning,
            dimension=dimension,
            first_answer=first,
            swapped_answer=swapped,
            consistent=consistent,
        )
