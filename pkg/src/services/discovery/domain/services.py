import logging
from collections import Counter
from typing import Any, Collection, Dict, Iterable, List, Optional, Tuple

from src.prompts.catalog import PromptCatalog
from src.shared.errors import EmptyReview, InvalidRecord, UnknownSentiment
from src.shared.seeding import derive_seed
from src.services.corpus.domain.entities import OpinionTuple, Review
from src.services.corpus.domain.value_objects import Sentiment
from src.services.provider.domain.entities import CompletionRequest
from src.services.provider.domain.gateway import ProviderGateway
from src.services.provider.domain.payloads import parse_json_payload
from .entities import DiscoveryOutput, DroppedTuple, normalize_theme_key

logger = logging.getLogger(__name__)


def parse_absa_payload(
    review_id: str,
    payload: Dict[str, Any],
    allowed_themes: Optional[Collection[str]] = None,
) -> Tuple[List[OpinionTuple], List[DroppedTuple]]:
    """Flatten a theme-keyed ABSA object into tuples.

    A theme maps to null, one {aspect, opinion, sentiment} object or a list of
    them. Items that cannot form a tuple are returned as DroppedTuple records.
    With ``allowed_themes`` set, theme names must match exactly.
    """
    tuples: List[OpinionTuple] = []
    dropped: List[DroppedTuple] = []
    for theme, value in payload.items():
        if value is None:
            continue
        items = value if isinstance(value, list) else [value]
        for item in items:
            if item is None:
                continue
            if not isinstance(item, dict):
                dropped.append(DroppedTuple(review_id, theme, "item is not an object", item))
                continue
            if allowed_themes is not None and theme not in allowed_themes:
                dropped.append(DroppedTuple(review_id, theme, "theme outside the active set", item))
                continue
            try:
                sentiment = Sentiment.parse(item.get("sentiment"))
            except UnknownSentiment as e:
                dropped.append(DroppedTuple(review_id, theme, str(e), item))
                continue
            aspect = str(item.get("aspect") or "").strip()
            opinion = str(item.get("opinion") or "").strip()
            try:
                tuples.append(OpinionTuple(review_id, theme, aspect, opinion, sentiment))
            except InvalidRecord as e:
                dropped.append(DroppedTuple(review_id, theme, str(e), item))
    return tuples, dropped


def tally_theme_frequencies(outputs: Iterable[DiscoveryOutput]) -> Dict[str, int]:
    """Tuples per normalized theme key, ordered by count desc then key asc"""
    counts: Counter = Counter()
    for output in outputs:
        for item in output.tuples:
            counts[normalize_theme_key(item.theme)] += 1
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


class DiscoveryDomainService:
    """Unconstrained theme discovery over single reviews"""

    def __init__(
        self,
        gateway: ProviderGateway,
        catalog: PromptCatalog,
        model: str,
        temperature: float = 0.0,
        max_tokens: int = 1024,
        seed: Optional[int] = None,
    ):
        self.gateway = gateway
        self.catalog = catalog
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.seed = seed

    def build_request(self, review: Review, template_id: str) -> CompletionRequest:
        return CompletionRequest(
            model=self.model,
            system_prompt=self.catalog.render(template_id),
            user_prompt=review.text,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            seed=None if self.seed is None else derive_seed(self.seed, "discover", review.review_id),
            template_id=template_id,
        )

    async def discover(self, review: Review, template_id: str) -> DiscoveryOutput:
        """Run the discovery prompt over one review and flatten the answer"""
        if not review.text.strip():
            raise EmptyReview(review.review_id)
        request = self.build_request(review, template_id)
        raw: List[str] = []

        def _parse(text: str) -> Dict[str, Any]:
            raw.append(text)
            return parse_json_payload(text)

        payload = await self.gateway.complete_parsed(request, _parse)
        tuples, dropped = parse_absa_payload(review.review_id, payload)
        for record in dropped:
            logger.warning(f"Dropped tuple from review {review.review_id} under {record.theme!r}: {record.reason}")
        return DiscoveryOutput(review.review_id, tuple(tuples), tuple(dropped), raw_response=raw[-1])
