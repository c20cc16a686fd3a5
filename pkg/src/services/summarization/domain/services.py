import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.prompts.catalog import PromptCatalog
from src.shared.errors import EmptyInput, InvalidRecord, MalformedPayload
from src.services.clustering.domain.entities import GroupClustering
from src.services.corpus.domain.entities import OpinionTuple, Summary, SummaryScope
from src.services.provider.domain.entities import CompletionRequest
from src.services.provider.domain.gateway import ProviderGateway
from src.services.provider.domain.payloads import require_field
from .entities import SummaryItem, SummaryRequestBundle

logger = logging.getLogger(__name__)

REDUNDANCY_WORD_BOUNDS = (35, 50)


def theme_opinions(
    groups: Sequence[GroupClustering],
    opinions: Mapping[str, OpinionTuple],
    include_noise: bool = True,
) -> List[OpinionTuple]:
    """Prompt opinions for one product+theme across its sentiment groups.

    Representatives are grouped by cluster, clusters by descending size
    (ties by group then cluster id); noise opinions follow when included.
    """
    ranked = sorted(
        ((len(c.member_ids), g.group, c) for g in groups for c in g.clusters),
        key=lambda entry: (-entry[0], entry[1], entry[2].cluster_id),
    )

    def lookup(opinion_id: str) -> OpinionTuple:
        if opinion_id not in opinions:
            raise InvalidRecord(f"clusters reference unknown opinion {opinion_id}")
        return opinions[opinion_id]

    ordered = [lookup(i) for _, _, cluster in ranked for i in cluster.representative_ids]
    if include_noise:
        for group in sorted(groups, key=lambda g: g.group):
            ordered.extend(lookup(i) for i in group.noise_ids)
    return ordered


def seeded_shuffle(items: Sequence, seed: int) -> List:
    order = np.random.default_rng(seed).permutation(len(items))
    return [items[int(i)] for i in order]


class SummarizationDomainService:
    """Theme-level then product-level summary generation"""

    def __init__(
        self,
        gateway: ProviderGateway,
        catalog: PromptCatalog,
        model: str,
        theme_template: str = "theme_summary_space",
        product_template: str = "product_summary_space",
        redundancy_template: str = "redundancy_theme_summary",
        word_bounds: Optional[Tuple[int, int]] = None,
        temperature: float = 0.0,
        max_tokens: int = 1024,
    ):
        self.gateway = gateway
        self.catalog = catalog
        self.model = model
        self.theme_template = theme_template
        self.product_template = product_template
        self.redundancy_template = redundancy_template
        self.word_bounds = word_bounds
        self.temperature = temperature
        self.max_tokens = max_tokens

    def bounds_for(self, template_id: str) -> Optional[Tuple[int, int]]:
        if template_id == self.redundancy_template:
            return REDUNDANCY_WORD_BOUNDS
        return self.word_bounds

    def build_request(self, bundle: SummaryRequestBundle) -> CompletionRequest:
        return CompletionRequest(
            model=self.model,
            system_prompt=self.catalog.render(bundle.template_id),
            user_prompt=bundle.user_prompt(),
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            template_id=bundle.template_id,
        )

    async def generate(self, bundle: SummaryRequestBundle) -> Tuple[str, Optional[str]]:
        """Summary text plus an optional length warning"""
        payload = await self.gateway.complete_json(self.build_request(bundle))
        text = require_field(payload, "summary")
        if not isinstance(text, str) or not text.strip():
            raise MalformedPayload("summary must be a non-empty string", 0)
        text = text.strip()
        warning = bundle.length_warning(text)
        if warning:
            logger.warning(f"Summary {bundle.key}: {warning}")
        return text, warning

    def theme_bundle(
        self,
        product_id: str,
        theme_id: str,
        representatives: Sequence[OpinionTuple],
        template_id: Optional[str] = None,
    ) -> SummaryRequestBundle:
        template_id = template_id or self.theme_template
        return SummaryRequestBundle.create(
            key=Summary.theme_key(product_id, theme_id),
            items=[SummaryItem(o.sentiment.value, o.opinion, o.opinion_id) for o in representatives],
            template_id=template_id,
            word_bounds=self.bounds_for(template_id),
        )

    async def summarize_theme(
        self,
        product_id: str,
        theme_id: str,
        representatives: Sequence[OpinionTuple],
        template_id: Optional[str] = None,
    ) -> Summary:
        """Summarize the prompt opinions of one product+theme"""
        if not representatives:
            raise EmptyInput(f"no opinions for {Summary.theme_key(product_id, theme_id)}")
        bundle = self.theme_bundle(product_id, theme_id, representatives, template_id)
        text, warning = await self.generate(bundle)
        return Summary(
            scope=SummaryScope.THEME,
            key=bundle.key,
            product_id=product_id,
            theme_id=theme_id,
            text=text,
            source_opinion_ids=bundle.source_ids(),
            template_id=bundle.template_id,
            warnings=(warning,) if warning else (),
        )

    async def summarize_texts(self, key: str, texts: Sequence[str], template_id: Optional[str] = None) -> Tuple[str, Optional[str]]:
        """Summarize bare opinion texts, keeping their order and repetitions"""
        template_id = template_id or self.redundancy_template
        bundle = SummaryRequestBundle.create(
            key=key,
            items=[SummaryItem("", text, str(i)) for i, text in enumerate(texts)],
            template_id=template_id,
            word_bounds=self.bounds_for(template_id),
        )
        return await self.generate(bundle)

    async def summarize_product(self, product_id: str, theme_summaries: Sequence[Summary]) -> Summary:
        """Synthesize the theme summaries of one product, in theme_id order"""
        if not theme_summaries:
            raise EmptyInput(f"no theme summaries for product {product_id}")
        ordered = sorted(theme_summaries, key=lambda s: s.theme_id or "")
        bundle = SummaryRequestBundle.create(
            key=product_id,
            items=[SummaryItem(s.theme_id or "", s.text, s.summary_id) for s in ordered],
            template_id=self.product_template,
            word_bounds=self.bounds_for(self.product_template),
        )
        text, warning = await self.generate(bundle)
        return Summary(
            scope=SummaryScope.PRODUCT,
            key=product_id,
            product_id=product_id,
            text=text,
            source_opinion_ids=bundle.source_ids(),
            template_id=bundle.template_id,
            warnings=(warning,) if warning else (),
        )


def groups_by_theme(groups: Sequence[GroupClustering]) -> Dict[Tuple[str, str], List[GroupClustering]]:
    """Sentiment groups keyed by (product, theme), in key order"""
    merged: Dict[Tuple[str, str], List[GroupClustering]] = {}
    for group in sorted(groups, key=lambda g: g.group):
        merged.setdefault((group.group.product_id, group.group.theme_id), []).append(group)
    return merged
