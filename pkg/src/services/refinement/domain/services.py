import logging
from collections import Counter, defaultdict
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.settings import RefinementConfig
from src.shared.errors import ConflictingDecision, UnknownTheme
from src.services.corpus.domain.entities import OpinionTuple, ThemeDefinition, ThemeOrigin, ThemeSet
from src.services.corpus.domain.value_objects import EmbeddingVector, cosine_matrix, stack_vectors
from src.services.discovery.domain.entities import normalize_theme_key
from src.services.provider.domain.gateway import ProviderGateway
from .entities import FlaggedTheme, HumanDecisionFile, RefinementOutcome

logger = logging.getLogger(__name__)


def frequency_filter(freqs: Mapping[str, int], min_frequency: int) -> Dict[str, int]:
    """Keep themes with count >= min_frequency, preserving order"""
    return {theme: count for theme, count in freqs.items() if count >= min_frequency}


def _ranked(themes: Mapping[str, int]) -> List[str]:
    return sorted(themes, key=lambda t: (-themes[t], t))


def semantic_dedup(
    themes: Mapping[str, int],
    embeddings: Mapping[str, EmbeddingVector],
    tau: float,
) -> Tuple[Dict[str, int], Dict[str, str]]:
    """Greedy near-duplicate merge in (count desc, id asc) order.

    A theme survives iff its cosine similarity to every survivor kept so far is
    below tau; otherwise its count goes to the most similar survivor (earliest
    kept on ties).
    """
    order = _ranked(themes)
    for theme in order:
        if theme not in embeddings:
            raise UnknownTheme(theme)
    if not order:
        return {}, {}
    sims = cosine_matrix(stack_vectors([embeddings[t] for t in order]))

    kept: List[int] = []
    survivors: Dict[str, int] = {}
    merged_into: Dict[str, str] = {}
    for i, theme in enumerate(order):
        if kept:
            row = sims[i, kept]
            best = int(np.argmax(row))
            if row[best] >= tau:
                absorber = order[kept[best]]
                survivors[absorber] += themes[theme]
                merged_into[theme] = absorber
                continue
        kept.append(i)
        survivors[theme] = themes[theme]
    return survivors, merged_into


def flag_for_review(
    survivors: Mapping[str, int],
    existing_set: ThemeSet,
    flag_frequency: int,
    tau: float,
    embeddings: Mapping[str, EmbeddingVector],
    existing_embeddings: Mapping[str, EmbeddingVector],
) -> List[FlaggedTheme]:
    """Frequent themes unlike every existing theme, in survivor order"""
    existing_ids = existing_set.ids()
    existing_matrix = stack_vectors([existing_embeddings[t] for t in existing_ids]) if existing_ids else None
    flagged: List[FlaggedTheme] = []
    for theme, count in survivors.items():
        if count < flag_frequency:
            continue
        nearest, similarity = None, 0.0
        if existing_matrix is not None:
            vector = embeddings[theme].as_array()
            sims = cosine_matrix(np.vstack([vector, existing_matrix]))[0, 1:]
            best = int(np.argmax(sims))
            nearest, similarity = existing_ids[best], float(sims[best])
            if similarity >= tau:
                continue
        flagged.append(FlaggedTheme(theme, count, nearest, similarity))
    return flagged


def apply_human_decisions(theme_set: ThemeSet, decisions: HumanDecisionFile) -> ThemeSet:
    """Apply merges, splits and drops; untouched themes keep their position"""
    if decisions.is_empty():
        return theme_set
    by_id = {t.theme_id: t for t in theme_set}

    def _require(theme_id: str) -> ThemeDefinition:
        if theme_id not in by_id:
            raise UnknownTheme(theme_id)
        return by_id[theme_id]

    # first position of each theme id decides where its replacement goes
    replacements: Dict[str, List[ThemeDefinition]] = {}
    removed = set()

    for merge in decisions.merges:
        sources = [_require(s) for s in dict.fromkeys(merge.sources)]
        members = list(sources)
        if merge.target in by_id and merge.target not in merge.sources:
            members.append(by_id[merge.target])
        definition = merge.definition
        if definition is None:
            target = by_id.get(merge.target)
            definition = target.definition if target is not None else sources[0].definition
        merged = ThemeDefinition(
            theme_id=merge.target,
            definition=definition,
            frequency=sum(m.frequency for m in members),
            origin=ThemeOrigin.MERGED,
        )
        anchor = min(members, key=lambda t: theme_set.ids().index(t.theme_id)).theme_id
        replacements[anchor] = [merged]
        removed.update(m.theme_id for m in members)

    for split in decisions.splits:
        _require(split.source)
        for target in split.targets:
            if target.theme_id in by_id:
                raise ConflictingDecision(target.theme_id, "split target already exists")
        replacements[split.source] = [
            ThemeDefinition(t.theme_id, t.definition, 0, ThemeOrigin.SPLIT) for t in split.targets
        ]
        removed.add(split.source)

    for drop in decisions.drops:
        _require(drop)
        removed.add(drop)

    result: List[ThemeDefinition] = []
    for theme in theme_set:
        if theme.theme_id in replacements:
            result.extend(replacements[theme.theme_id])
        elif theme.theme_id not in removed:
            result.append(theme)
    logger.info(
        f"Applied {len(decisions.merges)} merges, {len(decisions.splits)} splits, "
        f"{len(decisions.drops)} drops: {len(theme_set)} -> {len(result)} themes"
    )
    return ThemeSet.create(result)


def aspect_frequency_table(tuples: Iterable[OpinionTuple]) -> Dict[str, Dict[str, int]]:
    """Per normalized theme, aspect counts ordered by count desc then aspect"""
    table: Dict[str, Counter] = defaultdict(Counter)
    for item in tuples:
        table[normalize_theme_key(item.theme)][item.aspect.strip().casefold()] += 1
    return {
        theme: dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
        for theme, counts in sorted(table.items())
    }


def theme_text(theme_id: str) -> str:
    """Text embedded for a theme name"""
    return theme_id.replace("_", " ").strip()


class RefinementDomainService:
    """Frequency filtering, semantic dedup and review flagging of discovered themes"""

    def __init__(self, gateway: ProviderGateway, config: RefinementConfig):
        self.gateway = gateway
        self.config = config

    async def embed_themes(self, theme_ids: Sequence[str]) -> Dict[str, EmbeddingVector]:
        if not theme_ids:
            return {}
        vectors = await self.gateway.embed_batch([theme_text(t) for t in theme_ids])
        return dict(zip(theme_ids, vectors))

    async def refine(self, frequencies: Mapping[str, int], existing: Optional[ThemeSet] = None) -> RefinementOutcome:
        """Filter, deduplicate and flag; build the candidate theme set"""
        cfg = self.config
        filtered = frequency_filter(frequencies, cfg.min_frequency)
        embeddings = await self.embed_themes(list(filtered))
        survivors, merged_into = semantic_dedup(filtered, embeddings, cfg.similarity_threshold)
        logger.info(
            f"Refinement kept {len(filtered)}/{len(frequencies)} themes by frequency, "
            f"{len(survivors)} after dedup"
        )

        existing = existing or ThemeSet()
        existing_embeddings = await self.embed_themes(existing.ids())
        flagged = flag_for_review(
            survivors, existing, cfg.flag_frequency, cfg.similarity_threshold, embeddings, existing_embeddings
        )

        if len(existing) == 0:
            themes = [ThemeDefinition(t, "", c, ThemeOrigin.GENERATED) for t, c in survivors.items()]
        else:
            themes = self._extend_existing(survivors, existing, flagged, embeddings, existing_embeddings)
        return RefinementOutcome(
            filtered=filtered,
            survivors=survivors,
            merged_into=merged_into,
            flagged=tuple(flagged),
            theme_set=ThemeSet.create(themes),
        )

    def _extend_existing(
        self,
        survivors: Mapping[str, int],
        existing: ThemeSet,
        flagged: Sequence[FlaggedTheme],
        embeddings: Mapping[str, EmbeddingVector],
        existing_embeddings: Mapping[str, EmbeddingVector],
    ) -> List[ThemeDefinition]:
        """Existing themes credited with the survivors they absorb, then flagged newcomers"""
        credit: Counter = Counter()
        ids = existing.ids()
        matrix = stack_vectors([existing_embeddings[t] for t in ids])
        for theme, count in survivors.items():
            sims = cosine_matrix(np.vstack([embeddings[theme].as_array(), matrix]))[0, 1:]
            best = int(np.argmax(sims))
            if sims[best] >= self.config.similarity_threshold:
                credit[ids[best]] += count
        themes = [
            ThemeDefinition(t.theme_id, t.definition, credit[t.theme_id], t.origin) for t in existing
        ]
        themes += [
            ThemeDefinition(f.theme_id, "", f.count, ThemeOrigin.GENERATED)
            for f in flagged
            if f.theme_id not in existing
        ]
        return themes
