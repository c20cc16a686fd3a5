from collections import Counter
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from src.shared.errors import MissingProduct
from .entities import OpinionTuple, Review
from .value_objects import GroupKey


def product_index(reviews: Iterable[Review]) -> Dict[str, str]:
    """Map review_id to product_id"""
    return {r.review_id: r.product_id for r in reviews}


def group_tuples(
    tuples: Sequence[OpinionTuple], product_of: Mapping[str, str]
) -> Dict[GroupKey, List[OpinionTuple]]:
    """Partition tuples by (product, theme, sentiment).

    Groups iterate in GroupKey order; each group keeps the input order.
    """
    groups: Dict[GroupKey, List[OpinionTuple]] = {}
    for item in tuples:
        if item.review_id not in product_of:
            raise MissingProduct(item.review_id)
        key = GroupKey(product_of[item.review_id], item.theme, item.sentiment)
        groups.setdefault(key, []).append(item)
    return {key: groups[key] for key in sorted(groups)}


def dedupe_tuples(tuples: Iterable[OpinionTuple]) -> List[OpinionTuple]:
    """Drop tuples equal under the collation rule, keeping the first seen.

    review_id is not compared; callers apply this within a single review.
    """
    seen = set()
    result: List[OpinionTuple] = []
    for item in tuples:
        key = item.dedup_key()
        if key in seen:
            continue
        seen.add(key)
        result.append(item)
    return result


def top_themes(
    tuples: Iterable[OpinionTuple], product_of: Mapping[str, str], product_id: str, n: int
) -> List[Tuple[str, int]]:
    """Most frequent themes for one product, count desc then theme asc"""
    counts = Counter(t.theme for t in tuples if product_of.get(t.review_id) == product_id)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:n]
