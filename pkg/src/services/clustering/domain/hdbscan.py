"""Exact HDBSCAN over small dense point sets.

Core distances count the point itself (the min_samples-th smallest distance
in its row, zero self-distance included). The tree is built over the rows in
lexicographic order of their coordinates and the labels are mapped back, so
the partition depends only on the multiset of points and not on input order.
Identical points always share a label.

Within that order the construction follows scikit-learn's tree code step by
step: Prim's algorithm prefers the lowest index on ties, merge weights go
through numpy's default sort and zero distances give an infinite lambda.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Sequence, Set

import numpy as np

from src.services.corpus.domain.value_objects import EmbeddingVector, stack_vectors
from .entities import NOISE, ClusteringResult, HdbscanParams

logger = logging.getLogger(__name__)

_CHUNK_FLOATS = 4_000_000


def pairwise_euclidean(points: np.ndarray) -> np.ndarray:
    """Dense distance matrix; squared differences are summed one dimension at a time"""
    n = points.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    step = max(1, _CHUNK_FLOATS // max(1, n * max(points.shape[1], 1)))
    for start in range(0, n, step):
        diff = points[start:start + step, None, :] - points[None, :, :]
        squared = diff * diff
        total = np.zeros(squared.shape[:2], dtype=np.float64)
        for k in range(squared.shape[2]):
            total += squared[:, :, k]
        out[start:start + step] = np.sqrt(total)
    return out


def core_distances(dist: np.ndarray, min_samples: int) -> np.ndarray:
    k = min(min_samples, dist.shape[0]) - 1
    return np.sort(dist, axis=1)[:, k]


def mutual_reachability(dist: np.ndarray, core: np.ndarray) -> np.ndarray:
    return np.maximum(dist, np.maximum(core[:, None], core[None, :]))


def prim_mst(graph: np.ndarray) -> np.ndarray:
    """Minimum spanning tree edges (source, target, weight) grown from node 0"""
    n = graph.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    source = np.zeros(n, dtype=np.intp)
    edges = np.empty((max(n - 1, 0), 3), dtype=np.float64)
    current = 0
    for i in range(n - 1):
        in_tree[current] = True
        row = graph[current]
        closer = (row < best) & ~in_tree
        best[closer] = row[closer]
        source[closer] = current
        candidates = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(candidates))
        edges[i] = (source[nxt], nxt, candidates[nxt])
        current = nxt
    return edges


def single_linkage(edges: np.ndarray, n: int) -> np.ndarray:
    """Merge table rows (left, right, distance, size); merged nodes are numbered from n"""
    edges = edges[np.argsort(edges[:, 2])]
    parent = np.arange(2 * n - 1, dtype=np.intp)
    size = np.concatenate([np.ones(n, dtype=np.intp), np.zeros(n - 1, dtype=np.intp)])
    merges = np.empty((n - 1, 4), dtype=np.float64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    next_label = n
    for i, (a, b, distance) in enumerate(edges):
        ra, rb = find(int(a)), find(int(b))
        merges[i] = (ra, rb, distance, size[ra] + size[rb])
        parent[ra] = parent[rb] = next_label
        size[next_label] = size[ra] + size[rb]
        next_label += 1
    return merges


def _bfs_hierarchy(merges: np.ndarray, root: int, n: int) -> List[int]:
    result: List[int] = []
    frontier = [root]
    while frontier:
        result.extend(frontier)
        frontier = [int(c) for x in frontier if x >= n for c in merges[x - n, :2]]
    return result


@dataclass(frozen=True)
class CondensedTree:
    """Rows (parent, child, lambda, child_size); clusters are numbered from n, points below n"""
    parent: np.ndarray
    child: np.ndarray
    lam: np.ndarray
    child_size: np.ndarray
    n_points: int

    @property
    def root(self) -> int:
        return self.n_points


def condense_tree(merges: np.ndarray, min_cluster_size: int) -> CondensedTree:
    n = merges.shape[0] + 1
    root = 2 * (n - 1)
    relabel = np.empty(root + 1, dtype=np.intp)
    relabel[root] = n
    next_label = n + 1
    ignore = np.zeros(root + 1, dtype=bool)
    rows: List[tuple] = []

    def size_of(node: int) -> int:
        return int(merges[node - n, 3]) if node >= n else 1

    def fall_out(label: int, subtree_root: int, lam: float) -> None:
        for sub in _bfs_hierarchy(merges, subtree_root, n):
            if sub < n:
                rows.append((label, sub, lam, 1))
            ignore[sub] = True

    for node in _bfs_hierarchy(merges, root, n):
        if node < n or ignore[node]:
            continue
        left, right, distance = int(merges[node - n, 0]), int(merges[node - n, 1]), merges[node - n, 2]
        lam = 1.0 / distance if distance > 0.0 else np.inf
        left_count, right_count = size_of(left), size_of(right)
        label = int(relabel[node])
        if left_count >= min_cluster_size and right_count >= min_cluster_size:
            relabel[left] = next_label
            rows.append((label, next_label, lam, left_count))
            relabel[right] = next_label + 1
            rows.append((label, next_label + 1, lam, right_count))
            next_label += 2
        elif left_count < min_cluster_size and right_count < min_cluster_size:
            fall_out(label, left, lam)
            fall_out(label, right, lam)
        elif left_count < min_cluster_size:
            relabel[right] = label
            fall_out(label, left, lam)
        else:
            relabel[left] = label
            fall_out(label, right, lam)

    table = np.array(rows, dtype=np.float64).reshape(-1, 4)
    return CondensedTree(
        parent=table[:, 0].astype(np.intp),
        child=table[:, 1].astype(np.intp),
        lam=table[:, 2],
        child_size=table[:, 3].astype(np.intp),
        n_points=n,
    )


def compute_stability(tree: CondensedTree) -> Dict[int, float]:
    """Excess of mass per cluster: sum of (lambda_out - lambda_birth) * size"""
    births: Dict[int, float] = {int(c): float(l) for c, l in zip(tree.child, tree.lam)}
    births[tree.root] = 0.0
    cluster_ids = {tree.root} | {int(c) for c, s in zip(tree.child, tree.child_size) if s > 1}
    stability = {c: 0.0 for c in sorted(cluster_ids)}
    for p, l, s in zip(tree.parent, tree.lam, tree.child_size):
        stability[int(p)] += (float(l) - births[int(p)]) * int(s)
    return stability


def _bfs_clusters(children: Dict[int, List[int]], root: int) -> List[int]:
    result: List[int] = []
    frontier = [root]
    while frontier:
        result.extend(frontier)
        frontier = [c for x in frontier for c in children.get(x, [])]
    return result


def select_clusters(
    tree: CondensedTree,
    stability: Dict[int, float],
    epsilon: float,
    allow_single_cluster: bool,
) -> Set[int]:
    """Excess-of-mass selection, then merging of clusters born below epsilon"""
    stability = dict(stability)
    is_cluster_row = tree.child_size > 1
    children: Dict[int, List[int]] = defaultdict(list)
    parent_of: Dict[int, int] = {}
    birth: Dict[int, float] = {}
    for p, c, l in zip(tree.parent[is_cluster_row], tree.child[is_cluster_row], tree.lam[is_cluster_row]):
        children[int(p)].append(int(c))
        parent_of[int(c)] = int(p)
        birth[int(c)] = float(l)

    node_list = sorted(stability, reverse=True)
    if not allow_single_cluster:
        node_list = [c for c in node_list if c != tree.root]
    is_cluster = {c: True for c in node_list}

    for node in node_list:
        subtree = sum(stability[c] for c in children.get(node, []))
        if subtree > stability[node]:
            is_cluster[node] = False
            stability[node] = subtree
        else:
            for sub in _bfs_clusters(children, node):
                if sub != node:
                    is_cluster[sub] = False

    if epsilon != 0.0 and parent_of:
        eom = sorted(c for c, selected in is_cluster.items() if selected)
        if len(eom) == 1 and eom[0] == tree.root:
            chosen = set(eom) if allow_single_cluster else set()
        else:
            chosen = _epsilon_search(eom, children, parent_of, birth, epsilon, allow_single_cluster, tree.root)
        is_cluster = {c: c in chosen for c in is_cluster}
    return {c for c, selected in is_cluster.items() if selected}


def _epsilon_search(
    leaves: Sequence[int],
    children: Dict[int, List[int]],
    parent_of: Dict[int, int],
    birth: Dict[int, float],
    epsilon: float,
    allow_single_cluster: bool,
    root: int,
) -> Set[int]:
    def traverse_upwards(leaf: int) -> int:
        parent = parent_of[leaf]
        if parent == root:
            return parent if allow_single_cluster else leaf
        if 1.0 / birth[parent] > epsilon:
            return parent
        return traverse_upwards(parent)

    selected: List[int] = []
    processed: Set[int] = set()
    for leaf in leaves:
        if 1.0 / birth[leaf] < epsilon:
            if leaf not in processed:
                chosen = traverse_upwards(leaf)
                selected.append(chosen)
                processed.update(s for s in _bfs_clusters(children, chosen) if s != chosen)
        else:
            selected.append(leaf)
    return set(selected)


def label_points(tree: CondensedTree, clusters: Set[int], epsilon: float, allow_single_cluster: bool) -> List[int]:
    """Point labels as selected cluster node ids, NOISE elsewhere"""
    n = tree.n_points
    size = int(max(tree.child.max(initial=0), tree.parent.max(initial=0))) + 1
    uf = np.arange(size, dtype=np.intp)

    def find(x: int) -> int:
        root = x
        while uf[root] != root:
            root = uf[root]
        while uf[x] != root:
            uf[x], x = root, uf[x]
        return root

    for p, c in zip(tree.parent, tree.child):
        if int(c) not in clusters:
            uf[find(int(c))] = find(int(p))

    point_lambda = np.zeros(n)
    point_rows = tree.child < n
    point_lambda[tree.child[point_rows]] = tree.lam[point_rows]
    single_root = allow_single_cluster and clusters == {tree.root}
    threshold = np.inf
    if single_root:
        if epsilon != 0.0:
            threshold = 1.0 / epsilon
        else:
            threshold = float(tree.lam[tree.parent == tree.root].max())

    labels = [NOISE] * n
    for i in range(n):
        cluster = find(i)
        if cluster != tree.root and cluster in clusters:
            labels[i] = cluster
        elif single_root and point_lambda[i] >= threshold:
            labels[i] = cluster
    return labels


def _finalize(raw: Sequence[int], params: HdbscanParams) -> ClusteringResult:
    """Drop undersized clusters to noise and number clusters by first member"""
    counts: Dict[int, int] = defaultdict(int)
    for label in raw:
        if label != NOISE:
            counts[label] += 1
    mapping: Dict[int, int] = {}
    labels: List[int] = []
    for label in raw:
        if label == NOISE or counts[label] < params.min_cluster_size:
            labels.append(NOISE)
            continue
        if label not in mapping:
            mapping[label] = len(mapping)
        labels.append(mapping[label])
    return ClusteringResult.from_labels(labels, params)


def canonical_order(points: np.ndarray) -> np.ndarray:
    """Row order sorted lexicographically by coordinates, first dimension most significant"""
    if points.shape[0] == 0 or points.shape[1] == 0:
        return np.arange(points.shape[0])
    return np.lexsort(points.T[::-1])


def _share_labels_between_duplicates(ordered: np.ndarray, raw: List[int]) -> List[int]:
    same_as_previous = np.all(ordered[1:] == ordered[:-1], axis=1)
    shared = list(raw)
    for i in np.flatnonzero(same_as_previous) + 1:
        shared[i] = shared[i - 1]
    return shared


def _cluster_ordered(points: np.ndarray, params: HdbscanParams) -> List[int]:
    dist = pairwise_euclidean(points)
    graph = mutual_reachability(dist, core_distances(dist, params.min_samples))
    merges = single_linkage(prim_mst(graph), points.shape[0])
    tree = condense_tree(merges, params.min_cluster_size)
    stability = compute_stability(tree)
    clusters = select_clusters(tree, stability, params.cluster_selection_epsilon, params.allow_single_cluster)
    return label_points(tree, clusters, params.cluster_selection_epsilon, params.allow_single_cluster)


def hdbscan_matrix(points: np.ndarray, params: HdbscanParams) -> ClusteringResult:
    n = points.shape[0]
    if n < params.min_cluster_size:
        return ClusteringResult.from_labels([NOISE] * n, params)
    order = canonical_order(points)
    ordered = points[order]
    labels_in_order = _share_labels_between_duplicates(ordered, _cluster_ordered(ordered, params))
    raw = [NOISE] * n
    for position, index in enumerate(order):
        raw[int(index)] = labels_in_order[position]
    result = _finalize(raw, params)
    logger.debug(f"HDBSCAN on {n} points: {result.n_clusters} clusters, {len(result.noise())} noise")
    return result


def hdbscan(points: Sequence[EmbeddingVector], params: HdbscanParams) -> ClusteringResult:
    """Cluster embeddings with Euclidean distance; raises DimensionMismatch on ragged input"""
    if not points:
        return ClusteringResult((), (), params)
    return hdbscan_matrix(stack_vectors(points), params)
