import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.shared.errors import BaseSizeMismatch, InsufficientOpinions, InvalidRecord, MissingInput
from src.services.benchmark.domain.entities import DuplicationPattern, MmrConfig, Ordering
from src.services.benchmark.domain.services import (
    apply_pattern,
    builtin_patterns,
    cluster_representative,
    filter_quality_clusters,
    generate_benchmark,
    mmr_select,
    strategic_select,
)
from src.services.benchmark.infrastructure.repositories import FilePatternRepository, load_patterns_file
from src.services.clustering.domain.entities import CohesionStats, OpinionCluster
from src.services.corpus.domain.value_objects import EmbeddingVector
from src.services.provider.infrastructure.mock_gateway import hashed_embedding
from tests.fixtures.mock_services import unit
from tests.fixtures.test_data import make_group

BASE = tuple(f"opinion {i}" for i in range(10))


def _vec(*values: float) -> EmbeddingVector:
    return EmbeddingVector(tuple(values))


def _cluster(cluster_id: int, size: int = 5, distance: float = 0.1, similarity: float = 0.9) -> OpinionCluster:
    members = tuple(f"c{cluster_id}-{i}" for i in range(size))
    return OpinionCluster(cluster_id, members, CohesionStats(distance, similarity, size), members[:3])


def _noise(count: int):
    ids = [f"n{i}" for i in range(count)]
    return ids, [hashed_embedding(f"noise opinion number {i}") for i in range(count)]


_NOISE_IDS, _NOISE_VECTORS = _noise(25)

_small_vectors = st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3)).filter(any)


@pytest.mark.unit
class TestDuplicationPatterns:
    def test_builtin_table_has_ten_patterns(self):
        patterns = builtin_patterns()
        assert [p.pattern_id for p in patterns] == list(range(1, 11))
        assert patterns[1].counts == (5, 5, 5, 3000, 3000, 5, 5, 5, 5, 5)
        assert patterns[6].counts == (5, 5, 5, 5, 5, 5, 5, 2000, 2000, 2000)

    def test_boundary_pattern_expands_to_6040_opinions(self):
        # Arrange
        pattern = builtin_patterns()[0]

        # Act
        variant = apply_pattern(BASE, pattern, Ordering.GROUPED, 0, make_group())

        # Assert
        assert pattern.total == 6040
        assert len(variant.opinion_sequence) == 6040
        assert variant.opinion_sequence[:3000] == ("opinion 0",) * 3000
        assert variant.opinion_sequence[-3000:] == ("opinion 9",) * 3000

    def test_all_ones_grouped_pattern_is_identity(self):
        variant = apply_pattern(BASE, DuplicationPattern(99, (1,) * 10), Ordering.GROUPED, 0, make_group())
        assert variant.opinion_sequence == BASE

    def test_shuffled_ordering_keeps_the_multiset(self):
        # Arrange
        pattern = builtin_patterns()[4]

        # Act
        first = apply_pattern(BASE, pattern, Ordering.SHUFFLED, 42, make_group())
        second = apply_pattern(BASE, pattern, Ordering.SHUFFLED, 42, make_group())
        grouped = apply_pattern(BASE, pattern, Ordering.GROUPED, 42, make_group())

        # Assert
        assert first.opinion_sequence == second.opinion_sequence
        assert sorted(first.opinion_sequence) == sorted(grouped.opinion_sequence)
        assert first.opinion_sequence != grouped.opinion_sequence

    def test_wrong_base_size_raises_error(self):
        with pytest.raises(BaseSizeMismatch):
            apply_pattern(BASE[:9], builtin_patterns()[0], Ordering.GROUPED, 0, make_group())

    @pytest.mark.parametrize("counts", [(1,) * 9, (0,) + (1,) * 9])
    def test_invalid_counts_raise_error(self, counts):
        with pytest.raises(InvalidRecord):
            DuplicationPattern(1, counts)


@pytest.mark.unit
class TestFilterQualityClusters:
    @pytest.mark.parametrize("distance, similarity, kept", [
        (0.25, 0.9, False),
        (0.1, 0.69, False),
        (0.1, 0.70, True),
        (0.2, 0.7, True),
    ])
    def test_bounds_are_inclusive(self, distance, similarity, kept):
        cluster = _cluster(0, distance=distance, similarity=similarity)
        assert (filter_quality_clusters([cluster]) == [cluster]) is kept


@pytest.mark.unit
class TestMmrSelect:
    def test_duplicate_is_picked_after_the_diverse_point(self):
        pool = [_vec(1, 0), _vec(1, 0), _vec(0, 1)]
        assert mmr_select(pool, MmrConfig(lambda_=0.8, max_selected=3)) == [0, 2, 1]

    def test_zero_lambda_ranks_by_relevance(self):
        pool = [_vec(1, 0), _vec(0.9, 0.1), _vec(0, 1)]
        assert mmr_select(pool, MmrConfig(lambda_=0.0, max_selected=3)) == [1, 0, 2]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(_small_vectors, min_size=1, max_size=10))
    def test_zero_lambda_order_follows_relevance(self, rows):
        # Arrange
        pool = [_vec(*(float(x) for x in row)) for row in rows]
        n = len(pool)
        relevance = [
            0.0 if n == 1 else sum(pool[i].cosine(pool[j]) for j in range(n) if j != i) / (n - 1)
            for i in range(n)
        ]

        # Act
        order = mmr_select(pool, MmrConfig(lambda_=0.0, max_selected=n))

        # Assert
        assert sorted(order) == list(range(n))
        assert all(relevance[a] >= relevance[b] - 1e-9 for a, b in zip(order, order[1:]))

    def test_full_lambda_ignores_relevance(self):
        pool = [_vec(1, 0), _vec(1, 0), _vec(0, 1)]
        assert mmr_select(pool, MmrConfig(lambda_=1.0, max_selected=3)) == [0, 2, 1]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(min_value=0, max_value=3), min_size=2, max_size=12))
    def test_full_lambda_second_pick_is_orthogonal_when_one_exists(self, axes):
        # Act
        first, second = mmr_select([_vec(*unit(4, a)) for a in axes], MmrConfig(lambda_=1.0, max_selected=2))

        # Assert
        assert first == 0
        if any(a != axes[0] for a in axes):
            assert axes[second] != axes[0]

    def test_singleton_pool(self):
        assert mmr_select([_vec(1, 0)]) == [0]

    def test_selection_is_capped(self):
        _, pool = _noise(15)
        assert len(mmr_select(pool, MmrConfig(max_selected=10))) == 10

    def test_lambda_outside_unit_interval_raises_error(self):
        with pytest.raises(InvalidRecord):
            MmrConfig(lambda_=1.5)


@pytest.mark.unit
class TestStrategicSelect:
    def test_ten_quality_clusters_give_one_pick_each(self):
        # Arrange
        clusters = [_cluster(i, size=5 + i) for i in range(10)]

        # Act
        chosen = strategic_select(make_group(), clusters, [], [], seed=3)

        # Assert
        assert [c.split("-")[0] for c in chosen] == [f"c{i}" for i in range(9, -1, -1)]

    def test_noise_fills_up_after_clusters(self):
        ids, vectors = _noise(20)
        chosen = strategic_select(make_group(), [_cluster(i) for i in range(4)], ids, vectors)
        assert len(chosen) == 10
        assert all(c.startswith("c") for c in chosen[:4])
        assert all(c.startswith("n") for c in chosen[4:])

    def test_noise_alone_can_fill_the_base(self):
        ids, vectors = _noise(10)
        assert sorted(strategic_select(make_group(), [], ids, vectors)) == sorted(ids)

    def test_too_few_opinions_raise_error(self):
        ids, vectors = _noise(5)
        with pytest.raises(InsufficientOpinions) as exc:
            strategic_select(make_group(), [_cluster(i) for i in range(3)], ids, vectors)
        assert (exc.value.available, exc.value.target) == (8, 10)

    def test_cluster_pick_is_seeded(self):
        cluster = _cluster(0, size=50)
        picks = {cluster_representative(make_group(), cluster, 5) for _ in range(3)}
        assert len(picks) == 1
        assert picks.pop() in cluster.member_ids

    @settings(max_examples=500, deadline=None)
    @given(
        sizes=st.lists(st.integers(min_value=5, max_value=40), max_size=12),
        extra_noise=st.integers(min_value=0, max_value=15),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_base_always_has_ten_distinct_opinions(self, sizes, extra_noise, seed):
        # Arrange
        clusters = [_cluster(i, size=s) for i, s in enumerate(sizes)]
        ids, vectors = _NOISE_IDS[:max(0, 10 - len(sizes)) + extra_noise], _NOISE_VECTORS

        # Act
        chosen = strategic_select(make_group(), clusters, ids, vectors[:len(ids)], seed=seed)

        # Assert
        assert len(chosen) == len(set(chosen)) == 10
        assert set(chosen) <= set(ids) | {m for c in clusters for m in c.member_ids}


@pytest.mark.unit
class TestGenerateBenchmark:
    def test_every_pattern_and_ordering_per_group(self):
        # Arrange
        bases = {make_group(): [(f"id{i}", text) for i, text in enumerate(BASE)]}

        # Act
        variants = generate_benchmark(bases, builtin_patterns(), [Ordering.GROUPED, Ordering.SHUFFLED], seed=1)

        # Assert
        assert len(variants) == 20
        assert {(v.pattern_id, v.ordering) for v in variants} == {
            (p, o) for p in range(1, 11) for o in (Ordering.GROUPED, Ordering.SHUFFLED)
        }
        assert variants[0].base_opinion_ids == tuple(f"id{i}" for i in range(10))

    def test_no_groups_give_no_variants(self):
        assert generate_benchmark({}, builtin_patterns(), [Ordering.GROUPED], seed=1) == []


@pytest.mark.unit
class TestPatternFiles:
    def test_custom_patterns_are_loaded_in_id_order(self, tmp_path):
        path = tmp_path / "patterns.json"
        path.write_text(json.dumps([
            {"id": 2, "counts": [2] * 10},
            {"id": 1, "counts": [1] * 10, "description": "flat"},
        ]), encoding="utf-8")
        assert [p.pattern_id for p in load_patterns_file(path)] == [1, 2]

    def test_duplicate_ids_raise_error(self, tmp_path):
        path = tmp_path / "patterns.json"
        path.write_text(json.dumps([{"id": 1, "counts": [1] * 10}] * 2), encoding="utf-8")
        with pytest.raises(InvalidRecord):
            load_patterns_file(path)

    def test_missing_file_raises_missing_input(self, tmp_path):
        with pytest.raises(MissingInput):
            load_patterns_file(tmp_path / "nope.json")

    async def test_repository_without_file_serves_builtin_table(self):
        assert await FilePatternRepository().load() == builtin_patterns()
