import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.settings import RefinementConfig
from src.shared.errors import ConflictingDecision, InvalidRecord, UnknownTheme
from src.services.corpus.domain.entities import ThemeDefinition, ThemeOrigin, ThemeSet
from src.services.corpus.domain.value_objects import EmbeddingVector
from src.services.refinement.domain.entities import HumanDecisionFile, MergeDecision, SplitDecision, SplitTarget
from src.services.refinement.domain.services import (
    RefinementDomainService,
    apply_human_decisions,
    aspect_frequency_table,
    flag_for_review,
    frequency_filter,
    semantic_dedup,
)
from tests.fixtures.mock_services import VectorGateway, unit
from tests.fixtures.test_data import make_theme_set, make_tuple


def _vec(*values: float) -> EmbeddingVector:
    return EmbeddingVector(tuple(values))


_theme_names = st.sampled_from(["view", "views", "rooms", "food", "staff", "pool", "wifi", "bar", "spa"])
_small_vectors = st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3)).filter(any)
_theme_tables = st.dictionaries(_theme_names, st.tuples(st.integers(1, 200), _small_vectors), max_size=9)
# no small-integer cosine equals one of these exactly
_taus = st.sampled_from([0.67, 0.83, 0.91])


def _split(table):
    return {k: c for k, (c, _) in table.items()}, {k: _vec(*(float(x) for x in v)) for k, (_, v) in table.items()}


@pytest.mark.unit
class TestFrequencyFilter:
    def test_keeps_themes_at_or_above_threshold(self):
        assert frequency_filter({"a": 10, "b": 3, "c": 5}, 5) == {"a": 10, "c": 5}

    def test_zero_threshold_is_identity(self):
        freqs = {"a": 0, "b": 3}
        assert frequency_filter(freqs, 0) == freqs

    def test_mid_sized_themes_fall_below_a_high_threshold(self):
        # Arrange
        freqs = {"view": 97, "safety": 97, "views": 85, "breakfast": 103}

        # Act
        kept = frequency_filter(freqs, 100)

        # Assert
        assert kept == {"breakfast": 103}


@pytest.mark.unit
class TestSemanticDedup:
    def test_near_duplicate_counts_are_folded_into_the_larger_theme(self):
        # Arrange
        themes = {"view": 97, "views": 85}
        embeddings = {"view": _vec(1.0, 0.0), "views": _vec(0.99, 0.01)}

        # Act
        survivors, merged_into = semantic_dedup(themes, embeddings, 0.85)

        # Assert
        assert survivors == {"view": 182}
        assert merged_into == {"views": "view"}

    def test_three_similar_themes_collapse_into_one(self):
        themes = {"staff": 4, "service": 5, "employees": 3}
        embeddings = {t: _vec(1.0, 1.0) for t in themes}
        survivors, _ = semantic_dedup(themes, embeddings, 0.85)
        assert survivors == {"service": 12}

    def test_orthogonal_themes_survive_a_threshold_of_one(self):
        # Arrange
        themes = {"rooms": 4, "food": 4}
        embeddings = {"rooms": _vec(1.0, 0.0), "food": _vec(0.0, 1.0)}

        # Act
        survivors, merged_into = semantic_dedup(themes, embeddings, 1.0)

        # Assert
        assert survivors == {"food": 4, "rooms": 4}
        assert merged_into == {}

    def test_total_count_is_preserved(self):
        themes = {"a": 7, "b": 6, "c": 2, "d": 1}
        embeddings = {"a": _vec(1, 0), "b": _vec(0, 1), "c": _vec(1, 0.1), "d": _vec(0.1, 1)}
        survivors, _ = semantic_dedup(themes, embeddings, 0.9)
        assert sum(survivors.values()) == sum(themes.values())
        assert survivors == {"a": 9, "b": 7}

    def test_missing_embedding_raises_error(self):
        with pytest.raises(UnknownTheme):
            semantic_dedup({"a": 1}, {}, 0.85)

    @settings(max_examples=100, deadline=None)
    @given(data=st.data(), table=_theme_tables, tau=_taus)
    def test_input_order_does_not_matter(self, data, table, tau):
        # Arrange
        themes, embeddings = _split(table)
        order = data.draw(st.permutations(list(themes)))
        shuffled = {k: themes[k] for k in order}
        shuffled_embeddings = {k: embeddings[k] for k in reversed(order)}

        # Act
        survivors, merged_into = semantic_dedup(themes, embeddings, tau)
        shuffled_survivors, shuffled_merged = semantic_dedup(shuffled, shuffled_embeddings, tau)

        # Assert
        assert list(shuffled_survivors.items()) == list(survivors.items())
        assert shuffled_merged == merged_into

    @settings(max_examples=200, deadline=None)
    @given(table=_theme_tables, tau=_taus)
    def test_second_pass_changes_nothing(self, table, tau):
        themes, embeddings = _split(table)
        survivors, _ = semantic_dedup(themes, embeddings, tau)
        again, merged_again = semantic_dedup(survivors, embeddings, tau)
        assert again == survivors
        assert merged_again == {}

    @settings(max_examples=200, deadline=None)
    @given(table=_theme_tables, tau=_taus)
    def test_survivors_are_pairwise_below_threshold_and_counts_are_kept(self, table, tau):
        # Act
        themes, embeddings = _split(table)
        survivors, merged_into = semantic_dedup(themes, embeddings, tau)

        # Assert
        kept = list(survivors)
        for i, a in enumerate(kept):
            for b in kept[i + 1:]:
                assert embeddings[a].cosine(embeddings[b]) < tau
        assert sum(survivors.values()) == sum(themes.values())
        assert set(kept) | set(merged_into) == set(themes)
        assert all(target in survivors for target in merged_into.values())


@pytest.mark.unit
class TestFlagForReview:
    def test_everything_frequent_is_flagged_without_existing_set(self):
        # Arrange
        survivors = {"pool": 8, "spa": 2}
        embeddings = {"pool": _vec(1, 0), "spa": _vec(0, 1)}

        # Act
        flagged = flag_for_review(survivors, ThemeSet(), 5, 0.85, embeddings, {})

        # Assert
        assert [(f.theme_id, f.nearest_existing) for f in flagged] == [("pool", None)]

    def test_theme_matching_an_existing_one_is_not_flagged(self):
        existing = make_theme_set("Rooms")
        flagged = flag_for_review(
            {"rooms": 9}, existing, 5, 0.85, {"rooms": _vec(1, 0)}, {"Rooms": _vec(1, 0)}
        )
        assert flagged == []

    def test_one_novel_theme_among_known_ones(self):
        # Arrange
        existing = make_theme_set("Rooms", "Food")
        existing_embeddings = {"Rooms": _vec(1, 0, 0), "Food": _vec(0, 1, 0)}
        survivors = {"rooms": 20, "food": 15, "breakfast": 12, "meals": 9, "pool": 6}
        embeddings = {
            "rooms": _vec(1, 0, 0),
            "food": _vec(0, 1, 0),
            "breakfast": _vec(0.1, 1, 0),
            "meals": _vec(0, 1, 0.1),
            "pool": _vec(0.2, 0, 1),
        }

        # Act
        flagged = flag_for_review(survivors, existing, 5, 0.85, embeddings, existing_embeddings)

        # Assert
        assert [f.theme_id for f in flagged] == ["pool"]
        assert flagged[0].nearest_existing == "Rooms"
        assert flagged[0].similarity < 0.85


def _tour_themes() -> ThemeSet:
    return ThemeSet.create([
        ThemeDefinition("tour_guide", "Guide quality.", 5),
        ThemeDefinition("host", "", 3),
        ThemeDefinition("instructor", "", 2),
        ThemeDefinition("logistics", "Timing and route.", 6),
        ThemeDefinition("food", "Meals.", 4),
    ])


@pytest.mark.unit
class TestApplyHumanDecisions:
    def test_merge_folds_sources_into_existing_target(self):
        # Arrange
        decisions = HumanDecisionFile(merges=(MergeDecision(("host", "instructor"), "tour_guide"),))

        # Act
        result = apply_human_decisions(_tour_themes(), decisions)

        # Assert
        assert result.ids() == ["tour_guide", "logistics", "food"]
        merged = result.get("tour_guide")
        assert merged.frequency == 10
        assert merged.definition == "Guide quality."
        assert merged.origin is ThemeOrigin.MERGED

    def test_split_replaces_the_source_in_place(self):
        decisions = HumanDecisionFile(splits=(
            SplitDecision("logistics", (SplitTarget("tour_pacing", "Pace."), SplitTarget("tour_itinerary"))),
        ))
        result = apply_human_decisions(_tour_themes(), decisions)
        assert result.ids() == ["tour_guide", "host", "instructor", "tour_pacing", "tour_itinerary", "food"]
        assert result.get("tour_pacing").origin is ThemeOrigin.SPLIT

    def test_drop_removes_the_theme(self):
        result = apply_human_decisions(_tour_themes(), HumanDecisionFile(drops=("food",)))
        assert "food" not in result

    def test_empty_decisions_are_identity(self):
        themes = _tour_themes()
        assert apply_human_decisions(themes, HumanDecisionFile()) is themes

    def test_unknown_source_raises_error(self):
        with pytest.raises(UnknownTheme):
            apply_human_decisions(_tour_themes(), HumanDecisionFile(drops=("spa",)))

    def test_split_onto_existing_theme_raises_error(self):
        decisions = HumanDecisionFile(splits=(SplitDecision("logistics", (SplitTarget("food"),)),))
        with pytest.raises(ConflictingDecision):
            apply_human_decisions(_tour_themes(), decisions)


@pytest.mark.unit
class TestHumanDecisionFile:
    def test_theme_in_two_decisions_raises_error(self):
        with pytest.raises(ConflictingDecision) as exc:
            HumanDecisionFile(merges=(MergeDecision(("host", "instructor"), "tour_guide"),), drops=("host",))
        assert exc.value.theme_id == "host"

    def test_from_dict_accepts_plain_split_targets(self):
        decisions = HumanDecisionFile.from_dict({"splits": [{"source": "logistics", "targets": ["a", "b"]}]})
        assert [t.theme_id for t in decisions.splits[0].targets] == ["a", "b"]

    def test_from_dict_rejects_malformed_entries(self):
        with pytest.raises(InvalidRecord):
            HumanDecisionFile.from_dict({"merges": [{"target": "x"}]})


@pytest.mark.unit
class TestAspectFrequencyTable:
    def test_aspects_are_counted_per_theme(self):
        tuples = [
            make_tuple("r1", "a", theme="Rooms", aspect="Bed"),
            make_tuple("r2", "b", theme="rooms", aspect="bed"),
            make_tuple("r3", "c", theme="rooms", aspect="balcony"),
        ]
        assert aspect_frequency_table(tuples) == {"rooms": {"bed": 2, "balcony": 1}}


def _config(**overrides) -> RefinementConfig:
    values = {"min_frequency": 2, "similarity_threshold": 0.85, "flag_frequency": 5}
    values.update(overrides)
    return RefinementConfig(**values)


@pytest.mark.unit
class TestRefinementDomainService:
    async def test_refine_without_existing_set_builds_generated_themes(self):
        # Arrange
        gateway = VectorGateway({"rooms": unit(3, 0), "room": unit(3, 0), "food": unit(3, 1)})
        service = RefinementDomainService(gateway, _config())

        # Act
        outcome = await service.refine({"rooms": 10, "room": 6, "food": 3, "spa": 1})

        # Assert
        assert outcome.filtered == {"rooms": 10, "room": 6, "food": 3}
        assert outcome.survivors == {"rooms": 16, "food": 3}
        assert [(t.theme_id, t.frequency) for t in outcome.theme_set] == [("rooms", 16), ("food", 3)]
        assert outcome.flagged_ids() == ["rooms"]

    async def test_refine_credits_existing_themes_then_appends_newcomers(self):
        # Arrange
        gateway = VectorGateway({
            "rooms": unit(3, 0), "pool": unit(3, 2),
            "Rooms": unit(3, 0), "Food": unit(3, 1),
        })
        existing = ThemeSet.create([ThemeDefinition("Rooms", "Room things."), ThemeDefinition("Food", "Meals.")])

        # Act
        outcome = await RefinementDomainService(gateway, _config()).refine({"rooms": 16, "pool": 8}, existing)

        # Assert
        assert [(t.theme_id, t.frequency) for t in outcome.theme_set] == [("Rooms", 16), ("Food", 0), ("pool", 8)]
        assert outcome.theme_set.get("Rooms").definition == "Room things."
        assert outcome.flagged_ids() == ["pool"]
