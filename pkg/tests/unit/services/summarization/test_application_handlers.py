import pytest

from src.event_bus import ApplicationEventBus
from src.services.clustering.domain.entities import GroupClustering, HdbscanParams
from src.services.clustering.infrastructure.repositories import JsonlClusterRepository
from src.services.corpus.domain.entities import SummaryScope
from src.services.corpus.infrastructure.repositories import JsonlOpinionRepository
from src.services.provider.infrastructure.mock_gateway import MockProviderGateway
from src.services.summarization.application.commands import SummarizeCommand
from src.services.summarization.application.handlers import SummarizationCommandHandler
from src.services.summarization.domain.services import SummarizationDomainService
from src.services.summarization.infrastructure.repositories import JsonlSummaryRepository
from tests.fixtures.test_data import make_group, make_tuple


@pytest.fixture
async def stored(tmp_path):
    tuples = [
        make_tuple("r1", "The room was clean."),
        make_tuple("r2", "Breakfast was tasty.", theme="food", aspect="breakfast"),
        make_tuple("r3", "The lobby felt cramped.", theme="facilities", sentiment="negative", aspect="lobby"),
    ]
    opinions = JsonlOpinionRepository(tmp_path / "validated_opinions.jsonl")
    await opinions.save_all(tuples, "run0")
    clusters = JsonlClusterRepository(tmp_path / "clusters.jsonl")
    await clusters.save_all([
        GroupClustering(make_group("hotel_a", "rooms"), HdbscanParams(), (), (tuples[0].opinion_id,)),
        GroupClustering(make_group("hotel_a", "food"), HdbscanParams(), (), (tuples[1].opinion_id,)),
        GroupClustering(make_group("hotel_b", "facilities", "negative"), HdbscanParams(), (), (tuples[2].opinion_id,)),
    ], "run0")
    return opinions, clusters


def _handler(tmp_path, stored, catalog, bus, word_bounds=None) -> SummarizationCommandHandler:
    opinions, clusters = stored
    service = SummarizationDomainService(MockProviderGateway(), catalog, model="m", word_bounds=word_bounds)
    return SummarizationCommandHandler(service, opinions, clusters, JsonlSummaryRepository(tmp_path / "out"), bus)


@pytest.mark.unit
class TestSummarizationCommandHandler:
    async def test_summaries_are_written_per_scope(self, tmp_path, stored, catalog):
        # Arrange
        handler = _handler(tmp_path, stored, catalog, ApplicationEventBus())

        # Act
        report = await handler.handle_summarize(SummarizeCommand("run1"))

        # Assert
        assert report.counts == {"theme_summaries": 3, "product_summaries": 2}
        themes = await handler.summaries.list_summaries(SummaryScope.THEME)
        assert [s.key for s in themes] == ["hotel_a|food", "hotel_a|rooms", "hotel_b|facilities"]
        assert themes[1].text == "The room was clean."
        products = await handler.summaries.list_summaries(SummaryScope.PRODUCT)
        assert [p.product_id for p in products] == ["hotel_a", "hotel_b"]
        assert products[0].source_opinion_ids == (themes[0].summary_id, themes[1].summary_id)

    async def test_noise_only_themes_are_skipped_when_noise_is_excluded(self, tmp_path, stored, catalog):
        handler = _handler(tmp_path, stored, catalog, ApplicationEventBus())
        report = await handler.handle_summarize(SummarizeCommand("run1", include_noise=False))
        assert report.counts == {"theme_summaries": 0, "product_summaries": 0}

    async def test_out_of_bounds_summaries_publish_warnings(self, tmp_path, stored, catalog):
        # Arrange
        bus = ApplicationEventBus()
        handler = _handler(tmp_path, stored, catalog, bus, word_bounds=(35, 50))

        # Act
        await handler.handle_summarize(SummarizeCommand("run1"))

        # Assert
        warnings = bus.events_of("summary.length_warning")
        assert len(warnings) == 5
        assert warnings[0].aggregate_id == "hotel_a|food"
        assert warnings[0].data["scope"] == "theme"
