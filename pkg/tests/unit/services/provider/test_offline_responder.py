import json

import pytest

from src.prompts import inputs
from src.services.provider.domain.entities import CompletionRequest
from src.services.provider.infrastructure.offline_responder import OfflineResponder, polarity, sentiment_label


def _request(template_id: str, user: str, system: str = "system") -> CompletionRequest:
    return CompletionRequest(model="m", system_prompt=system, user_prompt=user, template_id=template_id)


@pytest.mark.unit
class TestOfflineResponder:
    def test_polarity_flips_after_negator(self):
        assert polarity("The staff were helpful") == 1
        assert polarity("The staff were not helpful") == -1
        assert sentiment_label("It was a room") == "neutral"

    def test_discovery_groups_sentences_by_lexicon_theme(self):
        # Act
        raw = OfflineResponder()(_request("discovery_space", "The room was clean. Breakfast was delicious."))

        # Assert
        payload = json.loads(raw)
        assert payload["rooms"]["aspect"] == "room"
        assert payload["food"]["sentiment"] == "positive"

    def test_extraction_answers_null_for_unmentioned_themes(self):
        # Arrange
        system = inputs.theme_definitions_block([("Rooms", "room things"), ("Food", "food things")])

        # Act
        payload = json.loads(OfflineResponder()(_request("extraction_space", "The bed was comfy.", system)))

        # Assert
        assert payload["Food"] is None
        assert payload["Rooms"]["aspect"] == "bed"

    def test_validation_accepts_quoted_on_theme_opinion(self):
        user = inputs.validation_input(
            "The bed was comfy.", "Rooms", "room things",
            {"aspect": "bed", "opinion": "The bed was comfy.", "sentiment": "positive"},
        )
        assert OfflineResponder()(_request("validation_space", user)).startswith("Yes")

    def test_judge_ties_on_identical_summaries(self):
        user = inputs.judge_input("clean room", "The room was clean.", "The room was clean.")
        assert json.loads(OfflineResponder()(_request("judge_coverage", user)))["answer"] == "3"

    def test_geval_answer_is_a_two_digit_decimal(self):
        user = inputs.geval_input("The room was clean.", "The room was clean. Pool was huge.")
        assert OfflineResponder()(_request("geval_space", user)) == "0.50"

    def test_supports_only_known_template_families(self):
        responder = OfflineResponder()
        assert responder.supports(_request("theme_summary_space", "- x"))
        assert not responder.supports(_request("custom", "x"))
