import pytest

from src.shared.errors import InvalidRecord, MissingInput
from src.shared.jsonl import read_jsonl, write_jsonl
from src.services.clustering.domain.entities import CohesionStats, GroupClustering, HdbscanParams, OpinionCluster
from src.services.clustering.infrastructure.repositories import JsonlClusterRepository
from tests.fixtures.test_data import make_group


def _clustering(product_id: str) -> GroupClustering:
    cluster = OpinionCluster(0, ("o1", "o2", "o3", "o4", "o5"), CohesionStats(0.1, 0.9, 5), ("o3", "o1", "o5"))
    return GroupClustering(make_group(product_id), HdbscanParams(), (cluster,), ("o6",))


@pytest.mark.unit
class TestJsonlClusterRepository:
    async def test_saved_groups_load_back_sorted(self, tmp_path):
        # Arrange
        repo = JsonlClusterRepository(tmp_path / "clusters.jsonl")
        groups = [_clustering("hotel_b"), _clustering("hotel_a")]

        # Act
        await repo.save_all(groups, "run1")
        loaded = await repo.list_groups()

        # Assert
        assert loaded == [groups[1], groups[0]]
        record = read_jsonl(repo.path)[0]
        assert record["run_id"] == "run1"
        assert record["clusters"][0]["member_opinion_ids"] == ["o1", "o2", "o3", "o4", "o5"]

    async def test_missing_file_raises_missing_input(self, tmp_path):
        with pytest.raises(MissingInput):
            await JsonlClusterRepository(tmp_path / "clusters.jsonl").list_groups()

    async def test_malformed_record_reports_line(self, tmp_path):
        path = tmp_path / "clusters.jsonl"
        write_jsonl(path, [_clustering("hotel_a").to_dict(), {"group_key": {}}])
        with pytest.raises(InvalidRecord) as exc:
            await JsonlClusterRepository(path).list_groups()
        assert exc.value.line == 2
