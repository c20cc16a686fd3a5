import json

import pytest

from src.event_bus import ApplicationEventBus
from src.shared.errors import MalformedPayload, MissingInput, UsageError
from src.shared.jsonl import read_json, read_jsonl
from src.shared.stages import StageReport
from src.services.integration.manifest import ManifestStore, RunManifest, derive_run_id, digest_files
from src.services.integration.service_orchestrator import PAUSE_FILE, PipelineOrchestrator, StagePlan
from src.services.provider.infrastructure.mock_gateway import MockProviderGateway


class CountingStage:
    """Stage double writing one output file per run"""

    def __init__(self, output, paused: bool = False):
        self.output = output
        self.paused = paused
        self.run_ids = []

    async def __call__(self, run_id: str) -> StageReport:
        self.run_ids.append(run_id)
        self.output.parent.mkdir(parents=True, exist_ok=True)
        self.output.write_text(json.dumps({"run_id": run_id}), encoding="utf-8")
        return StageReport(stage="x", outputs=[self.output], counts={"items": 1}, paused=self.paused,
                           message="waiting" if self.paused else "")


@pytest.mark.unit
class TestManifest:
    def test_missing_files_digest_to_none(self, tmp_path):
        present = tmp_path / "a.txt"
        present.write_text("x", encoding="utf-8")
        digests = digest_files([present, tmp_path / "b.txt"])
        assert digests[str(tmp_path / "b.txt")] is None
        assert len(digests[str(present)]) == 64

    def test_run_id_ignores_directories(self):
        a = derive_run_id("cluster", "cfg", {"/one/opinions.jsonl": "d1"})
        b = derive_run_id("cluster", "cfg", {"/two/opinions.jsonl": "d1"})
        assert a == b
        assert a != derive_run_id("cluster", "cfg", {"/one/opinions.jsonl": "d2"})
        assert a != derive_run_id("summarize", "cfg", {"/one/opinions.jsonl": "d1"})

    def test_outputs_intact_detects_edits(self, tmp_path):
        # Arrange
        output = tmp_path / "out.jsonl"
        output.write_text("a\n", encoding="utf-8")
        manifest = RunManifest("r", "discover", "cfg", 0, outputs=digest_files([output]))

        # Act
        before = manifest.outputs_intact()
        output.write_text("b\n", encoding="utf-8")

        # Assert
        assert before
        assert not manifest.outputs_intact()

    async def test_unreadable_manifest_is_ignored(self, tmp_path):
        store = ManifestStore(tmp_path)
        store.runs_dir.mkdir(parents=True)
        store.path_for("discover").write_text('{"stage": "discover"}', encoding="utf-8")
        assert await store.load("discover") is None


@pytest.mark.unit
class TestPipelineOrchestrator:
    def _orchestrator(self, settings, plans, event_bus) -> PipelineOrchestrator:
        return PipelineOrchestrator(settings, plans, event_bus, MockProviderGateway())

    async def test_unchanged_stage_is_skipped(self, make_settings, event_bus, corpus_path):
        # Arrange
        settings = make_settings()
        stage = CountingStage(settings.out_dir / "discovery_tuples.jsonl")
        orchestrator = self._orchestrator(settings, {"discover": StagePlan(stage, [corpus_path])}, event_bus)

        # Act
        await orchestrator.run_stage("discover")
        second = await orchestrator.run_stage("discover")

        # Assert
        assert len(stage.run_ids) == 1
        assert second.message == "skipped"
        assert [e.event_type for e in event_bus.published] == ["stage.started", "stage.completed", "stage.skipped"]
        manifest = read_json(settings.out_dir / ".runs" / "discover.json")
        assert manifest["run_id"] == stage.run_ids[0]

    async def test_edited_output_forces_a_rerun(self, make_settings, event_bus, corpus_path):
        settings = make_settings()
        stage = CountingStage(settings.out_dir / "discovery_tuples.jsonl")
        orchestrator = self._orchestrator(settings, {"discover": StagePlan(stage, [corpus_path])}, event_bus)
        await orchestrator.run_stage("discover")
        stage.output.write_text("tampered", encoding="utf-8")
        await orchestrator.run_stage("discover")
        assert len(stage.run_ids) == 2

    async def test_changed_input_gives_a_new_run_id(self, make_settings, event_bus, corpus_path):
        # Arrange
        settings = make_settings()
        stage = CountingStage(settings.out_dir / "discovery_tuples.jsonl")
        orchestrator = self._orchestrator(settings, {"discover": StagePlan(stage, [corpus_path])}, event_bus)
        await orchestrator.run_stage("discover")

        # Act
        with open(corpus_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"review_id": "extra", "product_id": "hotel_a", "text": "Fine."}) + "\n")
        await orchestrator.run_stage("discover")

        # Assert
        assert len(set(stage.run_ids)) == 2

    async def test_missing_required_input_raises_error(self, make_settings, event_bus, tmp_path):
        settings = make_settings()
        plan = StagePlan(CountingStage(settings.out_dir / "clusters.jsonl"), [tmp_path / "absent.jsonl"])
        with pytest.raises(MissingInput):
            await self._orchestrator(settings, {"cluster": plan}, event_bus).run_stage("cluster")

    async def test_unknown_stage_raises_usage_error(self, make_settings, event_bus):
        with pytest.raises(UsageError):
            await self._orchestrator(make_settings(), {}, event_bus).run_stage("deploy")

    async def test_pause_writes_marker_and_stops_run_all(self, make_settings, event_bus, corpus_path):
        # Arrange
        settings = make_settings()
        refine = CountingStage(settings.out_dir / "flagged_themes.json", paused=True)
        extract = CountingStage(settings.out_dir / "validated_opinions.jsonl")
        plans = {
            "discover": StagePlan(CountingStage(settings.out_dir / "discovery_tuples.jsonl"), [corpus_path]),
            "refine": StagePlan(refine),
            "extract": StagePlan(extract),
        }
        orchestrator = self._orchestrator(settings, plans, event_bus)

        # Act
        reports = await orchestrator.run_all(["discover", "refine", "extract"])

        # Assert
        assert [r.paused for r in reports] == [False, True]
        assert extract.run_ids == []
        marker = read_json(settings.out_dir / PAUSE_FILE)
        assert marker["stage"] == "refine"
        assert marker["message"] == "waiting"
        assert orchestrator.paused == settings.out_dir / PAUSE_FILE
        assert not (settings.out_dir / ".runs" / "refine.json").exists()

    async def test_completed_refine_clears_the_pause_marker(self, make_settings, event_bus):
        # Arrange
        settings = make_settings()
        refine = CountingStage(settings.out_dir / "flagged_themes.json", paused=True)
        orchestrator = self._orchestrator(settings, {"refine": StagePlan(refine)}, event_bus)
        await orchestrator.run_stage("refine")

        # Act
        refine.paused = False
        await orchestrator.run_stage("refine")

        # Assert
        assert orchestrator.paused is None
        assert (settings.out_dir / ".runs" / "refine.json").is_file()

    async def test_events_are_logged_to_file(self, make_settings, corpus_path):
        settings = make_settings()
        bus = ApplicationEventBus(log_path=settings.out_dir / ".runs" / "events.jsonl")
        stage = CountingStage(settings.out_dir / "discovery_tuples.jsonl")
        await self._orchestrator(settings, {"discover": StagePlan(stage, [corpus_path])}, bus).run_stage("discover")
        events = read_jsonl(settings.out_dir / ".runs" / "events.jsonl")
        assert [e["event_type"] for e in events] == ["stage.started", "stage.completed"]

    async def test_failed_stage_leaves_no_manifest(self, make_settings, event_bus, corpus_path, mocker):
        # Arrange
        settings = make_settings()
        failing = mocker.AsyncMock(side_effect=MalformedPayload("bad JSON", 3))
        orchestrator = self._orchestrator(settings, {"discover": StagePlan(failing, [corpus_path])}, event_bus)

        # Act
        with pytest.raises(MalformedPayload):
            await orchestrator.run_stage("discover")

        # Assert
        failing.assert_awaited_once()
        assert not (settings.out_dir / ".runs" / "discover.json").exists()
        assert [e.event_type for e in event_bus.published] == ["stage.started"]

    async def test_aclose_releases_the_gateway(self, make_settings, event_bus, mocker):
        gateway = MockProviderGateway()
        spy = mocker.spy(gateway, "aclose")
        await PipelineOrchestrator(make_settings(), {}, event_bus, gateway).aclose()
        spy.assert_called_once()
