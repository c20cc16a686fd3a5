import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Awaitable, Callable, Dict, List, Optional, Sequence

from src.event_bus import ApplicationEventBus
from src.settings import PipelineSettings
from src.shared.errors import MissingInput, PipelineError, UsageError
from src.shared.events import StageCompletedEvent, StagePausedEvent, StageSkippedEvent, StageStartedEvent
from src.shared.jsonl import write_json
from src.shared.stages import RUN_ALL_STAGES, STAGES, StageReport
from src.services.provider.domain.gateway import ProviderGateway
from .manifest import ManifestStore, RunManifest, derive_run_id, digest_files

logger = logging.getLogger(__name__)

PAUSE_FILE = "PAUSED.json"


@dataclass
class StagePlan:
    """How to run one stage and which files it reads"""
    run: Callable[[str], Awaitable[StageReport]]
    required_inputs: List[Path] = field(default_factory=list)
    optional_inputs: List[Path] = field(default_factory=list)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class PipelineOrchestrator:
    """Runs stages with manifests, digest-based skipping and the refine pause"""

    def __init__(
        self,
        settings: PipelineSettings,
        plans: Dict[str, StagePlan],
        event_bus: ApplicationEventBus,
        gateway: ProviderGateway,
    ):
        self.settings = settings
        self.plans = plans
        self.event_bus = event_bus
        self.gateway = gateway
        self.manifests = ManifestStore(settings.out_dir)
        self.pause_path = settings.out_dir / PAUSE_FILE

    async def run_stage(self, stage: str) -> StageReport:
        """Execute one stage unless its inputs and outputs are unchanged"""
        if stage not in self.plans:
            raise UsageError(f"Unknown stage {stage!r}; expected one of {', '.join(STAGES)}")
        plan = self.plans[stage]
        for path in plan.required_inputs:
            if not path.is_file():
                raise MissingInput(path, stage)

        inputs = digest_files(plan.required_inputs + plan.optional_inputs)
        config_digest = self.settings.config_digest()
        run_id = derive_run_id(stage, config_digest, inputs)
        self.event_bus.bind_run(run_id)

        previous = await self.manifests.load(stage)
        if previous is not None and previous.run_id == run_id and previous.outputs_intact():
            logger.info(f"Stage {stage} is up to date (run {run_id}); skipping")
            await self.event_bus.publish(StageSkippedEvent(aggregate_id=stage, data={"run_id": run_id}))
            return StageReport(stage=stage, outputs=[Path(p) for p in previous.outputs], counts=previous.counts, message="skipped")

        started_at = _now()
        logger.info(f"Starting stage {stage} (run {run_id})")
        await self.event_bus.publish(StageStartedEvent(aggregate_id=stage, data={"run_id": run_id}))
        try:
            report = await plan.run(run_id)
        except PipelineError as e:
            logger.error(f"Failed to run stage {stage}: {e}")
            raise

        if report.paused:
            await self._pause(stage, run_id, report)
            return report
        if stage == "refine" and self.pause_path.is_file():
            self.pause_path.unlink()

        manifest = RunManifest(
            run_id=run_id,
            stage=stage,
            config_digest=config_digest,
            seed=self.settings.seed,
            inputs=inputs,
            outputs=digest_files(report.outputs),
            counts=report.counts,
            started_at=started_at,
            finished_at=_now(),
        )
        await self.manifests.save(manifest)
        await self.event_bus.publish(StageCompletedEvent(
            aggregate_id=stage, data={"run_id": run_id, "counts": report.counts},
        ))
        logger.info(f"Completed stage {stage}: {report.counts}")
        return report

    async def _pause(self, stage: str, run_id: str, report: StageReport) -> None:
        write_json(self.pause_path, {
            "stage": stage,
            "run_id": run_id,
            "message": report.message,
            "decisions_path": str(self.settings.decisions_path),
        })
        await self.event_bus.publish(StagePausedEvent(
            aggregate_id=stage, data={"run_id": run_id, "message": report.message},
        ))
        logger.info(f"Paused at {stage}: {report.message}; write {self.settings.decisions_path} and re-run")

    async def run_all(self, stages: Sequence[str] = RUN_ALL_STAGES) -> List[StageReport]:
        """Run stages in order, stopping at the first pause"""
        reports: List[StageReport] = []
        for stage in stages:
            report = await self.run_stage(stage)
            reports.append(report)
            if report.paused:
                break
        return reports

    @property
    def paused(self) -> Optional[Path]:
        return self.pause_path if self.pause_path.is_file() else None

    async def aclose(self) -> None:
        await self.gateway.aclose()
