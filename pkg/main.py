import argparse
import asyncio
import logging
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from src.dependencies import get_orchestrator
from src.settings import PipelineSettings
from src.shared.errors import PipelineError, UsageError
from src.shared.stages import STAGES, StageReport

logger = logging.getLogger("review_digest")

COMMANDS = STAGES + ("run-all",)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--provider", choices=["live", "mock"], help="Provider backend")
    common.add_argument("--out-dir", help="Output directory")
    common.add_argument("--workers", type=int, help="Worker pool size")

    parser = argparse.ArgumentParser(
        prog="review-digest",
        description="Opinion summarization pipeline over review corpora",
    )
    commands = parser.add_subparsers(dest="command", metavar="command", required=True)
    for name in COMMANDS:
        commands.add_parser(name, parents=[common], help=f"run {'every stage' if name == 'run-all' else name}")
    return parser


def overrides_from(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.provider is not None:
        overrides["provider"] = {"backend": args.provider}
    if args.out_dir is not None:
        overrides["paths"] = {"out_dir": args.out_dir}
    return overrides


async def run_command(settings: PipelineSettings, command: str) -> List[StageReport]:
    orchestrator = get_orchestrator(settings)
    try:
        if command == "run-all":
            return await orchestrator.run_all()
        return [await orchestrator.run_stage(command)]
    finally:
        await orchestrator.aclose()


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns 0 on success, 1 on pipeline errors, 2 on usage errors"""
    load_dotenv()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2

    try:
        settings = PipelineSettings.load(args.config, overrides_from(args))
        logging.getLogger().setLevel(settings.log_level.upper())
        reports = asyncio.run(run_command(settings, args.command))
    except UsageError as e:
        logger.error(str(e))
        return 2
    except PipelineError as e:
        logger.error(f"Failed to run {args.command}: {e}")
        return 1

    for report in reports:
        status = "paused" if report.paused else (report.message or "done")
        logger.info(f"{report.stage}: {status} {report.counts}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
