import argparse
import asyncio
import logging
import os
import sys
from typing import List, Optional

from config import ExperimentConfig, config, parse_experiment_file, parse_ladder, parse_resolutions
from errors import LabError, ParseError
from experiments import VERIFY_ALL, ExperimentResult, list_presets, run_preset
from results import ResultWriter

# Configure logging
logging.basicConfig(
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    level=config.LOG_LEVEL
)
logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAILED_CHECK = 1
EXIT_PARSE_ERROR = 2
EXIT_NOT_CONVERGED = 3


class LabRunner:
    def __init__(self, cfg: ExperimentConfig):
        """Initialize the runner for one experiment configuration"""
        self.cfg = cfg
        self.logger = logging.getLogger(__name__)
        self.writer = ResultWriter(cfg.output_dir)

    async def run_one(self, name: str, subdir: str = "") -> Optional[ExperimentResult]:
        """Run one preset in a worker thread and write its files"""
        try:
            result = await asyncio.to_thread(run_preset, name, self.cfg)
        except ParseError:
            raise
        except LabError as e:
            self.logger.error(f"❌ {name} error: {e}")
            return None

        files = {os.path.join(subdir, k): v for k, v in result.files.items()}
        written = await self.writer.write_all(files)
        if not written["success"]:
            result.check("files_written", -float(len(written["failed"])))
        status = "✅" if result.passed and result.converged else "❌"
        self.logger.info(f"{status} {name}: {sum(c.passed for c in result.checks)}/{len(result.checks)} checks passed")
        return result

    async def run(self) -> int:
        """Run the configured preset (all of them for verify-all)"""
        if self.cfg.preset == "verify-all":
            results = await asyncio.gather(*(self.run_one(name, name) for name in VERIFY_ALL))
        else:
            results = [await self.run_one(self.cfg.preset)]
        return exit_code(results)


def exit_code(results: List[Optional[ExperimentResult]]) -> int:
    """3 when a ladder or solver did not converge, else 1 on any failed check"""
    if any(r is not None and not r.converged for r in results):
        return EXIT_NOT_CONVERGED
    if any(r is None or not r.passed for r in results):
        return EXIT_FAILED_CHECK
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schrodinger-lab", description="Zero sets of -Δu + Vu = μ on a grid")
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("list", help="list presets and the statement each one checks")

    run = commands.add_parser("run", help="run a preset or a config file")
    run.add_argument("preset", nargs="?", help="preset name, or verify-all")
    run.add_argument("--config", dest="config_file", help="flat 'key = value' experiment file")
    run.add_argument("--n", help="comma-separated grid resolutions")
    run.add_argument("--alpha", type=float)
    run.add_argument("--beta", type=float)
    run.add_argument("--out", help="output directory")
    run.add_argument("--ladder", help="k0,ratio,max")
    run.add_argument("--tol-s", dest="tau_s", type=float)
    run.add_argument("--tol-z", dest="tau_z", type=float)
    run.add_argument("--tol-pos", dest="tau_pos", type=float)
    run.add_argument("--tol-zero", dest="tau_zero", type=float)
    return parser


def load_experiment(args: argparse.Namespace) -> ExperimentConfig:
    """Config file first, then the preset argument and flags on top"""
    if args.config_file:
        cfg = parse_experiment_file(args.config_file)
    elif args.preset:
        cfg = ExperimentConfig()
    else:
        raise ParseError("run needs a preset name or --config FILE")
    return cfg.with_overrides(
        preset=args.preset,
        resolutions=parse_resolutions(args.n) if args.n else None,
        ladder=parse_ladder(args.ladder) if args.ladder else None,
        alpha=args.alpha,
        beta=args.beta,
        output_dir=args.out,
        tau_s=args.tau_s,
        tau_z=args.tau_z,
        tau_pos=args.tau_pos,
        tau_zero=args.tau_zero,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Main function"""
    args = build_parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_presets())
        return EXIT_PASS

    try:
        cfg = load_experiment(args)
        return asyncio.run(LabRunner(cfg).run())
    except ParseError as e:
        logger.error(f"Parse error: {e}")
        return EXIT_PARSE_ERROR
    except OSError as e:
        logger.error(f"Config file error: {e}")
        return EXIT_PARSE_ERROR
    except KeyboardInterrupt:
        logger.info("Stopped by user")
        return EXIT_FAILED_CHECK


if __name__ == "__main__":
    sys.exit(main())
