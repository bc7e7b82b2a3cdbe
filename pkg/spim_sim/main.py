"""Command-line entry point: argument parsing, logging setup, exit codes."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from spim_sim import __version__
from spim_sim.commands import COMMANDS
from spim_sim.config import load_run_config, log_level, validation_messages
from spim_sim.errors import InputError

logger = logging.getLogger("spim_sim")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run config")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--mode", choices=["fast", "camera", "realtime"])
    common.add_argument("--roi", type=int, help="side of the centered readout window that is summed")
    common.add_argument("--spins", type=int, help="spins per lattice side")
    common.add_argument("--pixels-per-spin", type=int)
    common.add_argument("--noise", help="noise preset: off | paper-like")
    common.add_argument("--svg", action="store_const", const=True, help="also render SVG charts")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="spim-sim", description="Spatial-photonic Ising machine simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", parents=[common], help="adiabatic M-H on one number-partitioning instance")
    solve.add_argument("--instance", type=Path, help="instance file (JSON array or one number per line)")
    solve.add_argument("--n", type=int, help="generate a random instance of this size")
    solve.add_argument("--digits", type=int)
    solve.add_argument("--steps", type=int, help="adiabatic steps K")
    solve.add_argument("--settle-iterations", type=int)
    solve.add_argument("--iterations", type=int)
    solve.add_argument("--d", type=int, help="spins flipped per proposal")
    solve.add_argument("--beta-start", type=float)
    solve.add_argument("--beta-end", type=float)

    checker = sub.add_parser("checkerboard", parents=[common], help="M-H or GA against a checkerboard target")
    checker.add_argument("--algorithm", choices=["mh", "ga"])
    checker.add_argument("--iterations", type=int, help="objective evaluation budget")
    checker.add_argument("--population", type=int)
    checker.add_argument("--mutation-rate", type=float)

    floor = sub.add_parser("noise-floor", parents=[common], help="mean cost of repeated captures")
    floor.add_argument("--frames", type=int)

    bench = sub.add_parser("bench", parents=[common], help="benchmark suite over random instances")
    bench.add_argument("--sizes", type=_int_list)
    bench.add_argument("--seeds", type=int, help="instances per size")
    bench.add_argument("--solvers", type=_str_list)
    bench.add_argument("--digits", type=int)
    bench.add_argument("--steps", type=int)
    bench.add_argument("--iterations", type=int)
    bench.add_argument("--random-samples", type=int)
    bench.add_argument("--threads", type=int)

    scaling = sub.add_parser("scaling", parents=[common], help="fidelity versus problem size")
    scaling.add_argument("--sizes", type=_int_list)
    scaling.add_argument("--seeds-per-size", type=int)
    scaling.add_argument("--steps", type=int)
    scaling.add_argument("--iterations", type=int)
    scaling.add_argument("--threads", type=int)
    return parser


def _flags(args: argparse.Namespace) -> dict:
    skip = {"command", "config", "verbose", "quiet"}
    flags = {k: v for k, v in vars(args).items() if k not in skip}
    if args.command in ("bench", "scaling"):
        flags["base_seed"] = flags.pop("seed", None)
    return flags


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = "DEBUG" if verbose else "WARNING" if quiet else log_level()
    logging.basicConfig(stream=sys.stderr, format=LOG_FORMAT, level=level, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        cfg, noise_overrides = load_run_config(args.command, args.config, _flags(args))
        return COMMANDS[args.command](cfg, noise_overrides)
    except ValidationError as exc:
        for line in validation_messages(exc):
            print(f"error: {line}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        logger.debug("unhandled failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
