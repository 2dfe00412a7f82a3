"""Command-line entry point.

Exit codes: 0 all declared criteria pass, 1 a criterion failed, 2 usage or
configuration error, 3 unexpected blow-up.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..solver import BlowUpError
from ..spectral import set_fft_workers
from .checkpoint import CheckpointError
from .config import ConfigError, default_config, load_config
from .experiments import EXPERIMENT_RUNNERS, resume, run_wellposedness

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3

_COMMANDS = {
    "run-regularity": "regularity",
    "run-wellposedness": "wellposedness",
    "run-coupling": "coupling",
    "run-ergodicity": "ergodicity",
    "verify": "verify",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", type=Path, help="output directory (default: run.out)")
    common.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="wickcgl", description="Renormalized stochastic CGL experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sub.add_parser(name, parents=[common], help=f"{_COMMANDS[name]} experiment")
    p = sub.add_parser("resume", parents=[common], help="continue a checkpointed run")
    p.add_argument("checkpoint", type=Path)
    return parser


def _emit(report, out: Path, fmt: str) -> None:
    path = report.write(out, fmt)
    for line in report.summary_lines():
        print(line)
    print(f"report: {path}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_PASS
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    set_fft_workers(args.threads)

    if args.command == "resume":
        out = args.out or args.checkpoint.parent
        try:
            report, _ = resume(args.checkpoint, out)
        except CheckpointError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        _emit(report, out, args.format)
        return EXIT_BLOWUP if report.blowups else (EXIT_PASS if report.passed else EXIT_FAIL)

    experiment = _COMMANDS[args.command]
    try:
        cfg = default_config(experiment)
        if args.config is not None:
            cfg = load_config(args.config, base=cfg)
            if cfg.experiment != experiment:
                raise ConfigError(f"config is for experiment {cfg.experiment!r}, command runs {experiment!r}")
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.validate()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or Path(cfg.run.out)
    try:
        if experiment == "wellposedness":
            report = run_wellposedness(cfg, out_dir=out)
        else:
            report = EXPERIMENT_RUNNERS[experiment](cfg)
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(report, out, args.format)
    if report.blowups:
        return EXIT_BLOWUP
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
