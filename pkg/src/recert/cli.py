"""``recert`` command line.

Exit codes: 0 success, 1 usage or configuration error, 2 an asserted
property failed (e.g. a violation frequency above its bound plus slack),
3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import KINDS, ConfigError, ExperimentConfig, load_config
from .core import InvalidInputError
from .experiments import run_experiment

EXIT_OK, EXIT_USAGE, EXIT_PROPERTY, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(v: str) -> int:
    x = int(v)
    if not 0 <= x < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return x


def _positive(v: str) -> int:
    x = int(v)
    if x < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="recert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", type=Path, required=kind != "audit",
                        help="experiment file (optional for audit)")
        sp.add_argument("--seed", type=_u64, default=None, help="master seed (overrides the config)")
        sp.add_argument("--workers", type=_positive, default=None, help="worker processes")
        sp.add_argument("--out", type=Path, default=None, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config is not None else ExperimentConfig()
    except OSError as exc:
        print(f"recert: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"recert: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run_experiment(cfg, kind=args.kind, seed=args.seed, workers=args.workers)
    except ConfigError as exc:
        print(f"recert: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidInputError as exc:
        print(f"recert: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"recert: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    out = args.out or Path(cfg.get("experiment", "out", "results"))
    if args.out is None and args.config is not None and not out.is_absolute():
        out = cfg.base_dir / out
    try:
        csv_path, sum_path = report.write(out)
    except OSError as exc:
        print(f"recert: cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(report.summary_text())
    print(f"wrote {csv_path} and {sum_path}")
    return EXIT_OK if report.passed else EXIT_PROPERTY


if __name__ == "__main__":
    sys.exit(main())
