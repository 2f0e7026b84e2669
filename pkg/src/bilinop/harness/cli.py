"""``bilinop`` command line interface.

Exit codes: 0 when the experiment ran (whatever its verdicts), 2 when a
precondition failed (bad grid, frequencies past Nyquist, bad config).
"""

from __future__ import annotations

import argparse
import sys

from ..exceptions import BilinopError, PreconditionError
from .config import KINDS, ExperimentConfig
from .experiments import run
from .report import write_report

_HELP = {
    "lp-check": "check the Littlewood-Paley partition of unity",
    "counterexample": "reproduce the unboundedness counterexample",
    "norm-probe": "Sobolev norm-ratio probe of a bilinear symbol",
    "paraproduct": "paraproduct and multiplication-defect study",
    "bench": "timing and accuracy of the evaluation strategies",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bilinop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=_HELP[kind])
        p.add_argument("--config", help="JSON file with config overrides")
        p.add_argument("--n", type=int, help="grid size N (power of two)")
        p.add_argument("--scale-l", type=float, dest="scale_l", help="grid scale L (period 2 pi L)")
        p.add_argument("--jmax", type=int, dest="j_max", help="largest dyadic level of the counterexample")
        p.add_argument("--s", type=float, help="Sobolev smoothness")
        p.add_argument("--p", type=float, help="first input exponent")
        p.add_argument("--q", type=float, help="second input exponent")
        p.add_argument("--t", type=float, help="output exponent")
        p.add_argument("--trials", type=int, help="trials per scale")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--out", default="-", help="output path ('-' for stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def config_from_args(args) -> ExperimentConfig:
    overrides = {k: getattr(args, k) for k in ("n", "scale_l", "j_max", "s", "p", "q", "t", "trials", "seed")}
    if args.command in ("norm-probe", "bench") and args.n is not None:
        overrides["sizes"] = (args.n,)
    return ExperimentConfig.load(args.command, args.config, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = run(cfg)
    except PreconditionError as exc:
        print(f"bilinop {args.command}: precondition failed: {exc}", file=sys.stderr)
        return 2
    except BilinopError as exc:
        print(f"bilinop {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return 2
    write_report(report, None if args.out == "-" else args.out, args.format)
    return 0


if __name__ == "__main__":
    sys.exit(main())
