"""Command line entry point: ``fptwalk {exact,mc,diagnose,report} --config FILE``."""

import argparse
import dataclasses
import logging
import sys

from .config import ExperimentConfig
from .errors import BudgetExceeded
from .report import run

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="fptwalk", description="First-passage experiments for non-i.i.d. walks")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {"exact": "exact lattice DP and its report",
             "mc": "Monte Carlo survival curve and its report",
             "diagnose": "series-condition verdicts only",
             "report": "everything the config selects"}
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="JSON experiment config")
        s.add_argument("--seed", type=int, help="override mc.seed")
        s.add_argument("--n-max", type=int, dest="n_max", help="override n_max")
        s.add_argument("--out", help="output directory (replaced atomically)")
        s.add_argument("--threads", type=int, help="override mc.threads")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def _apply_overrides(cfg, args):
    mc = dict(cfg.mc)
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        mc["seed"] = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ValueError("threads must be >= 1")
        mc["threads"] = args.threads
    changes = {"mc": mc}
    if args.n_max is not None:
        changes["n_max"] = args.n_max
    if args.out is not None:
        changes["output"] = args.out
    return dataclasses.replace(cfg, **changes)


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(ExperimentConfig.load(args.config), args)
        run(cfg, mode=args.command)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
