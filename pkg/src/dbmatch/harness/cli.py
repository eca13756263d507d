"""Command line entry point: ``dbmatch <subcommand>``.

Exit codes: 0 on success, 2 for bad arguments or configuration, 3 for
runtime or resource errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ConfigError, DBMatchError, TrialError
from ..markov_model import validate_params
from .config import load_config
from .experiment import run_experiment, summary_csv, write_outputs
from .tables import capacity_csv, capacity_table, collision_probe, probe_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("dbmatch")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dbmatch", description="Database matching under random column repetitions")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    cap = sub.add_parser("capacity", help="tabulate the matching capacity over deletion probabilities")
    cap.add_argument("--gamma", type=float, required=True)
    cap.add_argument("--u", type=_floats, required=True, help="base distribution, e.g. 0.5,0.5")
    cap.add_argument("--delta-list", type=_floats, required=True)
    cap.add_argument("--tol", type=float, default=1e-10)

    for name, help_text in (("simulate", "run a Monte Carlo experiment"), ("sweep", "alias of simulate")):
        sim = sub.add_parser(name, help=help_text)
        sim.add_argument("--config", required=True)
        sim.add_argument("--workers", type=int, default=1)
        sim.add_argument("--out-dir", default=None, help="write summary.csv, trials.jsonl and timings.csv here")

    probe = sub.add_parser("collision-probe", help="estimate the duplicate-histogram rate")
    probe.add_argument("--gamma", type=float, required=True)
    probe.add_argument("--u", type=_floats, required=True)
    probe.add_argument("--n-list", type=_ints, required=True)
    probe.add_argument("--m-list", type=_ints, required=True)
    probe.add_argument("--trials", type=int, required=True)
    probe.add_argument("--seed", type=int, required=True)
    probe.add_argument("--marked-symbol", type=int, default=1)
    return p


def _capacity(args) -> int:
    params = validate_params(args.gamma, args.u)
    sys.stdout.write(capacity_csv(capacity_table(params, args.delta_list, args.tol)))
    return EXIT_OK


def _simulate(args) -> int:
    config = load_config(args.config)
    result = run_experiment(config, workers=max(1, args.workers))
    if args.out_dir:
        paths = write_outputs(result, args.out_dir)
        log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    sys.stdout.write(summary_csv(result.summary))
    return EXIT_OK


def _probe(args) -> int:
    params = validate_params(args.gamma, args.u)
    rows = collision_probe(params, args.n_list, args.m_list, args.trials, args.seed, args.marked_symbol)
    sys.stdout.write(probe_csv(rows))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"capacity": _capacity, "simulate": _simulate, "sweep": _simulate, "collision-probe": _probe}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MemoryError, OSError, TrialError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (DBMatchError, ValueError) as exc:
        # for capacity and collision-probe the flags are the configuration
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if args.command in ("capacity", "collision-probe") else EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
