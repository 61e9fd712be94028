"""Command-line entry point: ``cgks run|converge|compare``."""

from __future__ import annotations

import argparse
import json
import sys

from cgks.errors import ConfigError, NumericalError, PositivityError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_POSITIVITY = 3
EXIT_NUMERICAL = 4


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=None, help="worker threads for cell loops")
    common.add_argument("--output-dir", default=None, help="directory for CSV, field and report files")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config value (repeatable)")
    p = argparse.ArgumentParser(prog="cgks", description="Gas-kinetic solver benchmarks.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run one case")
    r.add_argument("config")
    c = sub.add_parser("converge", parents=[common], help="mesh-refinement order study")
    c.add_argument("config")
    c.add_argument("--levels", default="8,16,32", help="comma-separated cells per axis")
    m = sub.add_parser("compare", parents=[common], help="cost and resolution comparison of two runs")
    m.add_argument("config_a")
    m.add_argument("config_b")
    return p


def _set_workers(n):
    if n is None:
        return
    if n < 1:
        raise ConfigError("--workers must be >= 1")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    from cgks.harness.config import load_config, parse_overrides
    from cgks.harness import runner

    try:
        _set_workers(args.workers)
        ov = parse_overrides(args.set)
        if args.command == "run":
            rep = runner.run_case(load_config(args.config, ov), args.output_dir)
            print(json.dumps(rep.to_dict(), indent=2, default=float))
            if rep.status == "positivity":
                print(f"positivity abort: {rep.message}", file=sys.stderr)
                return EXIT_POSITIVITY
            if rep.status == "numerical":
                print(f"numerical error: {rep.message}", file=sys.stderr)
                return EXIT_NUMERICAL
            return EXIT_OK
        if args.command == "converge":
            try:
                levels = [int(v) for v in args.levels.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigError(f"bad --levels: {args.levels!r}") from exc
            rep = runner.convergence_study(load_config(args.config, ov), levels, args.output_dir)
            d = rep.to_dict()
            d.pop("runs")
            print(json.dumps(d, indent=2, default=float))
            return EXIT_OK
        rep = runner.efficiency_compare(load_config(args.config_a, ov), load_config(args.config_b, ov),
                                        args.output_dir)
        d = rep.to_dict()
        print(json.dumps({k: d[k] for k in ("wall_ratio", "cost_ratio", "peak_eps_S_rel_diff", "overlay_csv",
                                            "reference", "self_comparison", "flagged")}, indent=2, default=float))
        bad = [r for r in (rep.a, rep.b) if r.status == "positivity"]
        return EXIT_POSITIVITY if bad else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PositivityError as exc:
        print(f"positivity abort: {exc}", file=sys.stderr)
        return EXIT_POSITIVITY
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
