"""
Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .._linalg import NumericError
from .config import EXPERIMENTS, ConfigError, config_from_dict, default_config, load_config
from .experiments import WORKERS_ENV, resolve_workers, run_experiment
from .results import plot_data, read_curves, write_results
from .stats import measure_dof

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("mimo_retro")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mimo-retro",
                                description="Monte Carlo rates of MU-MIMO schemes with outdated CSIT.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV + JSON sidecar")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="JSON or TOML configuration (or a results sidecar)")
    src.add_argument("--experiment", choices=EXPERIMENTS, help="run an experiment with its defaults")
    run.add_argument("--seed", type=int, help="override the configured seed")
    run.add_argument("--samples", type=int, help="override the configured sample count")
    run.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    run.add_argument("--workers", type=int, default=1,
                     help=f"worker processes (the {WORKERS_ENV} environment variable wins)")

    dof = sub.add_parser("dof", help="empirical DoF (pre-log slope) of curves in a results CSV")
    dof.add_argument("--curve", type=Path, required=True, help="results CSV")
    dof.add_argument("--lo", type=float, required=True, help="lower SNR in dB")
    dof.add_argument("--hi", type=float, required=True, help="upper SNR in dB")
    dof.add_argument("--scheme", help="only curves of this scheme")
    dof.add_argument("--rho", type=float, help="only curves with this rho")

    val = sub.add_parser("validate-config", help="check a configuration file")
    val.add_argument("config", type=Path)

    plot = sub.add_parser("plot-data", help="export a results CSV as plot data")
    plot.add_argument("--curve", type=Path, required=True, help="results CSV")
    plot.add_argument("--format", choices=("gnuplot", "vega"), default="gnuplot")
    plot.add_argument("--out", type=Path, help="output file (default: stdout)")
    return p


def _cmd_run(args: argparse.Namespace) -> int:
    overrides = {k: v for k, v in (("seed", args.seed), ("samples", args.samples)) if v is not None}
    if args.config is not None:
        cfg = load_config(args.config)
        if overrides:
            cfg = config_from_dict({**cfg.to_dict(), **overrides})
    else:
        cfg = default_config(args.experiment, **overrides)
    try:
        workers = resolve_workers(args.workers)
    except ValueError as exc:
        raise ConfigError(f"workers: {exc}") from exc
    curves = run_experiment(cfg, workers)
    csv_path, json_path = write_results(cfg, curves, args.out)
    print(f"wrote {csv_path} and {json_path} ({len(curves)} curves, fingerprint {cfg.fingerprint()[:12]})")
    return EXIT_OK


def _cmd_dof(args: argparse.Namespace) -> int:
    curves = read_curves(args.curve)
    if args.scheme is not None:
        curves = [c for c in curves if c.scheme == args.scheme]
    if args.rho is not None:
        curves = [c for c in curves if c.rho is not None and abs(c.rho - args.rho) < 1e-12]
    if not curves:
        print("no matching curves", file=sys.stderr)
        return EXIT_CONFIG
    for c in curves:
        print(f"{c.label}\t{measure_dof(c, args.lo, args.hi):.4f}")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    print(f"ok: {cfg.experiment}, schemes {','.join(cfg.resolved_schemes())}, "
          f"fingerprint {cfg.fingerprint()}")
    return EXIT_OK


def _cmd_plot(args: argparse.Namespace) -> int:
    text = plot_data(read_curves(args.curve), args.format)
    if args.out is None:
        sys.stdout.write(text + "\n")
    else:
        args.out.write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _cmd_run, "dof": _cmd_dof, "validate-config": _cmd_validate,
                "plot-data": _cmd_plot}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (LookupError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
