"""Command line entry point: run an experiment, write CSV + manifest, and
render a figure next to the CSV when the plotting package is installed."""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import ConfigError, ExperimentConfig, RUNNERS, write_results

EXIT_VALIDATION = 2

_FIGURE_KIND = {
    "scaling": "scaling-curve",
    "circuit-compare": "error-histogram",
    "randmeas-compare": "method-comparison",
}


def _add_common(sub):
    sub.add_argument("--config", help="INI file with a [run] section")
    sub.add_argument("--seed", type=int, help="master seed (overrides config)")
    sub.add_argument("--out", default="results.csv", help="output CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quasioverlap",
        description="State-overlap estimation experiments with an "
                    "informationally complete POVM quasiprobability estimator.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("estimate", help="estimate the overlap of one random pair")
    _add_common(p)
    p.add_argument("--n", type=int, help="number of qubits")
    p.add_argument("--shots", type=int, help="shots per state")
    p.add_argument("--family", choices=["product", "entangled"])
    p.add_argument("--bond-dim", type=int, dest="bond_dim")
    p.add_argument("--target-overlap", type=float, dest="target_overlap")

    p = subs.add_parser("scaling", help="shots-to-accuracy scaling over system size")
    _add_common(p)
    p.add_argument("--n-min", type=int, dest="n_min")
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--batches", type=int, dest="n_batches")
    p.add_argument("--epsilon", type=float)

    p = subs.add_parser("circuit-compare", help="compare against noisy overlap circuits")
    _add_common(p)
    p.add_argument("--pairs", type=int, dest="n_pairs")

    p = subs.add_parser("randmeas-compare", help="compare against randomized measurements")
    _add_common(p)
    p.add_argument("--instances", type=int, dest="n_instances")
    p.add_argument("--shots", type=int)

    p = subs.add_parser("povm-search", help="negativity search over POVMs and inverses")
    _add_common(p)
    p.add_argument("--mcmc-steps", type=int, dest="mcmc_steps")
    p.add_argument("--grid-resolution", type=int, dest="grid_resolution_deg")

    return parser


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_ini(args.config)
    else:
        config = ExperimentConfig()
    config.experiment = args.command
    for key in ("seed", "n", "shots", "family", "bond_dim", "target_overlap",
                "n_min", "n_max", "n_batches", "epsilon", "n_pairs",
                "n_instances", "mcmc_steps", "grid_resolution_deg"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    config.validate()
    return config


def _render_figure(kind: str, csv_path: str):
    try:
        from plotkit import render
    except ImportError:
        return None
    img_path = str(csv_path).rsplit(".", 1)[0] + ".png"
    try:
        render(kind, csv_path, img_path)
    except Exception as exc:  # a failed figure must not fail the run
        print(f"figure rendering skipped: {exc}", file=sys.stderr)
        return None
    return img_path


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    runner = RUNNERS[config.experiment]
    try:
        rows, summary = runner(config)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    manifest_path = write_results(rows, args.out, config)
    out = {"csv": str(args.out), "manifest": manifest_path, "summary": summary}
    kind = _FIGURE_KIND.get(config.experiment)
    if kind is not None:
        figure = _render_figure(kind, args.out)
        if figure:
            out["figure"] = figure
    json.dump(out, sys.stdout, indent=2, sort_keys=True, default=str)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
