"""Figure rendering from result CSVs.

Every plot consumes the documented result schema (columns experiment_id, n,
method, pair_id, true_overlap, estimate, abs_error, shots, seed, wall_ms)
and nothing else, so the boundary with the estimation package is the file
format. Each function writes an image (PNG or SVG, chosen by extension) and
returns the numbers it annotated so callers can check them against the CSV.
"""

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = ["experiment_id", "n", "method", "pair_id", "true_overlap",
                    "estimate", "abs_error", "shots", "seed", "wall_ms"]


class PlotDataError(ValueError):
    """The CSV is missing columns or has no usable rows."""


def _load_rows(csv_path):
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise PlotDataError(f"CSV {csv_path} is missing columns: {missing}")
        rows = [{"n": int(r["n"]), "method": r["method"],
                 "abs_error": float(r["abs_error"]), "shots": int(r["shots"])}
                for r in reader]
    if not rows:
        raise PlotDataError(f"CSV {csv_path} has no data rows")
    return rows


def _methods(rows):
    return sorted({r["method"] for r in rows})


def _mean_by_n(rows, method, field):
    sizes = sorted({r["n"] for r in rows if r["method"] == method})
    return {n: float(np.mean([r[field] for r in rows
                              if r["method"] == method and r["n"] == n]))
            for n in sizes}


def plot_scaling(csv_path, img_path):
    """Average shot budget against system size, log2 scale, per method.

    Fits log2(shots) against n by least squares when at least two sizes are
    present; the slope is annotated on the legend and returned.
    """
    rows = _load_rows(csv_path)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    exponents = {}
    for method in _methods(rows):
        shots = _mean_by_n(rows, method, "shots")
        sizes = sorted(shots)
        values = [shots[n] for n in sizes]
        if len(sizes) >= 2:
            slope = float(np.polyfit(sizes, np.log2(values), 1)[0])
            exponents[method] = slope
            label = f"{method} (slope {slope:.3f})"
        else:
            exponents[method] = None
            label = method
        ax.plot(sizes, values, "o-", label=label)
    ax.set_yscale("log", base=2)
    ax.set_xlabel("number of qubits n")
    ax.set_ylabel("shots to reach the error threshold")
    ax.legend()
    fig.tight_layout()
    fig.savefig(img_path)
    plt.close(fig)
    return {"exponent": exponents}


def plot_histograms(csv_path, img_path):
    """Overlaid per-method absolute-error histograms, one panel per size,
    with a vertical marker at each method's mean absolute error."""
    rows = _load_rows(csv_path)
    sizes = sorted({r["n"] for r in rows})
    fig, axes = plt.subplots(1, len(sizes), figsize=(4.5 * len(sizes), 3.6),
                             squeeze=False)
    mae = {}
    for ax, n in zip(axes[0], sizes):
        mae[n] = {}
        panel = [r for r in rows if r["n"] == n]
        hi = max(r["abs_error"] for r in panel)
        bins = np.linspace(0.0, max(hi, 1e-12), 21)
        for k, method in enumerate(_methods(panel)):
            errs = [r["abs_error"] for r in panel if r["method"] == method]
            mean = float(np.mean(errs))
            mae[n][method] = mean
            color = f"C{k}"
            ax.hist(errs, bins=bins, alpha=0.55, color=color,
                    label=f"{method} (MAE {mean:.4f})")
            ax.axvline(mean, color=color, linestyle="--")
        ax.set_title(f"n = {n}")
        ax.set_xlabel("absolute error")
        ax.legend()
    axes[0][0].set_ylabel("pairs")
    fig.tight_layout()
    fig.savefig(img_path)
    plt.close(fig)
    return {"mae": mae}


def plot_comparison(csv_path, img_path):
    """Mean absolute error against system size per method at a fixed shot
    budget. If two methods swap order somewhere, the first size where the
    ordering flips is annotated and returned as the crossing point."""
    rows = _load_rows(csv_path)
    methods = _methods(rows)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    mae = {}
    for method in methods:
        mae[method] = _mean_by_n(rows, method, "abs_error")
        sizes = sorted(mae[method])
        ax.plot(sizes, [mae[method][n] for n in sizes], "o-", label=method)
    crossing = None
    if len(methods) == 2:
        a, b = methods
        shared = sorted(set(mae[a]) & set(mae[b]))
        signs = [np.sign(mae[a][n] - mae[b][n]) for n in shared]
        for prev, cur, n in zip(signs, signs[1:], shared[1:]):
            if prev != 0 and cur != 0 and prev != cur:
                crossing = n
                ax.axvline(n, color="gray", linestyle=":",
                           label=f"ordering flips at n = {n}")
                break
    ax.set_xlabel("number of qubits n")
    ax.set_ylabel("mean absolute error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(img_path)
    plt.close(fig)
    return {"mae": mae, "crossing": crossing}


KINDS = {
    "scaling-curve": plot_scaling,
    "error-histogram": plot_histograms,
    "method-comparison": plot_comparison,
}


def render(kind, csv_path, img_path):
    """Dispatch on figure kind; returns the annotation values."""
    if kind not in KINDS:
        raise ValueError(f"unknown figure kind {kind!r}, expected one of {sorted(KINDS)}")
    return KINDS[kind](csv_path, img_path)
