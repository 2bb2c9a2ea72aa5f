import csv
import json

import numpy as np
import pytest

from plotkit import PlotDataError, plot_comparison, plot_histograms, plot_scaling, render
from plotkit.cli import main as cli_main
from plotkit.plots import REQUIRED_COLUMNS


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REQUIRED_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def row(experiment, n, method, pair, err, shots):
    return {"experiment_id": experiment, "n": n, "method": method,
            "pair_id": pair, "true_overlap": 0.5, "estimate": 0.5 + err,
            "abs_error": err, "shots": shots, "seed": 0, "wall_ms": 1.0}


@pytest.fixture
def scaling_csv(tmp_path):
    # exact powers of two so the fitted slope is exactly 1 per extra qubit
    rows = [row("scaling", n, method, b, 0.04, shots)
            for method, base in (("qpr-product", 100), ("qpr-entangled", 200))
            for n in (1, 2, 3, 4)
            for b, shots in enumerate([base * 2**n] * 3)]
    path = tmp_path / "scaling.csv"
    write_csv(path, rows)
    return path


@pytest.fixture
def histogram_csv(tmp_path):
    rng = np.random.default_rng(0)
    rows = []
    for n, circuit in ((2, "swap-circuit"), (3, "bell-circuit")):
        for pair in range(30):
            rows.append(row("circuit-compare", n, "qpr", pair,
                            float(rng.uniform(0, 0.05)), 500))
            rows.append(row("circuit-compare", n, circuit, pair,
                            float(rng.uniform(0.05, 0.2)), 500))
    path = tmp_path / "hist.csv"
    write_csv(path, rows)
    return path


@pytest.fixture
def comparison_csv(tmp_path):
    # handcrafted MAEs that flip order between n = 3 and n = 4
    mae = {"qpr": {2: 0.01, 3: 0.02, 4: 0.05}, "randmeas": {2: 0.03, 3: 0.04, 4: 0.04}}
    rows = [row("randmeas-compare", n, method, i, err, 10000)
            for method, by_n in mae.items()
            for n, err in by_n.items()
            for i in range(2)]
    path = tmp_path / "cmp.csv"
    write_csv(path, rows)
    return path


def csv_mean(path, method, n, field):
    with open(path, newline="") as fh:
        vals = [float(r[field]) for r in csv.DictReader(fh)
                if r["method"] == method and int(r["n"]) == n]
    return float(np.mean(vals))


class TestScaling:
    def test_renders_png(self, scaling_csv, tmp_path):
        img = tmp_path / "s.png"
        plot_scaling(scaling_csv, img)
        assert img.exists() and img.stat().st_size > 0

    def test_exponent_matches_fit_on_csv(self, scaling_csv, tmp_path):
        ann = plot_scaling(scaling_csv, tmp_path / "s.png")
        for method in ("qpr-product", "qpr-entangled"):
            means = [csv_mean(scaling_csv, method, n, "shots") for n in (1, 2, 3, 4)]
            slope = np.polyfit([1, 2, 3, 4], np.log2(means), 1)[0]
            assert abs(ann["exponent"][method] - slope) < 1e-9
            assert abs(slope - 1.0) < 1e-9  # shots double per qubit by design

    def test_single_size_has_no_fit(self, tmp_path):
        path = tmp_path / "one.csv"
        write_csv(path, [row("scaling", 3, "qpr-product", b, 0.04, 512)
                         for b in range(3)])
        ann = plot_scaling(path, tmp_path / "one.png")
        assert ann["exponent"]["qpr-product"] is None


class TestHistograms:
    def test_renders_and_mae_matches(self, histogram_csv, tmp_path):
        img = tmp_path / "h.svg"
        ann = plot_histograms(histogram_csv, img)
        assert img.exists() and img.stat().st_size > 0
        assert abs(ann["mae"][2]["qpr"] - csv_mean(histogram_csv, "qpr", 2, "abs_error")) < 1e-12
        assert abs(ann["mae"][3]["bell-circuit"]
                   - csv_mean(histogram_csv, "bell-circuit", 3, "abs_error")) < 1e-12

    def test_empty_rows_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_csv(path, [])
        with pytest.raises(PlotDataError):
            plot_histograms(path, tmp_path / "e.png")

    def test_missing_columns_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(PlotDataError):
            plot_histograms(path, tmp_path / "b.png")


class TestComparison:
    def test_mae_and_crossing(self, comparison_csv, tmp_path):
        ann = plot_comparison(comparison_csv, tmp_path / "c.png")
        assert ann["crossing"] == 4
        for method in ("qpr", "randmeas"):
            for n in (2, 3, 4):
                assert abs(ann["mae"][method][n]
                           - csv_mean(comparison_csv, method, n, "abs_error")) < 1e-9

    def test_no_crossing(self, histogram_csv, tmp_path):
        ann = plot_comparison(histogram_csv, tmp_path / "c2.png")
        assert ann["crossing"] is None

    def test_single_method(self, tmp_path):
        path = tmp_path / "solo.csv"
        write_csv(path, [row("randmeas-compare", n, "qpr", 0, 0.02, 100)
                         for n in (2, 3)])
        ann = plot_comparison(path, tmp_path / "solo.svg")
        assert set(ann["mae"]) == {"qpr"}

    def test_annotations_deterministic(self, comparison_csv, tmp_path):
        a = plot_comparison(comparison_csv, tmp_path / "a.png")
        b = plot_comparison(comparison_csv, tmp_path / "b.png")
        assert a == b


class TestRenderAndCLI:
    def test_render_dispatch(self, scaling_csv, tmp_path):
        ann = render("scaling-curve", scaling_csv, tmp_path / "r.png")
        assert "exponent" in ann
        with pytest.raises(ValueError):
            render("pie", scaling_csv, tmp_path / "r.png")

    def test_cli_renders(self, comparison_csv, tmp_path, capsys):
        img = tmp_path / "cli.png"
        code = cli_main(["plot", "method-comparison", "--in", str(comparison_csv),
                         "--out", str(img)])
        assert code == 0 and img.exists()
        payload = json.loads(capsys.readouterr().out)
        assert payload["annotations"]["crossing"] == 4

    def test_cli_validation_errors(self, comparison_csv, tmp_path):
        assert cli_main(["plot", "method-comparison", "--in", str(comparison_csv),
                         "--out", str(tmp_path / "x.txt")]) == 2
        assert cli_main(["plot", "method-comparison", "--in", str(tmp_path / "nope.csv"),
                         "--out", str(tmp_path / "x.png")]) == 2
