"""Experiment runners, configuration, and delimited result output.

Every runner produces a list of ResultRow with a fixed column set and a
summary dict; ``write_results`` serializes them as a CSV plus a JSON run
manifest that echoes the configuration and package version.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import time
from dataclasses import dataclass, asdict, field

import numpy as np

from . import __version__
from .circuits import (NoiseModel, build_bell_circuit, build_standard_swap_test,
                       count_resources, estimate_overlap_via_circuit)
from .estimator import (bilinear_overlap, estimate_overlap, hoeffding_plan_for_tensor,
                        sample_outcomes)
from .povm import (compute_t_matrix, estimator_tensor, grid_search_povm,
                   mcmc_tau_search, pauli6, pseudoinverse, ProductPOVM)
from .randmeas import estimate_overlap_rm, generate_settings
from .states import (born_probabilities, exact_overlap, mixing_strength_for_overlap,
                     perturbed_partner, random_pure_state, RandomStateSpec)
from .tn import MPS

CSV_COLUMNS = ["experiment_id", "n", "method", "pair_id", "true_overlap",
               "estimate", "abs_error", "shots", "seed", "wall_ms"]

EXPERIMENTS = ("estimate", "scaling", "circuit-compare", "randmeas-compare", "povm-search")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str = "estimate"
    n: int = 2
    n_min: int = 1
    n_max: int = 5
    family: str = "entangled"
    bond_dim: int = 2
    shots: int = 10000
    n_pairs: int = 60
    n_instances: int = 50
    n_batches: int = 10
    epsilon: float = 0.05
    delta: float = 0.05
    target_overlap: float = 0.0  # 0 means "use the per-experiment default"
    n_settings: int = 100
    shots_per_setting: int = 100
    mcmc_steps: int = 10000
    grid_resolution_deg: int = 15
    pooled: bool = True
    seed: int = 0

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; "
                              f"choose from {', '.join(EXPERIMENTS)}")
        if not 1 <= self.n <= 10:
            raise ConfigError("n must be in [1, 10]")
        if not 1 <= self.n_min <= self.n_max <= 8:
            raise ConfigError("need 1 <= n_min <= n_max <= 8")
        if self.family not in ("product", "entangled"):
            raise ConfigError("family must be 'product' or 'entangled'")
        if self.bond_dim < 1:
            raise ConfigError("bond_dim must be >= 1")
        if self.family == "product" and self.bond_dim != 1:
            raise ConfigError("product family requires bond_dim = 1")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        for name in ("n_pairs", "n_instances", "n_batches", "n_settings",
                     "shots_per_setting", "mcmc_steps"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon must be in (0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must be in (0, 1)")
        if self.target_overlap and not 0.0 < self.target_overlap < 1.0:
            raise ConfigError("target_overlap must be in (0, 1)")
        if not 1 <= self.grid_resolution_deg <= 90:
            raise ConfigError("grid_resolution_deg must be in [1, 90]")
        return self

    @classmethod
    def from_ini(cls, path) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        if "run" not in parser:
            raise ConfigError("config file needs a [run] section")
        sec = parser["run"]
        kwargs = {}
        defaults = cls()
        for key in sec:
            if not hasattr(defaults, key):
                raise ConfigError(f"unknown config key {key!r}")
            default = getattr(defaults, key)
            try:
                if isinstance(default, bool):
                    kwargs[key] = sec.getboolean(key)
                elif isinstance(default, int):
                    kwargs[key] = sec.getint(key)
                elif isinstance(default, float):
                    kwargs[key] = sec.getfloat(key)
                else:
                    kwargs[key] = sec.get(key)
            except ValueError:
                raise ConfigError(f"bad value for config key {key!r}") from None
        return cls(**kwargs).validate()


@dataclass(frozen=True)
class ResultRow:
    experiment_id: str
    n: int
    method: str
    pair_id: int
    true_overlap: float
    estimate: float
    abs_error: float
    shots: int
    seed: int
    wall_ms: float


def write_results(rows, csv_path, config: ExperimentConfig):
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            d = asdict(r)
            writer.writerow([d[c] for c in CSV_COLUMNS])
    manifest = {
        "version": __version__,
        "experiment": config.experiment,
        "master_seed": config.seed,
        "rows": len(rows),
        "columns": CSV_COLUMNS,
        "config": asdict(config),
    }
    manifest_path = str(csv_path) + ".manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest_path


def read_results(csv_path):
    rows = []
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"unexpected columns {reader.fieldnames}")
        for d in reader:
            rows.append(ResultRow(
                experiment_id=d["experiment_id"], n=int(d["n"]), method=d["method"],
                pair_id=int(d["pair_id"]), true_overlap=float(d["true_overlap"]),
                estimate=float(d["estimate"]), abs_error=float(d["abs_error"]),
                shots=int(d["shots"]), seed=int(d["seed"]), wall_ms=float(d["wall_ms"]),
            ))
    return rows


def _default_tau_hat():
    povm = pauli6()
    t = compute_t_matrix(povm)
    tp = pseudoinverse(t)
    return povm, estimator_tensor(tp, tp, t)


def _make_pair(n, family, bond_dim, seed, target_overlap=None):
    psi = random_pure_state(RandomStateSpec(n=n, family=family, bond_dim=bond_dim, seed=seed))
    if target_overlap is None:
        phi = random_pure_state(RandomStateSpec(n=n, family=family, bond_dim=bond_dim,
                                                seed=seed + 10**6))
    else:
        strength = mixing_strength_for_overlap(n, target_overlap)
        phi = perturbed_partner(psi, strength, seed + 10**6)
    return psi, phi


_PAIRS_PER_BATCH = 5


def _batch_crossing(n, family, bond_dim, epsilon, tau_hat, povm, rng):
    """Smallest doubling budget where a batch of fresh random pairs reaches
    mean absolute pooled-estimate error below epsilon."""
    batch = []
    for _ in range(_PAIRS_PER_BATCH):
        psi, phi = _make_pair(n, family, bond_dim, seed=int(rng.integers(2**31)))
        p = np.clip(born_probabilities(psi, povm), 0.0, None)
        q = np.clip(born_probabilities(phi, povm), 0.0, None)
        batch.append((p / p.sum(), q / q.sum(), exact_overlap(psi, phi)))
    n_shots = 64
    while n_shots <= 2**26:
        errs = []
        for p, q, truth in batch:
            p_hat = rng.multinomial(n_shots, p) / n_shots
            q_hat = rng.multinomial(n_shots, q) / n_shots
            est = bilinear_overlap(p_hat, q_hat, tau_hat.entries, n)
            errs.append(abs(est - truth))
        if np.mean(errs) < epsilon:
            return n_shots, float(np.mean(errs))
        n_shots *= 2
    raise RuntimeError("shot budget search diverged")


def run_scaling(config: ExperimentConfig):
    """Shots needed for mean absolute error below epsilon, per system size.

    Each batch of 5 fresh random pairs doubles its budget from 64 until the
    batch-mean error crosses the threshold; the per-size budget is the mean
    crossing over batches. The summary reports the least-squares slope of
    log2(shots) against size for each state family.
    """
    config.validate()
    qubit_povm, tau_hat = _default_tau_hat()
    rows = []
    summary = {"families": {}}
    families = [("product", 1), ("entangled", max(config.bond_dim, 2))]
    for family, bond_dim in families:
        found = {}
        for n in range(config.n_min, config.n_max + 1):
            povm = ProductPOVM.uniform(n, qubit_povm)
            rng = np.random.default_rng((config.seed, n, 0 if family == "product" else 1))
            crossings = []
            for b in range(config.n_batches):
                t0 = time.perf_counter()
                crossing, err = _batch_crossing(n, family, bond_dim, config.epsilon,
                                                tau_hat, povm, rng)
                wall_ms = (time.perf_counter() - t0) * 1000.0
                crossings.append(crossing)
                rows.append(ResultRow(
                    experiment_id="scaling", n=n, method=f"qpr-{family}", pair_id=b,
                    true_overlap=float("nan"), estimate=float("nan"),
                    abs_error=err, shots=crossing, seed=config.seed,
                    wall_ms=round(wall_ms, 3)))
            found[n] = float(np.mean(crossings))
        sizes = sorted(found)
        slope, intercept = np.polyfit(sizes, [math.log2(found[n]) for n in sizes], 1)
        summary["families"][family] = {
            "shots_by_n": found,
            "exponent": float(slope),
            "intercept": float(intercept),
        }
    return rows, summary


def run_circuit_compare(config: ExperimentConfig):
    """Quasiprobability estimator against noisy overlap circuits at equal
    shot budgets, on pair ensembles with a prescribed average overlap."""
    config.validate()
    qubit_povm, tau_hat = _default_tau_hat()
    noise = NoiseModel()
    cases = [
        (2, build_standard_swap_test(2), "swap-circuit", 500, 0.86),
        (3, build_bell_circuit(3), "bell-circuit", 1500, 0.78),
    ]
    rows = []
    summary = {"cases": {}}
    for n, circuit, circuit_method, shots, default_target in cases:
        target = config.target_overlap or default_target
        povm = ProductPOVM.uniform(n, qubit_povm)
        achieved = []
        errs = {"qpr": [], circuit_method: []}
        for pair in range(config.n_pairs):
            pair_seed = config.seed + 1000 * n + pair
            psi, phi = _make_pair(n, config.family, config.bond_dim, pair_seed,
                                  target_overlap=target)
            truth = exact_overlap(psi, phi)
            achieved.append(truth)

            t0 = time.perf_counter()
            rec_a = sample_outcomes(psi, povm, shots, seed=pair_seed)
            rec_b = sample_outcomes(phi, povm, shots, seed=pair_seed + 1)
            qpr = estimate_overlap(rec_a, rec_b, tau_hat, pooled=config.pooled)
            qpr_ms = (time.perf_counter() - t0) * 1000.0
            rows.append(ResultRow("circuit-compare", n, "qpr", pair, truth,
                                  qpr.mean, abs(qpr.mean - truth), shots,
                                  pair_seed, round(qpr_ms, 3)))
            errs["qpr"].append(abs(qpr.mean - truth))

            t0 = time.perf_counter()
            mps_a = MPS.from_dense(psi.data, n)
            mps_b = MPS.from_dense(phi.data, n)
            circ = estimate_overlap_via_circuit(mps_a, mps_b, circuit, noise,
                                                n_shots=shots, seed=pair_seed + 2)
            circ_ms = (time.perf_counter() - t0) * 1000.0
            rows.append(ResultRow("circuit-compare", n, circuit_method, pair, truth,
                                  circ.mean, abs(circ.mean - truth), shots,
                                  pair_seed, round(circ_ms, 3)))
            errs[circuit_method].append(abs(circ.mean - truth))
        summary["cases"][n] = {
            "target_overlap": target,
            "achieved_mean_overlap": float(np.mean(achieved)),
            "shots": shots,
            "nn_cnots": count_resources(circuit)["nn_cnots"],
            "mean_abs_error": {k: float(np.mean(v)) for k, v in errs.items()},
        }
    return rows, summary


def run_randmeas_compare(config: ExperimentConfig):
    """Quasiprobability estimator against randomized local measurements."""
    config.validate()
    qubit_povm, tau_hat = _default_tau_hat()
    rows = []
    summary = {"cases": {}}
    target = config.target_overlap or 0.6
    for n in range(max(config.n_min, 2), min(config.n_max, 4) + 1):
        povm = ProductPOVM.uniform(n, qubit_povm)
        errs = {"qpr": [], "randmeas": []}
        for inst in range(config.n_instances):
            inst_seed = config.seed + 1000 * n + inst
            psi, phi = _make_pair(n, config.family, config.bond_dim, inst_seed,
                                  target_overlap=target)
            truth = exact_overlap(psi, phi)

            t0 = time.perf_counter()
            rec_a = sample_outcomes(psi, povm, config.shots, seed=inst_seed)
            rec_b = sample_outcomes(phi, povm, config.shots, seed=inst_seed + 1)
            qpr = estimate_overlap(rec_a, rec_b, tau_hat, pooled=config.pooled)
            qpr_ms = (time.perf_counter() - t0) * 1000.0
            rows.append(ResultRow("randmeas-compare", n, "qpr", inst, truth,
                                  qpr.mean, abs(qpr.mean - truth), config.shots,
                                  inst_seed, round(qpr_ms, 3)))
            errs["qpr"].append(abs(qpr.mean - truth))

            t0 = time.perf_counter()
            settings = generate_settings(n, config.n_settings, seed=inst_seed + 2,
                                         n_shots_per_setting=config.shots_per_setting)
            rm = estimate_overlap_rm(psi, phi, settings)
            rm_ms = (time.perf_counter() - t0) * 1000.0
            rows.append(ResultRow("randmeas-compare", n, "randmeas", inst, truth,
                                  rm.mean, abs(rm.mean - truth), rm.n_shots,
                                  inst_seed, round(rm_ms, 3)))
            errs["randmeas"].append(abs(rm.mean - truth))
        summary["cases"][n] = {
            "target_overlap": target,
            "mean_abs_error": {k: float(np.mean(v)) for k, v in errs.items()},
        }
    return rows, summary


def run_povm_search(config: ExperimentConfig):
    """Grid search over symmetric single-qubit POVM families plus a random
    walk over the generalized-inverse freedom, reported by negativity."""
    config.validate()
    rows = []
    summary = {"grid": {}, "mcmc": {}}
    for m in (4, 6, 8):
        t0 = time.perf_counter()
        best_povm, best_nu = grid_search_povm(m, resolution_deg=config.grid_resolution_deg)
        wall_ms = (time.perf_counter() - t0) * 1000.0
        rows.append(ResultRow("povm-search", 1, f"grid-{m}", 0, 9.0,
                              best_nu, abs(best_nu - 9.0), 0, config.seed,
                              round(wall_ms, 3)))
        summary["grid"][m] = {"negativity": float(best_nu)}
    t = compute_t_matrix(pauli6())
    t0 = time.perf_counter()
    best_tau, best_nu = mcmc_tau_search(t, steps=config.mcmc_steps, seed=config.seed)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    rows.append(ResultRow("povm-search", 1, "mcmc-tau", 0, 9.0, best_nu,
                          abs(best_nu - 9.0), config.mcmc_steps, config.seed,
                          round(wall_ms, 3)))
    summary["mcmc"] = {"steps": config.mcmc_steps, "negativity": float(best_nu)}
    return rows, summary


def run_single_estimate(config: ExperimentConfig):
    """One random pair, sampled and estimated, with the planned shot budget
    for the configured accuracy in the summary."""
    config.validate()
    qubit_povm, tau_hat = _default_tau_hat()
    n = config.n
    povm = ProductPOVM.uniform(n, qubit_povm)
    target = config.target_overlap or None
    psi, phi = _make_pair(n, config.family, config.bond_dim, config.seed,
                          target_overlap=target)
    truth = exact_overlap(psi, phi)
    t0 = time.perf_counter()
    rec_a = sample_outcomes(psi, povm, config.shots, seed=config.seed)
    rec_b = sample_outcomes(phi, povm, config.shots, seed=config.seed + 1)
    est = estimate_overlap(rec_a, rec_b, tau_hat, pooled=config.pooled)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    rows = [ResultRow("estimate", n, "qpr", 0, truth, est.mean,
                      abs(est.mean - truth), config.shots, config.seed,
                      round(wall_ms, 3))]
    plan = hoeffding_plan_for_tensor(tau_hat, n, config.epsilon, config.delta)
    summary = {
        "true_overlap": truth,
        "estimate": est.mean,
        "stderr": est.stderr,
        "planned_shots": plan.n_shots,
        "planned_shots_range_bound": plan.n_shots_range,
        "negativity": tau_hat.negativity,
    }
    return rows, summary


RUNNERS = {
    "estimate": run_single_estimate,
    "scaling": run_scaling,
    "circuit-compare": run_circuit_compare,
    "randmeas-compare": run_randmeas_compare,
    "povm-search": run_povm_search,
}
