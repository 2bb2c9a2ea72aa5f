"""Overlap estimation from randomized local measurements.

Each setting draws an independent Haar-random single-qubit unitary per site;
the states are measured in the rotated computational basis and the overlap is
recovered from second-order cross-correlations of the outcome histograms:

    Tr(rho sigma) = 2^n E_U [ P_U(rho)^T A^(x n) P_U(sigma) ]

with the single-site kernel A = [[1, -1/2], [-1/2, 1]].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimator import EstimateResult
from .states import DenseState, born_probabilities
from .povm import ProductPOVM, computational_basis_povm

_KERNEL = np.array([[1.0, -0.5], [-0.5, 1.0]])


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed U(n) via QR of a Ginibre matrix with phase fixing."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True)
class RandomMeasSettings:
    """A bank of measurement settings: unitaries[r, k] rotates site k in
    setting r before a computational-basis readout of n_shots_per_setting."""

    n: int
    unitaries: np.ndarray  # (n_settings, n, 2, 2)
    n_shots_per_setting: int
    seed: int

    def __post_init__(self):
        u = np.asarray(self.unitaries, dtype=complex)
        if u.ndim != 4 or u.shape[1] != self.n or u.shape[2:] != (2, 2):
            raise ValueError(f"unitaries must have shape (R, {self.n}, 2, 2)")
        eye = np.eye(2)
        dev = np.abs(np.einsum("rkab,rkcb->rkac", u, u.conj()) - eye).max()
        if dev > 1e-10:
            raise ValueError("settings contain a non-unitary rotation")
        object.__setattr__(self, "unitaries", u)
        if self.n_shots_per_setting < 1:
            raise ValueError("n_shots_per_setting must be >= 1")

    @property
    def n_settings(self) -> int:
        return self.unitaries.shape[0]


def generate_settings(n: int, n_settings: int, seed: int,
                      n_shots_per_setting: int = 100) -> RandomMeasSettings:
    if n_settings < 2:
        raise ValueError("need at least 2 settings for an error bar")
    rng = np.random.default_rng(seed)
    u = np.empty((n_settings, n, 2, 2), dtype=complex)
    for r in range(n_settings):
        for k in range(n):
            u[r, k] = haar_unitary(2, rng)
    return RandomMeasSettings(n=n, unitaries=u, n_shots_per_setting=n_shots_per_setting, seed=seed)


def _rotated_probs(state: DenseState, us: np.ndarray, povm: ProductPOVM) -> np.ndarray:
    rho = state.density()
    big = np.eye(1, dtype=complex)
    for k in range(state.n):
        big = np.kron(big, us[k])
    rotated = DenseState.mixed(big @ rho @ big.conj().T)
    return born_probabilities(rotated, povm)


def _kernel_quadratic(p: np.ndarray, q: np.ndarray, n: int) -> float:
    cur = np.asarray(q, dtype=float).reshape([2] * n)
    for _ in range(n):
        cur = np.tensordot(cur, _KERNEL, axes=([0], [1]))
    return float(np.asarray(p, dtype=float).reshape(-1) @ cur.reshape(-1))


def estimate_overlap_rm(rho: DenseState, sigma: DenseState,
                        settings: RandomMeasSettings, exact: bool = False) -> EstimateResult:
    """Overlap estimate from the bank of randomized settings.

    With ``exact=True`` the per-setting outcome distributions are used
    directly (no shot noise); otherwise each state is measured
    n_shots_per_setting times per setting via multinomial draws.
    """
    n = settings.n
    if rho.n != n or sigma.n != n:
        raise ValueError("states do not match the settings width")
    povm = ProductPOVM.uniform(n, computational_basis_povm())
    rng = np.random.default_rng(settings.seed + 1)
    nm = settings.n_shots_per_setting
    vals = np.empty(settings.n_settings)
    for r in range(settings.n_settings):
        p = np.clip(_rotated_probs(rho, settings.unitaries[r], povm), 0.0, None)
        q = np.clip(_rotated_probs(sigma, settings.unitaries[r], povm), 0.0, None)
        if not exact:
            p = rng.multinomial(nm, p / p.sum()) / nm
            q = rng.multinomial(nm, q / q.sum()) / nm
        vals[r] = 2.0**n * _kernel_quadratic(p, q, n)
    stderr = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return EstimateResult(mean=float(vals.mean()), stderr=stderr,
                          n_shots=2 * settings.n_settings * nm)
