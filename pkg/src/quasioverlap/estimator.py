"""Monte-Carlo overlap estimation from POVM samples, with sample planning."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .povm import EstimatorTensor, ProductPOVM
from .states import DenseState, born_probabilities

MAX_OUTCOME_SPACE = 10**7


@dataclass(frozen=True)
class SampleRecord:
    """Measurement outcomes for one state: an (N, n) array of outcome indices."""

    outcomes: np.ndarray
    source: str
    povm: ProductPOVM
    seed: int

    def __post_init__(self):
        arr = np.asarray(self.outcomes, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != self.povm.n:
            raise ValueError(f"outcomes must have shape (N, {self.povm.n}), got {arr.shape}")
        counts = self.povm.outcomes_per_site
        for k, m in enumerate(counts):
            col = arr[:, k]
            if col.size and (col.min() < 0 or col.max() >= m):
                raise ValueError(f"outcome index out of range at site {k}")
        object.__setattr__(self, "outcomes", arr)

    def __len__(self):
        return self.outcomes.shape[0]


@dataclass(frozen=True)
class SamplePlan:
    """Shot budget from the negativity-driven concentration bound.

    ``n_shots`` uses the per-qubit negativity raised to the qubit count;
    ``n_shots_range`` is the literal two-sided bound from the full n-qubit
    entry range of the product tensor. Both are reported because the two
    readings differ (and neither dominates for all POVMs).
    """

    nu: float
    n: int
    epsilon: float
    delta: float
    n_shots: int
    full_range: float
    n_shots_range: int


@dataclass(frozen=True)
class EstimateResult:
    mean: float
    stderr: float
    n_shots: int


def _strictly_greater_int(x: float) -> int:
    return int(math.floor(x)) + 1


def hoeffding_plan(nu: float, n: int, epsilon: float, delta: float) -> SamplePlan:
    """Smallest N with N > nu^n ln(2/delta) / (2 eps^2), plus the bound using
    the true entry range of the n-fold product tensor."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    bound = nu**n / (2.0 * epsilon**2) * math.log(2.0 / delta)
    return SamplePlan(
        nu=nu,
        n=n,
        epsilon=epsilon,
        delta=delta,
        n_shots=_strictly_greater_int(bound),
        full_range=float("nan"),
        n_shots_range=0,
    )


def hoeffding_plan_for_tensor(tau_hat: EstimatorTensor, n: int, epsilon: float, delta: float) -> SamplePlan:
    """As hoeffding_plan, but also evaluates the exact n-qubit entry range."""
    base = hoeffding_plan(tau_hat.negativity, n, epsilon, delta)
    hi = float(tau_hat.entries.max())
    lo = float(tau_hat.entries.min())
    cur_hi, cur_lo = hi, lo
    for _ in range(n - 1):
        prods = (cur_hi * hi, cur_hi * lo, cur_lo * hi, cur_lo * lo)
        cur_hi, cur_lo = max(prods), min(prods)
    full_range = cur_hi - cur_lo
    bound = full_range**2 * math.log(2.0 / delta) / (2.0 * epsilon**2)
    return SamplePlan(
        nu=base.nu,
        n=n,
        epsilon=epsilon,
        delta=delta,
        n_shots=base.n_shots,
        full_range=full_range,
        n_shots_range=_strictly_greater_int(bound),
    )


def _flat_size(povm: ProductPOVM) -> int:
    return math.prod(povm.outcomes_per_site)


def sample_outcomes(state, povm: ProductPOVM, n_shots: int, seed: int) -> SampleRecord:
    """Draw i.i.d. outcome tuples with Born probabilities Tr(rho M_a).

    Dense states sample the full joint distribution; tensor-network states
    are sampled site-by-site through conditional marginals.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    if isinstance(state, DenseState):
        total = _flat_size(povm)
        if total > MAX_OUTCOME_SPACE:
            raise ValueError("outcome space too large for dense sampling")
        probs = np.clip(born_probabilities(state, povm), 0.0, None)
        probs /= probs.sum()
        rng = np.random.default_rng(seed)
        flat = rng.choice(total, size=n_shots, p=probs)
        outcomes = np.stack(np.unravel_index(flat, povm.outcomes_per_site), axis=1)
        return SampleRecord(outcomes=outcomes, source="dense", povm=povm, seed=seed)
    from .tn import sample_from_tn

    return sample_from_tn(state, povm, n_shots, seed)


def _check_records(rec_rho: SampleRecord, rec_sigma: SampleRecord):
    if len(rec_rho) == 0 or len(rec_sigma) == 0:
        raise ValueError("empty sample record")
    if not rec_rho.povm.compatible_with(rec_sigma.povm):
        raise ValueError("records were taken with different POVMs")


def bilinear_overlap(p: np.ndarray, q: np.ndarray, entries: np.ndarray, n: int) -> float:
    """sum_{a,b} P(a) prod_k entries[a_k, b_k] Q(b) for flat distributions."""
    m = entries.shape[0]
    cur = np.asarray(q, dtype=float).reshape([m] * n)
    for _ in range(n):
        cur = np.tensordot(cur, entries, axes=([0], [1]))
    return float(np.asarray(p, dtype=float).reshape(-1) @ cur.reshape(-1))


def _histogram(rec: SampleRecord) -> np.ndarray:
    counts = rec.povm.outcomes_per_site
    flat = np.ravel_multi_index(tuple(rec.outcomes.T), counts)
    return np.bincount(flat, minlength=math.prod(counts)).astype(float) / len(rec)


def estimate_overlap(
    rec_rho: SampleRecord,
    rec_sigma: SampleRecord,
    tau_hat: EstimatorTensor,
    pooled: bool = False,
) -> EstimateResult:
    """Overlap estimate from two sample records.

    Default pairs shot i of rho with shot i of sigma and averages the
    product of tensor entries. With ``pooled=True`` the two-sample
    U-statistic over all N_rho * N_sigma pairings is used instead (same
    expectation, much lower variance; this is what the experiment runners
    use).
    """
    _check_records(rec_rho, rec_sigma)
    n = rec_rho.povm.n
    th = tau_hat.entries
    if not pooled:
        n_shots = min(len(rec_rho), len(rec_sigma))
        a = rec_rho.outcomes[:n_shots]
        b = rec_sigma.outcomes[:n_shots]
        vals = np.ones(n_shots)
        for k in range(n):
            vals *= th[a[:, k], b[:, k]]
        stderr = float(vals.std(ddof=1) / math.sqrt(n_shots)) if n_shots > 1 else 0.0
        return EstimateResult(mean=float(vals.mean()), stderr=stderr, n_shots=n_shots)

    total = _flat_size(rec_rho.povm)
    if total > MAX_OUTCOME_SPACE:
        raise ValueError("outcome space too large for pooled estimation")
    p_hat = _histogram(rec_rho)
    q_hat = _histogram(rec_sigma)
    mean = bilinear_overlap(p_hat, q_hat, th, n)
    # asymptotic two-sample U-statistic variance from the per-shot projections
    m = th.shape[0]
    cur = q_hat.reshape([m] * n)
    for _ in range(n):
        cur = np.tensordot(cur, th, axes=([0], [1]))
    g_rho_vec = cur.reshape(-1)
    cur = p_hat.reshape([m] * n)
    for _ in range(n):
        cur = np.tensordot(cur, th.T, axes=([0], [1]))
    g_sigma_vec = cur.reshape(-1)
    counts = rec_rho.povm.outcomes_per_site
    flat_rho = np.ravel_multi_index(tuple(rec_rho.outcomes.T), counts)
    flat_sigma = np.ravel_multi_index(tuple(rec_sigma.outcomes.T), counts)
    var = 0.0
    if len(rec_rho) > 1:
        var += g_rho_vec[flat_rho].var(ddof=1) / len(rec_rho)
    if len(rec_sigma) > 1:
        var += g_sigma_vec[flat_sigma].var(ddof=1) / len(rec_sigma)
    n_shots = min(len(rec_rho), len(rec_sigma))
    return EstimateResult(mean=mean, stderr=float(math.sqrt(var)), n_shots=n_shots)


def pooled_estimate_from_histograms(
    p_hat: np.ndarray, q_hat: np.ndarray, tau_hat: EstimatorTensor, n: int
) -> float:
    """Pooled estimate straight from empirical outcome histograms."""
    return bilinear_overlap(p_hat, q_hat, tau_hat.entries, n)


def exact_expectation(
    rho: DenseState, sigma: DenseState, tau_hat: EstimatorTensor, povm: ProductPOVM
) -> float:
    """Exact bilinear form P_rho . tau_hat^(x n) . P_sigma (no sampling)."""
    if _flat_size(povm) > 10**6:
        raise ValueError("outcome space too large for exact enumeration")
    p = born_probabilities(rho, povm)
    q = born_probabilities(sigma, povm)
    return bilinear_overlap(p, q, tau_hat.entries, povm.n)
