"""Informationally complete POVM machinery.

Gram ("T") matrices, generalized inverses, estimator tensors with their
negativity range, the 6-outcome Pauli POVM, the shadow-style tensor
equivalence, and the brute-force / Monte-Carlo searches for lower-negativity
measurement choices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .kraus import I2, PAULI_X, PAULI_Y, PAULI_Z
from .states import DenseState

PSD_TOL = 1e-10
SUM_TOL = 1e-10
IC_RANK_TOL = 1e-8
GEN_INV_TOL = 1e-8

_PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


@dataclass(frozen=True)
class QubitPOVM:
    """A single-qubit POVM: PSD 2x2 elements summing to the identity."""

    elements: np.ndarray  # (m, 2, 2) complex

    def __post_init__(self):
        els = np.asarray(self.elements, dtype=complex)
        if els.ndim != 3 or els.shape[1:] != (2, 2):
            raise ValueError(f"expected shape (m, 2, 2), got {els.shape}")
        for k, m in enumerate(els):
            if np.abs(m - m.conj().T).max() > PSD_TOL:
                raise ValueError(f"element {k} is not Hermitian")
            if np.linalg.eigvalsh(m).min() < -PSD_TOL:
                raise ValueError(f"element {k} is not PSD")
        if np.abs(els.sum(axis=0) - I2).max() > SUM_TOL:
            raise ValueError("elements do not sum to the identity")
        object.__setattr__(self, "elements", els)

    def __len__(self):
        return self.elements.shape[0]

    @classmethod
    def from_bloch(cls, weights, vectors) -> "QubitPOVM":
        """Elements w_a (I + r_a . sigma) / 2 from weights and Bloch vectors."""
        weights = np.asarray(weights, dtype=float)
        vectors = np.asarray(vectors, dtype=float)
        els = []
        for w, r in zip(weights, vectors):
            m = I2.copy()
            for c, p in zip(r, _PAULIS):
                m = m + c * p
            els.append(w * m / 2.0)
        return cls(np.stack(els))

    def is_informationally_complete(self) -> bool:
        """True iff the elements span the 4d real space of Hermitian 2x2 operators."""
        coords = np.array(
            [[np.trace(m @ b).real for b in (I2, *_PAULIS)] for m in self.elements]
        )
        s = np.linalg.svd(coords, compute_uv=False)
        return bool((s > IC_RANK_TOL).sum() == 4)

    def to_json(self) -> str:
        payload = {
            "elements": [
                {"re": m.real.tolist(), "im": m.imag.tolist()} for m in self.elements
            ]
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "QubitPOVM":
        payload = json.loads(text)
        els = [np.array(e["re"]) + 1j * np.array(e["im"]) for e in payload["elements"]]
        return cls(np.stack(els))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "QubitPOVM":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True)
class ProductPOVM:
    """n-fold tensor product of single-qubit POVMs (one factor per site)."""

    n: int
    factors: tuple

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need n >= 1")
        factors = tuple(self.factors)
        if len(factors) != self.n:
            raise ValueError(f"need {self.n} factors, got {len(factors)}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def uniform(cls, n: int, factor: QubitPOVM) -> "ProductPOVM":
        return cls(n=n, factors=(factor,) * n)

    @property
    def outcomes_per_site(self) -> tuple:
        return tuple(len(f) for f in self.factors)

    def element(self, outcome) -> np.ndarray:
        """Dense tensor-product element for one outcome tuple."""
        m = np.array([[1.0 + 0j]])
        for a, f in zip(outcome, self.factors):
            m = np.kron(m, f.elements[a])
        return m

    def compatible_with(self, other: "ProductPOVM") -> bool:
        if self.n != other.n or self.outcomes_per_site != other.outcomes_per_site:
            return False
        return all(
            np.allclose(f.elements, g.elements, atol=1e-12)
            for f, g in zip(self.factors, other.factors)
        )


def pauli6() -> QubitPOVM:
    """The 6-outcome POVM (1/3)|a><a| over Z, X, Y eigenvectors.

    Fixed outcome order (z+, z-, x+, x-, y+, y-).
    """
    els = []
    for p in (PAULI_Z, PAULI_X, PAULI_Y):
        for s in (1.0, -1.0):
            els.append((I2 + s * p) / 6.0)
    return QubitPOVM(np.stack(els))


def computational_basis_povm() -> QubitPOVM:
    """Projective {|0><0|, |1><1|} measurement (not informationally complete)."""
    return QubitPOVM(np.stack([(I2 + PAULI_Z) / 2.0, (I2 - PAULI_Z) / 2.0]))


@dataclass(frozen=True)
class TMatrix:
    """Gram matrix of POVM elements, [T]_ab = Tr(M_a M_b)."""

    entries: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.entries, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError(f"T matrix must be square, got {t.shape}")
        if np.abs(t - t.T).max() > 1e-12:
            raise ValueError("T matrix must be symmetric")
        object.__setattr__(self, "entries", t)


@dataclass(frozen=True)
class GeneralizedInverse:
    """A matrix tau with T tau T = T for an associated Gram matrix."""

    entries: np.ndarray


@dataclass(frozen=True)
class EstimatorTensor:
    """Single-qubit post-processing tensor tau1 T tau2^t and its entry range."""

    entries: np.ndarray
    negativity: float


def compute_t_matrix(povm: QubitPOVM) -> TMatrix:
    els = povm.elements
    t = np.einsum("aij,bji->ab", els, els).real
    return TMatrix(0.5 * (t + t.T))


def pseudoinverse(t: TMatrix) -> GeneralizedInverse:
    """Moore-Penrose pseudoinverse via spectral decomposition."""
    w, v = np.linalg.eigh(t.entries)
    cutoff = max(abs(w).max(), 1.0) * 1e-12
    inv = np.where(np.abs(w) > cutoff, 1.0 / np.where(np.abs(w) > cutoff, w, 1.0), 0.0)
    return GeneralizedInverse((v * inv) @ v.T)


def _tau_entries(tau) -> np.ndarray:
    if isinstance(tau, GeneralizedInverse):
        return tau.entries
    return np.asarray(tau, dtype=float)


def is_generalized_inverse(t: TMatrix, tau) -> bool:
    """True iff ||T tau T - T||_max is below tolerance."""
    tau = _tau_entries(tau)
    if tau.shape != t.entries.shape:
        raise ValueError(f"shape mismatch: T {t.entries.shape} vs tau {tau.shape}")
    return bool(np.abs(t.entries @ tau @ t.entries - t.entries).max() < GEN_INV_TOL)


def random_generalized_inverse(t: TMatrix, seed: int = 0, scale: float = 1.0) -> GeneralizedInverse:
    """Random member of the full solution family tau = T+ + W - T+ T W T T+."""
    rng = np.random.default_rng(seed)
    tp = pseudoinverse(t).entries
    w = scale * rng.normal(size=t.entries.shape)
    return GeneralizedInverse(tp + w - tp @ t.entries @ w @ t.entries @ tp)


def estimator_tensor(tau1, tau2, t: TMatrix) -> EstimatorTensor:
    """tau1 T tau2^t with its negativity (entry range)."""
    e1, e2 = _tau_entries(tau1), _tau_entries(tau2)
    for name, e in (("tau1", e1), ("tau2", e2)):
        if not is_generalized_inverse(t, e):
            raise ValueError(f"{name} does not satisfy T tau T = T")
    entries = e1 @ t.entries @ e2.T
    return EstimatorTensor(entries=entries, negativity=float(entries.max() - entries.min()))


def reconstruct_matrix(probs: np.ndarray, tau, povm: ProductPOVM) -> np.ndarray:
    """Dense operator sum_{a,a'} P(a) tau_{a a'} (site-wise) M_{a'}."""
    tau = _tau_entries(tau)
    counts = povm.outcomes_per_site
    total = math.prod(counts)
    probs = np.asarray(probs, dtype=float).reshape(-1)
    if probs.size != total:
        raise ValueError(f"distribution has {probs.size} entries, POVM has {total} outcomes")
    n = povm.n
    # Q(a') = sum_a P(a) prod_k tau[a_k, a'_k]
    cur = probs.reshape(counts)
    for _ in range(n):
        cur = np.tensordot(cur, tau, axes=([0], [0]))
    q = cur  # axes back in site order
    # rho = sum_{a'} Q(a') (x)_k M_{a'_k}
    w = q
    for factor in povm.factors:
        w = np.tensordot(w, factor.elements, axes=([0], [0]))
    # axes now (s1, s1', s2, s2', ...): regroup rows/columns
    perm = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    dim = 2**n
    return w.transpose(perm).reshape(dim, dim)


def reconstruct_state(probs: np.ndarray, tau, povm: ProductPOVM) -> DenseState:
    """State reconstruction from its quasiprobability vector (identity round trip
    for any generalized inverse)."""
    mat = reconstruct_matrix(probs, tau, povm)
    mat = 0.5 * (mat + mat.conj().T)
    return DenseState(n=povm.n, kind="mixed", data=mat)


def shadow_tau_tilde() -> np.ndarray:
    """Block matrix [[2, -1], [-1, 2]] per measurement basis (z, x, y order),
    arising from rewriting the local-Clifford shadow estimator over projector
    frames; rescaling the frame to the 6-outcome POVM maps it to 3x this."""
    block = np.array([[2.0, -1.0], [-1.0, 2.0]])
    out = np.zeros((6, 6))
    for b in range(3):
        out[2 * b : 2 * b + 2, 2 * b : 2 * b + 2] = block
    return out


@dataclass(frozen=True)
class ShadowEquivalenceReport:
    rescaled_is_generalized_inverse: bool
    max_dev_gen_inverse: float
    max_dev_projection: float
    max_dev_estimator: float

    @property
    def all_pass(self) -> bool:
        return (
            self.rescaled_is_generalized_inverse
            and self.max_dev_projection < 1e-12
            and self.max_dev_estimator < 1e-10
        )


def verify_shadow_equivalence() -> ShadowEquivalenceReport:
    """Check that the shadow-style tensor (rescaled to the 6-outcome POVM
    normalization) is a generalized inverse, projects like the pseudoinverse
    (tau~ T = T+ T), and yields the identical estimator tensor."""
    t = compute_t_matrix(pauli6())
    tp = pseudoinverse(t).entries
    tt3 = 3.0 * shadow_tau_tilde()
    dev_gi = float(np.abs(t.entries @ tt3 @ t.entries - t.entries).max())
    dev_proj = float(np.abs(tt3 @ t.entries - tp @ t.entries).max())
    est_p = tp @ t.entries @ tp.T
    est_s = tt3 @ t.entries @ tt3.T
    dev_est = float(np.abs(est_p - est_s).max())
    return ShadowEquivalenceReport(
        rescaled_is_generalized_inverse=dev_gi < GEN_INV_TOL,
        max_dev_gen_inverse=dev_gi,
        max_dev_projection=dev_proj,
        max_dev_estimator=dev_est,
    )


def _negativity_of(elements: np.ndarray) -> float | None:
    """Negativity of the pseudoinverse estimator tensor, or None if not IC."""
    t = np.einsum("aij,bji->ab", elements, elements).real
    w, v = np.linalg.eigh(0.5 * (t + t.T))
    if (w > IC_RANK_TOL).sum() < 4:
        return None
    inv = np.where(w > IC_RANK_TOL, 1.0 / np.where(w > IC_RANK_TOL, w, 1.0), 0.0)
    tp = (v * inv) @ v.T
    return float(tp.max() - tp.min())


def _unit_vector(theta: float, phi: float = 0.0) -> np.ndarray:
    return np.array(
        [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
    )


def _bloch_elements(weights, vectors) -> np.ndarray:
    els = []
    for w, r in zip(weights, vectors):
        els.append(w * (I2 + r[0] * PAULI_X + r[1] * PAULI_Y + r[2] * PAULI_Z) / 2.0)
    return np.stack(els)


def _axes_elements(axes: list[np.ndarray]) -> np.ndarray:
    """Equal-weight rank-1 POVM from antipodal pairs along the given axes."""
    k = len(axes)
    vecs, weights = [], []
    for u in axes:
        vecs.extend([u, -u])
        weights.extend([1.0 / k, 1.0 / k])
    return _bloch_elements(weights, vecs)


def _four_outcome_elements(theta2: float, psi: float) -> np.ndarray | None:
    """Equal-weight 4-outcome rank-1 family with Bloch vectors summing to zero.

    v1 = z, v2 at polar angle theta2 in the xz-plane; v3, v4 fill the zero-sum
    constraint, rotated by psi about it. Contains the tetrahedral geometry.
    """
    v1 = np.array([0.0, 0.0, 1.0])
    v2 = _unit_vector(theta2)
    u = -(v1 + v2)
    half = u / 2.0
    rad2 = 1.0 - float(half @ half)
    if rad2 <= 1e-12:
        return None
    # orthonormal frame perpendicular to u
    ulen = float(np.linalg.norm(u))
    if ulen < 1e-12:
        e1 = np.array([1.0, 0.0, 0.0])
        e2 = np.array([0.0, 1.0, 0.0])
    else:
        un = u / ulen
        ref = np.array([1.0, 0.0, 0.0]) if abs(un[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = ref - (ref @ un) * un
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(un, e1)
    p = math.sqrt(rad2) * (math.cos(psi) * e1 + math.sin(psi) * e2)
    v3, v4 = half + p, half - p
    return _bloch_elements([0.5] * 4, [v1, v2, v3, v4])


def _grid(start, stop, step):
    return np.arange(start, stop + 1e-9, step)


def _candidate_elements(outcomes: int, params: tuple) -> np.ndarray | None:
    if outcomes == 4:
        return _four_outcome_elements(*params)
    if outcomes == 6:
        t2, t3, p3 = params
        return _axes_elements(
            [np.array([0.0, 0.0, 1.0]), _unit_vector(t2), _unit_vector(t3, p3)]
        )
    if outcomes == 8:
        t2, t3, p3, t4, p4 = params
        return _axes_elements(
            [
                np.array([0.0, 0.0, 1.0]),
                _unit_vector(t2),
                _unit_vector(t3, p3),
                _unit_vector(t4, p4),
            ]
        )
    raise ValueError(f"supported outcome counts are 4, 6, 8; got {outcomes}")


def _param_grids(outcomes: int, step: float):
    polar = _grid(step, math.pi - step / 2, step)
    azim = _grid(0.0, 2 * math.pi - step / 2, step)
    if outcomes == 4:
        return [polar, azim]
    if outcomes == 6:
        return [polar, polar, azim]
    return [polar, polar, azim, polar, azim]


def _scan(outcomes: int, grids) -> tuple[float, tuple]:
    best_nu, best_params = math.inf, None
    mesh = np.meshgrid(*grids, indexing="ij")
    flat = np.stack([m.reshape(-1) for m in mesh], axis=1)
    for params in flat:
        els = _candidate_elements(outcomes, tuple(params))
        if els is None:
            continue
        nu = _negativity_of(els)
        if nu is not None and nu < best_nu:
            best_nu, best_params = nu, tuple(params)
    return best_nu, best_params


def grid_search_povm(outcomes: int, resolution_deg: float = 15.0) -> tuple[QubitPOVM, float]:
    """Brute-force angular scan over structured rank-1 POVM families,
    minimizing the pseudoinverse-tensor negativity; coarse pass at the given
    resolution, then a finer local pass around the minimum."""
    if resolution_deg <= 0:
        raise ValueError("resolution must be positive")
    step = math.radians(resolution_deg)
    if outcomes == 8:
        # five free angles: keep the coarse pass bounded
        step = max(step, math.radians(30.0))
    best_nu, best_params = _scan(outcomes, _param_grids(outcomes, step))
    if best_params is None:
        return pauli6(), 9.0
    fine = step / 3.0
    grids = [
        _grid(max(p - step, 1e-6), p + step, fine) for p in best_params
    ]
    nu2, params2 = _scan(outcomes, grids)
    if params2 is not None and nu2 < best_nu:
        best_nu, best_params = nu2, params2
    els = _candidate_elements(outcomes, best_params)
    return QubitPOVM(els), best_nu


def mcmc_tau_search(
    t: TMatrix,
    steps: int,
    temperature: float = 1.0,
    seed: int = 0,
    proposal_scale: float = 0.1,
) -> tuple[GeneralizedInverse, float]:
    """Metropolis-Hastings walk on the generalized-inverse family, minimizing
    the negativity of tau T tau^t. Starts at the pseudoinverse."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rng = np.random.default_rng(seed)
    tmat = t.entries
    tp = pseudoinverse(t).entries
    proj_l = tp @ tmat  # T+ T
    proj_r = tmat @ tp  # T T+

    def tau_of(w):
        return tp + w - proj_l @ w @ proj_r

    def objective(tau):
        est = tau @ tmat @ tau.T
        return float(est.max() - est.min())

    w = np.zeros_like(tmat)
    tau = tau_of(w)
    nu = objective(tau)
    best_tau, best_nu = tau, nu
    for _ in range(steps - 1):
        w_prop = w + proposal_scale * rng.normal(size=w.shape)
        tau_prop = tau_of(w_prop)
        nu_prop = objective(tau_prop)
        if nu_prop <= nu or rng.random() < math.exp(-(nu_prop - nu) / max(temperature, 1e-300)):
            w, tau, nu = w_prop, tau_prop, nu_prop
            if nu < best_nu:
                best_tau, best_nu = tau, nu
    return GeneralizedInverse(best_tau), best_nu
