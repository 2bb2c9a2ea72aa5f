"""Exact dense-state engine for small qubit counts.

Ground-truth oracle for every other module: dense states, Born-rule
distributions, exact overlaps and exact channel application.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .kraus import KrausSet

if TYPE_CHECKING:
    from .povm import ProductPOVM

MAX_DENSE_QUBITS = 12

_NORM_TOL = 1e-12
_HERM_TOL = 1e-12
_TRACE_TOL = 1e-12
_EIG_TOL = 1e-10


@dataclass(frozen=True)
class DenseState:
    """An n-qubit state held as a full vector (pure) or density matrix (mixed).

    Immutable after construction; all invariants are checked on creation.
    """

    n: int
    kind: str  # "pure" | "mixed"
    data: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.n > MAX_DENSE_QUBITS:
            raise ValueError(f"dense states support 1 <= n <= {MAX_DENSE_QUBITS}, got {self.n}")
        dim = 2**self.n
        data = np.asarray(self.data, dtype=complex)
        if self.kind == "pure":
            if data.shape != (dim,):
                raise ValueError(f"pure state for n={self.n} needs shape ({dim},), got {data.shape}")
            norm2 = float(np.vdot(data, data).real)
            if abs(norm2 - 1.0) > 1e3 * _NORM_TOL:
                raise ValueError(f"pure state norm^2 deviates from 1 by {abs(norm2 - 1.0):.3e}")
        elif self.kind == "mixed":
            if data.shape != (dim, dim):
                raise ValueError(f"mixed state for n={self.n} needs shape ({dim},{dim}), got {data.shape}")
            if np.abs(data - data.conj().T).max() > _HERM_TOL:
                raise ValueError("density matrix is not Hermitian")
            tr = complex(np.trace(data))
            if abs(tr - 1.0) > 1e3 * _TRACE_TOL:
                raise ValueError(f"density matrix trace deviates from 1 by {abs(tr - 1.0):.3e}")
            if np.linalg.eigvalsh(data).min() < -_EIG_TOL:
                raise ValueError("density matrix has a negative eigenvalue")
        else:
            raise ValueError(f"kind must be 'pure' or 'mixed', got {self.kind!r}")
        object.__setattr__(self, "data", data)

    @classmethod
    def pure(cls, vec: np.ndarray) -> "DenseState":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        n = int(round(np.log2(vec.size)))
        if 2**n != vec.size:
            raise ValueError(f"vector length {vec.size} is not a power of two")
        return cls(n=n, kind="pure", data=vec)

    @classmethod
    def mixed(cls, mat: np.ndarray) -> "DenseState":
        mat = np.asarray(mat, dtype=complex)
        n = int(round(np.log2(mat.shape[0])))
        return cls(n=n, kind="mixed", data=mat)

    @classmethod
    def computational(cls, n: int, index: int = 0) -> "DenseState":
        vec = np.zeros(2**n, dtype=complex)
        vec[index] = 1.0
        return cls(n=n, kind="pure", data=vec)

    def density(self) -> np.ndarray:
        """Density-matrix form, regardless of kind."""
        if self.kind == "pure":
            return np.outer(self.data, self.data.conj())
        return self.data


@dataclass(frozen=True)
class RandomStateSpec:
    """Recipe for a random pure state built from Gaussian local tensors."""

    n: int
    family: str = "product"  # "product" | "entangled"
    bond_dim: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.family not in ("product", "entangled"):
            raise ValueError(f"family must be 'product' or 'entangled', got {self.family!r}")
        if self.bond_dim < 1:
            raise ValueError(f"bond_dim must be >= 1, got {self.bond_dim}")
        if (self.family == "product") != (self.bond_dim == 1):
            raise ValueError("family='product' requires bond_dim=1 and vice versa")
        if self.n < 1 or self.n > MAX_DENSE_QUBITS:
            raise ValueError(f"need 1 <= n <= {MAX_DENSE_QUBITS}, got {self.n}")


def random_local_tensors(n: int, bond_dim: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Chain of (Dl, 2, Dr) tensors with i.i.d. standard complex Gaussian entries."""
    tensors = []
    for k in range(n):
        dl = 1 if k == 0 else bond_dim
        dr = 1 if k == n - 1 else bond_dim
        tensors.append(rng.normal(size=(dl, 2, dr)) + 1j * rng.normal(size=(dl, 2, dr)))
    return tensors


def random_pure_state(spec: RandomStateSpec) -> DenseState:
    """Normalized pure state from contracting seeded Gaussian local tensors."""
    rng = np.random.default_rng(spec.seed)
    tensors = random_local_tensors(spec.n, spec.bond_dim, rng)
    vec = tensors[0]
    for t in tensors[1:]:
        vec = np.tensordot(vec, t, axes=([-1], [0]))
    vec = vec.reshape(-1)
    return DenseState(n=spec.n, kind="pure", data=vec / np.linalg.norm(vec))


def perturbed_partner(state: DenseState, strength: float, seed: int) -> DenseState:
    """A second pure state correlated with ``state``: psi + strength * chi, normalized.

    strength=0 reproduces the input; large strength decorrelates. Used to
    build benchmark pair ensembles with a prescribed average overlap.
    """
    if state.kind != "pure":
        raise ValueError("perturbed_partner needs a pure state")
    rng = np.random.default_rng(seed)
    chi = rng.normal(size=state.data.shape) + 1j * rng.normal(size=state.data.shape)
    chi /= np.linalg.norm(chi)
    vec = state.data + strength * chi
    return DenseState(n=state.n, kind="pure", data=vec / np.linalg.norm(vec))


def mixing_strength_for_overlap(n: int, target: float) -> float:
    """Perturbation strength whose ensemble-average overlap is ~``target``.

    From E|<psi|psi + t chi>|^2 / E||psi + t chi||^2 ~ (1 + t^2/2^n) / (1 + t^2).
    """
    d = 2.0**n
    if not 1.0 / d < target < 1.0:
        raise ValueError(f"target overlap must be in (2^-n, 1), got {target}")
    return float(np.sqrt((1.0 - target) / (target - 1.0 / d)))


def exact_overlap(rho: DenseState, sigma: DenseState) -> float:
    """Tr(rho sigma), the Hilbert-Schmidt overlap of two states."""
    if rho.n != sigma.n:
        raise ValueError(f"qubit count mismatch: {rho.n} vs {sigma.n}")
    if rho.kind == "pure" and sigma.kind == "pure":
        return float(abs(np.vdot(rho.data, sigma.data)) ** 2)
    val = complex(np.trace(rho.density() @ sigma.density()))
    if abs(val.imag) > 1e-12:
        raise ValueError(f"overlap has imaginary residue {val.imag:.3e}")
    return float(val.real)


def born_probabilities(rho: DenseState, povm: "ProductPOVM") -> np.ndarray:
    """Full outcome distribution P(a) = Tr(rho M_a1 x ... x M_an).

    Returned flat with C-order multi-index (a_1, ..., a_n).
    """
    if rho.n != povm.n:
        raise ValueError(f"qubit count mismatch: state n={rho.n}, POVM n={povm.n}")
    total = 1
    for f in povm.factors:
        total *= len(f.elements)
    if total > 10**7:
        raise ValueError(f"outcome space of size {total} is too large to enumerate")
    n = rho.n
    dm = rho.density()
    # group (s_k, s'_k) per site: axes (s1, s1', s2, s2', ...) -> [4]*n
    perm = [ax for k in range(n) for ax in (k, k + n)]
    cur = dm.reshape([2] * (2 * n)).transpose(perm).reshape([4] * n)
    for factor in povm.factors:
        # B[a, s*2+s'] picks up rho[s, s'] M_a[s', s]
        b = np.stack([m.T.reshape(-1) for m in factor.elements])
        # consume leading site axis, append outcome axis at the end; after n
        # steps the outcome axes sit in original site order
        cur = np.tensordot(cur, b, axes=([0], [1]))
    return cur.reshape(-1).real


def apply_channel_dense(rho: DenseState, kraus: KrausSet, qubit: int) -> DenseState:
    """Apply a single-qubit Kraus channel to ``qubit`` of a dense state."""
    if not 0 <= qubit < rho.n:
        raise ValueError(f"qubit index {qubit} out of range for n={rho.n}")
    dm = rho.density()
    left = np.eye(2**qubit, dtype=complex)
    right = np.eye(2 ** (rho.n - qubit - 1), dtype=complex)
    out = np.zeros_like(dm)
    for k in kraus.operators:
        full = np.kron(np.kron(left, k), right)
        out += full @ dm @ full.conj().T
    return DenseState(n=rho.n, kind="mixed", data=0.5 * (out + out.conj().T))


def fidelity(rho: DenseState, sigma: DenseState) -> float:
    """Uhlmann fidelity F = Tr sqrt(sqrt(rho) sigma sqrt(rho))."""
    if rho.n != sigma.n:
        raise ValueError(f"qubit count mismatch: {rho.n} vs {sigma.n}")
    a = rho.density()
    w, v = np.linalg.eigh(a)
    w = np.clip(w, 0.0, None)
    sq = (v * np.sqrt(w)) @ v.conj().T
    inner = sq @ sigma.density() @ sq
    ev = np.linalg.eigvalsh(inner)
    return float(np.sqrt(np.clip(ev, 0.0, None)).sum())


def trace_distance(rho: DenseState, sigma: DenseState) -> float:
    """(1/2) ||rho - sigma||_1."""
    diff = rho.density() - sigma.density()
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())
