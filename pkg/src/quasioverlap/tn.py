"""Matrix-product states and locally purified density operators.

An MPS stores one rank-3 tensor per site with shape (Dl, 2, Dr). An LPDO
stores one rank-4 tensor per site with shape (Dl, 2, K, Dr), where K is the
local purification (Kraus) dimension; the represented operator is
rho = X X^dagger with X obtained by contracting the virtual legs.

Both classes keep a mixed-canonical gauge around ``center`` so that local
truncations are globally optimal and sampling marginals are cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kraus import KrausSet


@dataclass(frozen=True)
class TruncationEntry:
    site: int
    discarded_weight: float  # sqrt of the discarded squared singular values
    bond_kept: int


@dataclass
class TruncationLog:
    entries: list = field(default_factory=list)

    def record(self, site: int, discarded_weight: float, bond_kept: int):
        self.entries.append(TruncationEntry(site, float(discarded_weight), int(bond_kept)))

    def __len__(self):
        return len(self.entries)


def fidelity_lower_bound(log: TruncationLog) -> float:
    """Certified lower bound on the Uhlmann fidelity F = Tr sqrt(sqrt(rho)
    sigma sqrt(rho)) between the compressed state and the state all recorded
    truncations were applied to.

    Each truncation with discarded weight d moves the normalized purification
    by Euclidean distance sqrt(2 (1 - sqrt(1 - d^2))); the bound accumulates
    these by triangle inequality and uses F >= Re<psi|phi> = 1 - dist^2 / 2.
    """
    total = 0.0
    for e in log.entries:
        d = min(max(e.discarded_weight, 0.0), 1.0)
        total += math.sqrt(2.0 * (1.0 - math.sqrt(max(0.0, 1.0 - d * d))))
    return max(0.0, 1.0 - 0.5 * total * total)


def _svd_truncate(theta: np.ndarray, max_dim: int | None, cutoff: float = 0.0):
    """SVD of a matrix with optional rank cap; returns U, s, Vh, discarded
    weight (relative to the full norm) after renormalizing kept weight."""
    u, s, vh = np.linalg.svd(theta, full_matrices=False)
    norm2 = float(np.sum(s**2))
    keep = len(s)
    if cutoff > 0.0:
        keep = max(1, int(np.sum(s > cutoff * s[0])))
    if max_dim is not None:
        keep = min(keep, max_dim)
    discarded2 = float(np.sum(s[keep:] ** 2))
    s = s[:keep]
    if norm2 > 0:
        delta = math.sqrt(max(0.0, discarded2 / norm2))
    else:
        delta = 0.0
    kept_norm = math.sqrt(max(np.sum(s**2), 1e-300))
    s = s / kept_norm * math.sqrt(norm2 - discarded2) if norm2 > 0 else s
    return u[:, :keep], s, vh[:keep], delta


class MPS:
    """Pure state as a chain of (Dl, 2, Dr) tensors in mixed-canonical form."""

    def __init__(self, tensors, center: int = 0):
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        for k, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != 2:
                raise ValueError(f"site {k}: expected shape (Dl, 2, Dr), got {t.shape}")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[-1] != 1:
            raise ValueError("boundary bond dimensions must be 1")
        for k in range(len(self.tensors) - 1):
            if self.tensors[k].shape[-1] != self.tensors[k + 1].shape[0]:
                raise ValueError(f"bond mismatch between sites {k} and {k + 1}")
        self.n = len(self.tensors)
        if not 0 <= center < self.n:
            raise ValueError("center out of range")
        self.center = center

    @classmethod
    def product_state(cls, amplitudes) -> "MPS":
        tensors = []
        for amp in amplitudes:
            v = np.asarray(amp, dtype=complex).reshape(2)
            v = v / np.linalg.norm(v)
            tensors.append(v.reshape(1, 2, 1))
        return cls(tensors, center=0)

    @classmethod
    def basis_state(cls, bits) -> "MPS":
        return cls.product_state([[1.0, 0.0] if b == 0 else [0.0, 1.0] for b in bits])

    @classmethod
    def random_state(cls, n: int, bond_dim: int, seed: int) -> "MPS":
        rng = np.random.default_rng(seed)
        tensors = []
        dl = 1
        for k in range(n):
            dr = min(bond_dim, 2 ** (k + 1), 2 ** (n - k - 1))
            t = rng.standard_normal((dl, 2, dr)) + 1j * rng.standard_normal((dl, 2, dr))
            tensors.append(t)
            dl = dr
        psi = cls(tensors, center=0)
        psi.canonicalize(0)
        psi.normalize()
        return psi

    @classmethod
    def from_dense(cls, vec: np.ndarray, n: int) -> "MPS":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        if vec.size != 2**n:
            raise ValueError("vector length does not match qubit count")
        tensors = []
        rest = vec.reshape(1, -1)
        dl = 1
        for k in range(n - 1):
            mat = rest.reshape(dl * 2, -1)
            u, s, vh = np.linalg.svd(mat, full_matrices=False)
            keep = int(np.sum(s > 1e-14 * s[0])) or 1
            tensors.append(u[:, :keep].reshape(dl, 2, keep))
            rest = (s[:keep, None] * vh[:keep])
            dl = keep
        tensors.append(rest.reshape(dl, 2, 1))
        return cls(tensors, center=n - 1)

    def copy(self) -> "MPS":
        return MPS([t.copy() for t in self.tensors], center=self.center)

    def bond_dims(self):
        return [t.shape[-1] for t in self.tensors[:-1]]

    def norm(self) -> float:
        c = self.tensors[self.center]
        return float(np.linalg.norm(c))

    def normalize(self):
        c = self.tensors[self.center]
        self.tensors[self.center] = c / np.linalg.norm(c)

    def _shift_right(self, k: int):
        t = self.tensors[k]
        dl, p, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl * p, dr))
        self.tensors[k] = q.reshape(dl, p, q.shape[1])
        self.tensors[k + 1] = np.tensordot(r, self.tensors[k + 1], axes=([1], [0]))

    def _shift_left(self, k: int):
        t = self.tensors[k]
        dl, p, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl, p * dr).conj().T)
        self.tensors[k] = q.conj().T.reshape(q.shape[1], p, dr)
        self.tensors[k - 1] = np.tensordot(self.tensors[k - 1], r.conj().T, axes=([2], [0]))

    def move_center(self, site: int):
        while self.center < site:
            self._shift_right(self.center)
            self.center += 1
        while self.center > site:
            self._shift_left(self.center)
            self.center -= 1

    def canonicalize(self, site: int = 0):
        saved = self.center
        self.center = 0
        for k in range(self.n - 1):
            self._shift_right(k)
            self.center = k + 1
        self.move_center(site)
        del saved

    def apply_gate1(self, u: np.ndarray, site: int):
        self.move_center(site)
        self.tensors[site] = np.einsum("ps,asb->apb", u, self.tensors[site])

    def apply_gate2(self, u: np.ndarray, site: int, max_bond: int | None = None,
                    log: TruncationLog | None = None):
        """Apply a two-qubit gate on (site, site+1); u has shape (4, 4) acting
        on the ordered pair. SVDs back to MPS form with optional truncation."""
        if site < 0 or site + 1 >= self.n:
            raise ValueError("gate must act on an adjacent pair inside the chain")
        self.move_center(site)
        a, b = self.tensors[site], self.tensors[site + 1]
        dl, _, _ = a.shape
        _, _, dr = b.shape
        theta = np.tensordot(a, b, axes=([2], [0]))  # (dl, p1, p2, dr)
        theta = np.einsum("pq,aqb->apb", u.reshape(4, 4),
                          theta.reshape(dl, 4, dr)).reshape(dl, 2, 2, dr)
        mat = theta.reshape(dl * 2, 2 * dr)
        uu, s, vh, delta = _svd_truncate(mat, max_bond, cutoff=1e-12)
        keep = len(s)
        if log is not None and delta > 1e-12:
            log.record(site, delta, keep)
        self.tensors[site] = uu.reshape(dl, 2, keep)
        self.tensors[site + 1] = (s[:, None] * vh).reshape(keep, 2, dr)
        self.center = site + 1

    def to_dense(self) -> np.ndarray:
        cur = self.tensors[0]
        for t in self.tensors[1:]:
            cur = np.tensordot(cur, t, axes=([-1], [0]))
        return cur.reshape(-1)

    def tensor_with(self, other: "MPS") -> "MPS":
        """Chain concatenation: this state on the left, other on the right."""
        a = self.copy()
        a.move_center(a.n - 1)
        b = other.copy()
        b.move_center(0)
        return MPS(a.tensors + b.tensors, center=a.n - 1)

    def promote(self) -> "LPDO":
        """Embed the pure state as an LPDO with K = 1 on every site."""
        tensors = [t.reshape(t.shape[0], 2, 1, t.shape[2]) for t in self.tensors]
        return LPDO(tensors, center=self.center)


class LPDO:
    """Mixed state rho = X X^dagger stored as a purified tensor chain."""

    def __init__(self, tensors, center: int = 0):
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        for k, t in enumerate(self.tensors):
            if t.ndim != 4 or t.shape[1] != 2:
                raise ValueError(f"site {k}: expected shape (Dl, 2, K, Dr), got {t.shape}")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[-1] != 1:
            raise ValueError("boundary bond dimensions must be 1")
        for k in range(len(self.tensors) - 1):
            if self.tensors[k].shape[-1] != self.tensors[k + 1].shape[0]:
                raise ValueError(f"bond mismatch between sites {k} and {k + 1}")
        self.n = len(self.tensors)
        if not 0 <= center < self.n:
            raise ValueError("center out of range")
        self.center = center

    def copy(self) -> "LPDO":
        return LPDO([t.copy() for t in self.tensors], center=self.center)

    def bond_dims(self):
        return [t.shape[-1] for t in self.tensors[:-1]]

    def kraus_dims(self):
        return [t.shape[2] for t in self.tensors]

    def _shift_right(self, k: int):
        t = self.tensors[k]
        dl, p, kk, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl * p * kk, dr))
        self.tensors[k] = q.reshape(dl, p, kk, q.shape[1])
        self.tensors[k + 1] = np.tensordot(r, self.tensors[k + 1], axes=([1], [0]))

    def _shift_left(self, k: int):
        t = self.tensors[k]
        dl, p, kk, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl, p * kk * dr).conj().T)
        self.tensors[k] = q.conj().T.reshape(q.shape[1], p, kk, dr)
        self.tensors[k - 1] = np.tensordot(self.tensors[k - 1], r.conj().T, axes=([3], [0]))

    def move_center(self, site: int):
        while self.center < site:
            self._shift_right(self.center)
            self.center += 1
        while self.center > site:
            self._shift_left(self.center)
            self.center -= 1

    def norm(self) -> float:
        """sqrt(Tr rho) of the represented (unnormalized) operator."""
        c = self.tensors[self.center]
        return float(np.linalg.norm(c))

    def normalize(self):
        c = self.tensors[self.center]
        self.tensors[self.center] = c / np.linalg.norm(c)

    def trace(self) -> float:
        return self.norm() ** 2

    def apply_gate1(self, u: np.ndarray, site: int):
        self.move_center(site)
        self.tensors[site] = np.einsum("ps,askb->apkb", u, self.tensors[site])

    def apply_gate2(self, u: np.ndarray, site: int, max_bond: int | None = None,
                    log: TruncationLog | None = None):
        if site < 0 or site + 1 >= self.n:
            raise ValueError("gate must act on an adjacent pair inside the chain")
        self.move_center(site)
        a, b = self.tensors[site], self.tensors[site + 1]
        dl, _, k1, _ = a.shape
        _, _, k2, dr = b.shape
        theta = np.tensordot(a, b, axes=([3], [0]))  # (dl, p1, k1, p2, k2, dr)
        theta = theta.transpose(0, 1, 3, 2, 4, 5)  # (dl, p1, p2, k1, k2, dr)
        theta = np.einsum("pq,aqb->apb", u.reshape(4, 4),
                          theta.reshape(dl, 4, k1 * k2 * dr))
        theta = theta.reshape(dl, 2, 2, k1, k2, dr).transpose(0, 1, 3, 2, 4, 5)
        mat = theta.reshape(dl * 2 * k1, 2 * k2 * dr)
        uu, s, vh, delta = _svd_truncate(mat, max_bond, cutoff=1e-12)
        keep = len(s)
        if log is not None and delta > 1e-12:
            log.record(site, delta, keep)
        self.tensors[site] = uu.reshape(dl, 2, k1, keep)
        self.tensors[site + 1] = (s[:, None] * vh).reshape(keep, 2, k2, dr)
        self.center = site + 1

    def apply_kraus(self, ops: KrausSet, site: int, max_kraus: int | None = None,
                    log: TruncationLog | None = None):
        """Apply a single-site channel; the Kraus index multiplies K, then the
        purification leg is recompressed by SVD."""
        self.move_center(site)
        t = self.tensors[site]
        dl, _, kk, dr = t.shape
        kmat = np.stack(ops.operators)  # (nk, 2, 2)
        new = np.einsum("mps,askb->apmkb", kmat, t).reshape(dl, 2, len(ops.operators) * kk, dr)
        # compress the purification leg: group (dl, p, dr) vs the k leg
        mat = new.transpose(0, 1, 3, 2).reshape(dl * 2 * dr, new.shape[2])
        uu, s, vh, delta = _svd_truncate(mat, max_kraus, cutoff=1e-14)
        keep = len(s)
        if log is not None and delta > 1e-12:
            log.record(site, delta, keep)
        compressed = (uu * s[None, :]).reshape(dl, 2, dr, keep).transpose(0, 1, 3, 2)
        self.tensors[site] = compressed

    def to_dense(self) -> np.ndarray:
        """Dense (2^n, 2^n) density matrix; only for small chains."""
        if 2**self.n > 4096:
            raise ValueError("chain too long for dense conversion")
        cur = self.tensors[0]  # (1, p, k, D)
        phys, kraus = [cur.shape[1]], [cur.shape[2]]
        cur = cur.reshape(cur.shape[0], -1, cur.shape[3])
        for t in self.tensors[1:]:
            phys.append(t.shape[1])
            kraus.append(t.shape[2])
            cur = np.tensordot(cur, t.reshape(t.shape[0], -1, t.shape[3]), axes=([2], [0]))
            cur = cur.reshape(1, -1, t.shape[3])
        # cur axes: (1, p1 k1 p2 k2 ..., 1); separate phys from kraus
        shape = []
        for p, k in zip(phys, kraus):
            shape.extend([p, k])
        x = cur.reshape(shape)
        perm = list(range(0, 2 * self.n, 2)) + list(range(1, 2 * self.n, 2))
        x = x.transpose(perm).reshape(2**self.n, -1)
        return x @ x.conj().T


def apply_single_qubit_gate(state, u: np.ndarray, site: int):
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or np.abs(u @ u.conj().T - np.eye(2)).max() > 1e-10:
        raise ValueError("gate must be a 2x2 unitary")
    state.apply_gate1(u, site)
    return state


_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def apply_cnot(state, control: int, target: int, lam: float = 0.0,
               max_bond: int | None = None, max_kraus: int | None = None,
               log: TruncationLog | None = None):
    """Apply a nearest-neighbour CNOT, optionally followed by single-qubit
    depolarizing noise of strength ``lam`` on both qubits.

    A pure MPS is promoted to an LPDO automatically when noise is requested.
    """
    if abs(control - target) != 1:
        raise ValueError("apply_cnot handles adjacent qubits only; route first")
    if lam > 0.0 and isinstance(state, MPS):
        state = state.promote()
    site = min(control, target)
    if control < target:
        u = _CNOT
    else:
        swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
        u = swap @ _CNOT @ swap
    state.apply_gate2(u, site, max_bond=max_bond, log=log)
    if lam > 0.0:
        from .kraus import depolarizing_kraus

        ops = depolarizing_kraus(lam)
        state.apply_kraus(ops, control, max_kraus=max_kraus, log=log)
        state.apply_kraus(ops, target, max_kraus=max_kraus, log=log)
    return state


def truncate(state, site: int, max_dim: int, kind: str = "bond",
             log: TruncationLog | None = None):
    """Force a rank cap on the bond to the right of ``site`` ('bond') or on
    the purification leg at ``site`` ('kraus', LPDO only)."""
    if kind == "kraus":
        if not isinstance(state, LPDO):
            raise ValueError("kraus truncation requires an LPDO")
        state.move_center(site)
        t = state.tensors[site]
        dl, _, kk, dr = t.shape
        mat = t.transpose(0, 1, 3, 2).reshape(dl * 2 * dr, kk)
        uu, s, vh, delta = _svd_truncate(mat, max_dim)
        keep = len(s)
        if log is not None:
            log.record(site, delta, keep)
        state.tensors[site] = (uu * s[None, :]).reshape(dl, 2, dr, keep).transpose(0, 1, 3, 2)
        return state
    if kind != "bond":
        raise ValueError("kind must be 'bond' or 'kraus'")
    if site + 1 >= state.n:
        raise ValueError("no bond to the right of the last site")
    state.move_center(site)
    a, b = state.tensors[site], state.tensors[site + 1]
    if isinstance(state, LPDO):
        dl, _, k1, _ = a.shape
        _, _, k2, dr = b.shape
        theta = np.tensordot(a, b, axes=([3], [0]))
        mat = theta.reshape(dl * 2 * k1, 2 * k2 * dr)
        uu, s, vh, delta = _svd_truncate(mat, max_dim)
        keep = len(s)
        if log is not None:
            log.record(site, delta, keep)
        state.tensors[site] = uu.reshape(dl, 2, k1, keep)
        state.tensors[site + 1] = (s[:, None] * vh).reshape(keep, 2, k2, dr)
    else:
        dl, _, _ = a.shape
        _, _, dr = b.shape
        theta = np.tensordot(a, b, axes=([2], [0]))
        mat = theta.reshape(dl * 2, 2 * dr)
        uu, s, vh, delta = _svd_truncate(mat, max_dim)
        keep = len(s)
        if log is not None:
            log.record(site, delta, keep)
        state.tensors[site] = uu.reshape(dl, 2, keep)
        state.tensors[site + 1] = (s[:, None] * vh).reshape(keep, 2, dr)
    state.center = site + 1
    return state


def _site_transfer(tensor: np.ndarray, povm_elements: np.ndarray) -> np.ndarray:
    """Per-outcome transfer matrices E[a] of shape (Dl*Dl, Dr*Dr).

    Works for both MPS ((Dl, 2, Dr), implicit K = 1) and LPDO tensors."""
    if tensor.ndim == 3:
        tensor = tensor.reshape(tensor.shape[0], 2, 1, tensor.shape[2])
    # E[a]_{(l l'), (r r')} = sum_{p p' k} M_a[p', p] T[l p k r] conj(T)[l' p' k r']
    e = np.einsum("aqp,lpkr,mqks->almrs", povm_elements, tensor, tensor.conj())
    na, dl, _, dr, _ = e.shape
    return e.reshape(na, dl * dl, dr * dr)


def sample_from_tn(state, povm, n_shots: int, seed: int):
    """Batched ancestral sampling of product-POVM outcomes from an MPS/LPDO.

    Right environments are built once; each shot then walks left to right
    drawing one outcome per site from the conditional marginal.
    """
    from .estimator import SampleRecord

    n = state.n
    if povm.n != n:
        raise ValueError("POVM width does not match the chain length")
    rng = np.random.default_rng(seed)
    transfers = []
    for k in range(n):
        elems = np.stack(povm.factors[k].elements)
        transfers.append(_site_transfer(state.tensors[k], elems))
    right = [None] * (n + 1)
    right[n] = np.ones(1, dtype=complex)
    for k in range(n - 1, -1, -1):
        esum = transfers[k].sum(axis=0)
        right[k] = esum @ right[k + 1]
    outcomes = np.empty((n_shots, n), dtype=np.int64)
    left = np.ones((n_shots, 1), dtype=complex)
    for k in range(n):
        # probs[i, a] = left[i] . E[a] . right[k+1]
        cond = np.einsum("il,alr,r->ia", left, transfers[k], right[k + 1])
        probs = np.clip(np.real(cond), 0.0, None)
        totals = probs.sum(axis=1, keepdims=True)
        probs = probs / np.where(totals > 0, totals, 1.0)
        cum = np.cumsum(probs, axis=1)
        u = rng.random((n_shots, 1))
        choice = (u > cum[:, :-1]).sum(axis=1) if probs.shape[1] > 1 else np.zeros(n_shots, dtype=int)
        choice = np.asarray(choice, dtype=np.int64)
        outcomes[:, k] = choice
        new_left = np.empty((n_shots, transfers[k].shape[2]), dtype=complex)
        for a in range(transfers[k].shape[0]):
            sel = choice == a
            if sel.any():
                new_left[sel] = left[sel] @ transfers[k][a]
        left = new_left
    return SampleRecord(outcomes=outcomes, source="tn", povm=povm, seed=seed)
