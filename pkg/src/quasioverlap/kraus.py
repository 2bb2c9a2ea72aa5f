"""Single-qubit Kraus channels."""

from dataclasses import dataclass

import numpy as np

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

COMPLETENESS_TOL = 1e-12


@dataclass(frozen=True)
class KrausSet:
    """A completeness-checked set of single-qubit Kraus operators."""

    operators: np.ndarray  # (m, 2, 2) complex

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=complex)
        if ops.ndim != 3 or ops.shape[1:] != (2, 2):
            raise ValueError(f"expected shape (m, 2, 2), got {ops.shape}")
        total = np.einsum("mij,mik->jk", ops.conj(), ops)
        if np.abs(total - I2).max() > COMPLETENESS_TOL:
            raise ValueError("Kraus set is not trace preserving (sum K^dag K != I)")
        object.__setattr__(self, "operators", ops)

    def __len__(self):
        return self.operators.shape[0]


def depolarizing_kraus(lam: float) -> KrausSet:
    """Depolarizing channel of strength ``lam`` in [0, 1].

    K1 = sqrt((4-3*lam)/4) I, K_{2..4} = sqrt(lam/4) {X, Y, Z}.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"depolarizing factor must be in [0, 1], got {lam}")
    ops = np.stack(
        [
            np.sqrt((4.0 - 3.0 * lam) / 4.0) * I2,
            np.sqrt(lam / 4.0) * PAULI_X,
            np.sqrt(lam / 4.0) * PAULI_Y,
            np.sqrt(lam / 4.0) * PAULI_Z,
        ]
    )
    return KrausSet(ops)
