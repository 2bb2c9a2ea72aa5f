"""Multiqubit state-overlap estimation via factorable quasiprobability
representations, with tensor-network noisy-circuit and randomized-measurement
baselines."""

from .states import DenseState, RandomStateSpec, random_pure_state, exact_overlap
from .kraus import KrausSet, depolarizing_kraus
from .povm import (
    QubitPOVM,
    ProductPOVM,
    pauli6,
    compute_t_matrix,
    pseudoinverse,
    estimator_tensor,
)
from .estimator import hoeffding_plan, sample_outcomes, estimate_overlap, exact_expectation
from .tn import MPS, LPDO, TruncationLog, fidelity_lower_bound

__version__ = "0.1.0"

__all__ = [
    "DenseState",
    "RandomStateSpec",
    "random_pure_state",
    "exact_overlap",
    "KrausSet",
    "depolarizing_kraus",
    "QubitPOVM",
    "ProductPOVM",
    "pauli6",
    "compute_t_matrix",
    "pseudoinverse",
    "estimator_tensor",
    "hoeffding_plan",
    "sample_outcomes",
    "estimate_overlap",
    "exact_expectation",
    "MPS",
    "LPDO",
    "TruncationLog",
    "fidelity_lower_bound",
    "__version__",
]
