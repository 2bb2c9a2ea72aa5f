import json

import numpy as np
import pytest

from quasioverlap.povm import (QubitPOVM, ProductPOVM, compute_t_matrix,
                               computational_basis_povm, estimator_tensor,
                               grid_search_povm, is_generalized_inverse,
                               mcmc_tau_search, pauli6, pseudoinverse,
                               random_generalized_inverse, reconstruct_state,
                               shadow_tau_tilde, verify_shadow_equivalence)
from quasioverlap.states import DenseState, born_probabilities, trace_distance


def tetrahedral_sic():
    vecs = np.array([
        [0, 0, 1],
        [2 * np.sqrt(2) / 3, 0, -1 / 3],
        [-np.sqrt(2) / 3, np.sqrt(2.0 / 3.0), -1 / 3],
        [-np.sqrt(2) / 3, -np.sqrt(2.0 / 3.0), -1 / 3],
    ])
    return QubitPOVM.from_bloch([0.5] * 4, vecs)


class TestQubitPOVM:
    def test_pauli6_elements(self):
        p = pauli6()
        assert len(p) == 6
        # z+, z-, x+, x- in the documented order
        assert np.allclose(p.elements[0], np.diag([1 / 3, 0]))
        assert np.allclose(p.elements[1], np.diag([0, 1 / 3]))
        assert np.allclose(p.elements[2], np.full((2, 2), 1 / 6))

    def test_sum_to_identity_enforced(self):
        with pytest.raises(ValueError):
            QubitPOVM(elements=(np.eye(2) * 0.5, np.eye(2) * 0.4))

    def test_psd_enforced(self):
        bad = np.array([[0.5, 0.8], [0.8, 0.5]])
        with pytest.raises(ValueError):
            QubitPOVM(elements=(bad, np.eye(2) - bad))

    @pytest.mark.parametrize("povm,complete", [
        (pauli6(), True),
        (tetrahedral_sic(), True),
        (computational_basis_povm(), False),
    ])
    def test_informational_completeness(self, povm, complete):
        assert povm.is_informationally_complete() is complete

    def test_json_round_trip(self, tmp_path):
        p = pauli6()
        q = QubitPOVM.from_json(p.to_json())
        assert all(np.allclose(a, b) for a, b in zip(p.elements, q.elements))
        path = tmp_path / "povm.json"
        p.save(path)
        r = QubitPOVM.load(path)
        assert all(np.allclose(a, b) for a, b in zip(p.elements, r.elements))
        json.loads(p.to_json())  # valid JSON document


class TestTMatrix:
    def test_gram_entries_pauli6(self):
        t = compute_t_matrix(pauli6()).entries
        assert abs(t[0, 0] - 1 / 9) < 1e-12          # same element
        assert abs(t[0, 1]) < 1e-12                  # orthogonal projectors
        assert abs(t[0, 2] - 1 / 18) < 1e-12         # cross-basis

    def test_pseudoinverse_is_generalized_inverse(self):
        t = compute_t_matrix(pauli6())
        assert is_generalized_inverse(t, pseudoinverse(t))

    def test_pauli6_pseudoinverse_pattern(self):
        tp = pseudoinverse(compute_t_matrix(pauli6())).entries
        for a in range(6):
            for b in range(6):
                if a == b:
                    expect = 5.0
                elif a // 2 == b // 2:
                    expect = -4.0
                else:
                    expect = 0.5
                assert abs(tp[a, b] - expect) < 1e-9

    def test_random_generalized_inverses(self):
        t = compute_t_matrix(pauli6())
        for seed in range(5):
            tau = random_generalized_inverse(t, seed=seed)
            assert is_generalized_inverse(t, tau)


class TestEstimatorTensor:
    def test_pauli6_negativity_is_nine(self):
        t = compute_t_matrix(pauli6())
        tp = pseudoinverse(t)
        tau_hat = estimator_tensor(tp, tp, t)
        assert abs(tau_hat.negativity - 9.0) < 1e-9

    def test_sic_negativity_is_six(self):
        # the tetrahedral 4-outcome POVM has pseudoinverse 6 I - J, range 6
        t = compute_t_matrix(tetrahedral_sic())
        tp = pseudoinverse(t)
        assert np.allclose(tp.entries, 6.0 * np.eye(4) - 1.0, atol=1e-9)
        tau_hat = estimator_tensor(tp, tp, t)
        assert abs(tau_hat.negativity - 6.0) < 1e-9

    def test_rejects_non_inverse(self):
        t = compute_t_matrix(pauli6())
        with pytest.raises(ValueError):
            estimator_tensor(np.eye(6), pseudoinverse(t), t)


class TestReconstruction:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_round_trip_pseudoinverse(self, n):
        rng = np.random.default_rng(n)
        g = rng.standard_normal((2**n, 2**n)) + 1j * rng.standard_normal((2**n, 2**n))
        rho = DenseState.mixed((g @ g.conj().T) / np.trace(g @ g.conj().T).real)
        povm = ProductPOVM.uniform(n, pauli6())
        tau = pseudoinverse(compute_t_matrix(pauli6()))
        back = reconstruct_state(born_probabilities(rho, povm), tau, povm)
        assert trace_distance(rho, back) < 1e-9

    def test_round_trip_any_generalized_inverse(self):
        rng = np.random.default_rng(42)
        t = compute_t_matrix(pauli6())
        povm = ProductPOVM.uniform(2, pauli6())
        for seed in range(3):
            tau = random_generalized_inverse(t, seed=seed)
            g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            rho = DenseState.mixed((g @ g.conj().T) / np.trace(g @ g.conj().T).real)
            back = reconstruct_state(born_probabilities(rho, povm), tau, povm)
            assert trace_distance(rho, back) < 1e-9


class TestShadowEquivalence:
    def test_tau_tilde_block_structure(self):
        tt = shadow_tau_tilde()
        assert np.allclose(tt[:2, :2], [[2, -1], [-1, 2]])
        assert np.allclose(tt[:2, 2:], 0.0)

    def test_report_passes(self):
        rep = verify_shadow_equivalence()
        assert rep.all_pass
        assert rep.max_dev_projection < 1e-12
        assert rep.max_dev_estimator < 1e-10


class TestSearches:
    def test_grid_six_outcomes_reaches_nine(self):
        povm, nu = grid_search_povm(6, resolution_deg=30)
        assert nu >= 9.0 - 1e-9
        assert povm.is_informationally_complete()

    def test_grid_four_outcomes_near_sic(self):
        _, nu = grid_search_povm(4, resolution_deg=15)
        assert 5.9 <= nu <= 6.5

    def test_mcmc_never_beats_pseudoinverse_start(self):
        t = compute_t_matrix(pauli6())
        _, nu = mcmc_tau_search(t, steps=300, seed=1)
        assert nu >= 9.0 - 1e-9

    def test_mcmc_validates_steps(self):
        t = compute_t_matrix(pauli6())
        with pytest.raises(ValueError):
            mcmc_tau_search(t, steps=0)
