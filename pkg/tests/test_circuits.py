import numpy as np
import pytest

from quasioverlap.circuits import (Circuit, CircuitParseError, Gate, NoiseModel,
                                   build_bell_circuit, build_standard_swap_test,
                                   count_resources, estimate_overlap_via_circuit,
                                   improved_swap_cnot_count, load_circuit,
                                   route_long_range_cnot, save_circuit)
from quasioverlap.tn import MPS


def permutation_of(pairs, width):
    """Image of every computational basis state under a CNOT sequence."""
    out = []
    for x in range(2**width):
        bits = [(x >> (width - 1 - k)) & 1 for k in range(width)]
        for c, t in pairs:
            bits[t] ^= bits[c]
        out.append(sum(b << (width - 1 - k) for k, b in enumerate(bits)))
    return out


class TestRouting:
    @pytest.mark.parametrize("control,target", [(0, 1), (0, 3), (3, 0), (2, 7), (7, 2),
                                                (0, 10), (10, 0)])
    def test_routed_cnot_is_the_logical_cnot(self, control, target):
        width = max(control, target) + 1
        pairs = route_long_range_cnot(control, target)
        assert all(abs(c - t) == 1 for c, t in pairs)
        assert permutation_of(pairs, width) == permutation_of([(control, target)], width)

    @pytest.mark.parametrize("d", range(1, 11))
    def test_cnot_count_law(self, d):
        assert len(route_long_range_cnot(0, d)) == 4 * (d - 1) + 1

    def test_same_qubit_rejected(self):
        with pytest.raises(ValueError):
            route_long_range_cnot(3, 3)


class TestResourceCounts:
    @pytest.mark.parametrize("n,count", [(1, 1), (2, 10), (3, 27), (8, 232)])
    def test_bell_nn_cnot_counts(self, n, count):
        assert count_resources(build_bell_circuit(n))["nn_cnots"] == count

    @pytest.mark.parametrize("n,count", [(1, 12), (2, 60), (3, 144), (8, 1104)])
    def test_improved_swap_counts(self, n, count):
        assert improved_swap_cnot_count(n) == count

    def test_swap_test_structure(self):
        c = build_standard_swap_test(2)
        assert c.width == 5 and c.role == "swap-ancilla"
        r = count_resources(c)
        # 2 Fredkins, each CNOT + 6-CNOT Toffoli + CNOT
        assert r["cnots"] == 16


class TestCircuitValidation:
    def test_layer_overlap_rejected(self):
        with pytest.raises(ValueError):
            Circuit(width=2, layers=[[Gate("h", (0,)), Gate("x", (0,))]])

    def test_qubit_out_of_range(self):
        with pytest.raises(ValueError):
            Circuit(width=2, layers=[[Gate("cnot", (0, 2))]])

    def test_unknown_gate(self):
        with pytest.raises(ValueError):
            Gate("cz", (0, 1))


class TestSerialization:
    def test_round_trip(self, tmp_path):
        c = build_bell_circuit(2)
        path = tmp_path / "bell.circ"
        save_circuit(c, path)
        back = load_circuit(path)
        assert back.width == c.width and back.role == c.role
        assert list(back.gates()) == list(c.gates())

    def test_comments_and_layers(self, tmp_path):
        path = tmp_path / "c.circ"
        path.write_text("# overlap circuit\nQUBITS 3\nh 0  # rotate\nx 2\n---\ncnot 0 1\n")
        c = load_circuit(path)
        assert c.depth == 2
        assert len(c.layers[0]) == 2

    @pytest.mark.parametrize("text,fragment", [
        ("h 0\n", "QUBITS"),
        ("QUBITS 2\nfoo 0\n", "line 2"),
        ("QUBITS 2\ncnot 0 x\n", "line 2"),
        ("QUBITS 2\nQUBITS 2\n", "duplicate"),
        ("QUBITS 2\nh 0\nh 0\n---\n", "twice"),
        ("QUBITS 2\nROLE wizard\n", "ROLE"),
    ])
    def test_parse_errors(self, tmp_path, text, fragment):
        path = tmp_path / "bad.circ"
        path.write_text(text)
        with pytest.raises(CircuitParseError, match=fragment):
            load_circuit(path)


@pytest.fixture(scope="module")
def pair():
    a = MPS.random_state(2, 2, seed=21)
    b = MPS.random_state(2, 2, seed=22)
    truth = abs(np.vdot(a.to_dense(), b.to_dense())) ** 2
    return a, b, truth


class TestCircuitEstimates:
    @pytest.mark.parametrize("builder", [build_bell_circuit, build_standard_swap_test])
    def test_noiseless_exact_recovers_overlap(self, builder, pair):
        a, b, truth = pair
        noiseless = NoiseModel(cnot_lambda=0.0, readout_flip=0.0)
        r = estimate_overlap_via_circuit(a, b, builder(2), noiseless, exact=True)
        assert abs(r.mean - truth) < 1e-9

    def test_shots_agree_with_exact_distribution(self, pair):
        a, b, _ = pair
        noise = NoiseModel()
        circ = build_bell_circuit(2)
        ex = estimate_overlap_via_circuit(a, b, circ, noise, exact=True)
        sh = estimate_overlap_via_circuit(a, b, circ, noise, n_shots=40000, seed=3)
        assert abs(sh.mean - ex.mean) < 5 * sh.stderr + 0.005

    def test_noise_biases_the_circuit(self, pair):
        a, b, truth = pair
        noisy = estimate_overlap_via_circuit(a, b, build_standard_swap_test(2),
                                             NoiseModel(cnot_lambda=0.02), exact=True)
        assert abs(noisy.mean - truth) > 1e-3

    def test_width_mismatch_rejected(self, pair):
        a, b, _ = pair
        with pytest.raises(ValueError):
            estimate_overlap_via_circuit(a, b, build_bell_circuit(3), NoiseModel(), exact=True)

    def test_generic_role_rejected(self, pair):
        a, b, _ = pair
        c = Circuit(width=4, layers=[[Gate("h", (0,))]])
        with pytest.raises(ValueError):
            estimate_overlap_via_circuit(a, b, c, NoiseModel(), exact=True)


class TestNoiseModel:
    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseModel(cnot_lambda=-0.1)
        with pytest.raises(ValueError):
            NoiseModel(readout_flip=0.9)
