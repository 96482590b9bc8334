import json
import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from qclique import circuit_model as cm
from qclique.config import override
from qclique.circuit_model import Circuit, CircuitError, CircuitFormatError, Gate
from qclique.tensor_core import ket, random_density

from conftest import pure
from oracles import simulate


def test_identity_circuit():
    out = cm.evaluate(cm.identity_circuit(1), pure(ket("0")))
    np.testing.assert_allclose(out.matrix, pure(ket("0")))


def test_wire_counts_and_validation():
    c = Circuit(2, [Gate.prepare(0), Gate.unitary("CNOT", 1, 0), Gate.trace_out(2)])
    assert c.out_count == 2 and c.peak_width == 3
    # size counts inputs, outputs and gates
    assert c.size == 2 + 2 + 3
    with pytest.raises(CircuitError):
        Circuit(1, [Gate.unitary("CNOT", 0, 1)])
    with pytest.raises(CircuitError):
        Circuit(1, [Gate.trace_out(1)])
    with pytest.raises(CircuitError):
        Gate.unitary("CNOT", 0, 0)
    with pytest.raises(CircuitError):
        Gate.unitary("RY", 0)
    with pytest.raises(CircuitError):
        Gate.custom(np.ones((2, 2)), [0])


def test_gate_aliases_and_controls():
    assert Gate.unitary("cx", 0, 1).name == "CNOT"
    g = Gate("U", (1,), name="X", controls=(0,), control_values=(0,))
    # flips the target only when the control reads 0
    out = cm.evaluate(Circuit(2, [g]), pure(ket("00")))
    np.testing.assert_allclose(out.matrix, pure(ket("01")), atol=1e-12)


def test_prep_inserts_and_trace_removes():
    c = Circuit(1, [Gate.prepare(0), Gate.unitary("X", 0), Gate.trace_out(1)])
    np.testing.assert_allclose(cm.evaluate(c, pure(ket("0"))).matrix, pure(ket("1")), atol=1e-12)


def test_bell_then_trace_gives_mixed():
    c = Circuit(1, [Gate.unitary("H", 0), Gate.prepare(1), Gate.unitary("CNOT", 0, 1), Gate.trace_out(1)])
    np.testing.assert_allclose(cm.evaluate(c, pure(ket("0"))).matrix, np.eye(2) / 2, atol=1e-12)


def test_dephasing_circuit_output_is_diagonal(rng):
    rho = random_density(2, rng)
    out = cm.evaluate(cm.dephasing_circuit(), rho).matrix
    np.testing.assert_allclose(out, np.diag(np.diag(rho)), atol=1e-12)


def test_swap_test_on_orthogonal_product():
    out = cm.evaluate(cm.swap_test_circuit(1), pure(ket("01")))
    assert cm.qubit_zero_probability(out.matrix, 2) == pytest.approx(0.5)


def test_qubit_limit():
    wide = Circuit(1, [Gate.prepare(0) for _ in range(13)])
    with pytest.raises(CircuitError, match="limit is 12"):
        cm.evaluate(wide, pure(ket("0")))
    narrow = Circuit(1, [Gate.prepare(0) for _ in range(4)])
    with override(max_qubits=4):
        with pytest.raises(CircuitError, match="limit is 4"):
            cm.evaluate(narrow, pure(ket("0")))
    with override(max_qubits=5):
        assert cm.evaluate(narrow, pure(ket("0"))).dim == 2 ** 5


def test_prepare_distribution(rng):
    probs = [0.1, 0.2, 0.3, 0.4, 0.0]
    wires = [0, 1, 2]
    c = Circuit(0, [Gate.prepare(0), Gate.prepare(1), Gate.prepare(2)] + cm.prepare_distribution_gates(probs, wires))
    diag = np.real(np.diag(cm.evaluate(c, np.ones((1, 1))).matrix))
    np.testing.assert_allclose(diag, probs + [0, 0, 0], atol=1e-12)


def test_superposition_gate_exact():
    c = Circuit(1, [cm.prepare_superposition_gate(0.3, 0)])
    out = cm.evaluate(c, pure(ket("0"))).matrix
    assert out[0, 0].real == pytest.approx(0.3, abs=1e-15)


def test_json_round_trip(tmp_path, rng):
    c = cm.random_circuit(2, 10, rng)
    path = tmp_path / "c.json"
    cm.save_circuit(c, path)
    back = cm.load_circuit(path)
    rho = random_density(4, rng)
    np.testing.assert_allclose(cm.evaluate(back, rho).matrix, cm.evaluate(c, rho).matrix, atol=1e-12)


def test_json_errors_carry_positions():
    with pytest.raises(CircuitFormatError, match="line 1, column"):
        cm.circuit_from_json('{"in": 1, "gates": [}')
    with pytest.raises(CircuitFormatError, match="gate 0"):
        cm.circuit_from_json(json.dumps({"in": 1, "gates": [{"op": "U", "name": "NOPE", "wires": [0]}]}))
    with pytest.raises(CircuitFormatError):
        cm.circuit_from_json(json.dumps({"gates": []}))


def test_canonicalize_moves_preps_and_traces(rng):
    for _ in range(20):
        c = cm.random_circuit(2, 10, rng, max_width=4)
        can = cm.canonicalize(c)
        assert can.is_canonical()
        rho = random_density(4, rng)
        np.testing.assert_allclose(cm.evaluate(can, rho).matrix, cm.evaluate(c, rho).matrix, atol=1e-10)


def test_dilation_reproduces_channel(rng):
    c = cm.random_circuit(2, 8, rng, canonical=True)
    v, survivors, traced = cm.dilation(c)
    w = v.ndim - 1
    flat = np.moveaxis(v, survivors + traced, range(w)).reshape(2 ** len(survivors), 2 ** len(traced), -1)
    rho = random_density(4, rng)
    out = np.einsum("aki,ij,bkj->ab", flat, rho, flat.conj())
    np.testing.assert_allclose(out, cm.evaluate(c, rho).matrix, atol=1e-10)


@hsettings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 3), size=st.integers(1, 12))
def test_evaluate_matches_dense_oracle(seed, n, size):
    rng = np.random.default_rng(seed)
    c = cm.random_circuit(n, size, rng, max_width=5)
    rho = random_density(2 ** n, rng)
    np.testing.assert_allclose(cm.evaluate(c, rho).matrix, simulate(c, rho), atol=1e-10)


@hsettings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 3))
def test_swap_test_formula(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_density(2 ** n, rng), random_density(2 ** n, rng)
    out = cm.evaluate(cm.swap_test_circuit(n), np.kron(a, b))
    want = 0.5 + 0.5 * np.real(np.trace(a @ b))
    assert cm.qubit_zero_probability(out.matrix, 2 * n) == pytest.approx(want, abs=1e-9)


@hsettings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), p=st.sampled_from([0.0, 0.3, 0.5, 1.0]))
def test_direct_sum_matches_block_oracle(seed, p):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    c1 = cm.random_circuit(n, int(rng.integers(1, 9)), rng, max_width=3, canonical=True)
    c2 = cm.random_circuit(n, int(rng.integers(1, 9)), rng, max_width=3, canonical=True)
    ds = cm.direct_sum(c1, c2, p)
    emb = cm.direct_sum_embedding(c1.out_count, c2.out_count)
    for x in range(2 ** n):
        rho = np.zeros((2 ** n, 2 ** n))
        rho[x, x] = 1
        blocks = np.zeros((emb.shape[1],) * 2, dtype=complex)
        d1 = 2 ** c1.out_count
        blocks[:d1, :d1] = p * simulate(c1, rho)
        blocks[d1:, d1:] = (1 - p) * simulate(c2, rho)
        np.testing.assert_allclose(cm.evaluate_matrix(ds, rho), emb @ blocks @ emb.T, atol=1e-6)
    assert ds.size <= cm.DIRECT_SUM_SIZE_SLOPE * (c1.size + c2.size) + cm.DIRECT_SUM_SIZE_INTERCEPT


def test_direct_sum_rejects_mismatched_inputs():
    with pytest.raises(CircuitError):
        cm.direct_sum(cm.identity_circuit(1), cm.identity_circuit(2), 0.5)
    with pytest.raises(ValueError):
        cm.direct_sum(cm.identity_circuit(1), cm.identity_circuit(1), 1.5)


def test_parallel_and_compose(rng):
    a, b = cm.random_circuit(1, 4, rng, max_width=2), cm.random_circuit(1, 4, rng, max_width=2)
    r1, r2 = random_density(2, rng), random_density(2, rng)
    par = cm.parallel(a, b)
    want = np.kron(cm.evaluate(a, r1).matrix, cm.evaluate(b, r2).matrix)
    np.testing.assert_allclose(cm.evaluate(par, np.kron(r1, r2)).matrix, want, atol=1e-10)
    h = Circuit(1, [Gate.unitary("H", 0)])
    comp = cm.compose(h, h)
    np.testing.assert_allclose(cm.evaluate(comp, pure(ket("1"))).matrix, pure(ket("1")), atol=1e-12)
    with pytest.raises(CircuitError):
        cm.compose(cm.identity_circuit(1), cm.identity_circuit(2))
