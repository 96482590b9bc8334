import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from qclique import channel_ops as co
from qclique import circuit_model as cm
from qclique import clique_engine as ce
from qclique.circuit_model import Circuit, Gate
from qclique.tensor_core import DimensionError, haar_state, ket, random_density, random_frame

from conftest import pure
from oracles import kraus_overlap


def test_tuple_value_rejects_non_orthogonal():
    with pytest.raises(ce.CertificateError):
        ce.tuple_value(co.identity_channel(2), [pure(ket("0")), np.eye(2) / 2])


def test_identity_channel_has_no_clique():
    cert = ce.max_clique_value(co.identity_channel(3), 2, restarts=4)
    assert cert.value == pytest.approx(0.0, abs=1e-12)


def test_constant_pure_channel_is_a_clique():
    ch = co.constant_channel(pure(ket("0")), 4)
    assert ce.max_clique_value(ch, 3, restarts=2).value == pytest.approx(1.0)
    assert ce.min_is_value(ch, 2, restarts=2).value == pytest.approx(1.0)


def test_dephasing_channel_independent_set():
    cert = ce.min_is_value(co.dephasing_channel(2), 2, restarts=4)
    assert cert.value == pytest.approx(0.0, abs=1e-10)


def test_too_many_states():
    with pytest.raises(DimensionError):
        ce.max_clique_value(co.identity_channel(2), 3)


@pytest.mark.parametrize("d,seed", [(2, 0), (2, 7), (3, 1), (3, 8), (4, 2)])
def test_optimizer_inside_brute_force_bracket(d, seed):
    ch = co.random_channel(d, 2, 2, np.random.default_rng(seed))
    bf = ce.brute_force_value(ch, 2, seed=seed)
    hi = ce.max_clique_value(ch, 2, restarts=16, seed=seed).value
    lo = ce.min_is_value(ch, 2, restarts=16, seed=seed).value
    # both searches produce achieved values; the bracket bounds the true extremes
    assert bf.max - bf.resolution <= hi <= bf.max + 1e-9
    assert bf.min - 1e-9 <= lo <= bf.min + bf.resolution


def test_optimizer_history_is_monotone():
    ch = co.random_channel(4, 3, 2, np.random.default_rng(5))
    cert = ce.max_clique_value(ch, 3, restarts=3, seed=1, record_history=True)
    h = np.asarray(cert.history)
    assert len(h) >= 2 and np.all(np.diff(h) >= -1e-12)
    cert = ce.min_is_value(ch, 3, restarts=3, seed=1, record_history=True)
    assert np.all(np.diff(np.asarray(cert.history)) <= 1e-12)


def test_seed_determinism_and_threads():
    ch = co.random_channel(4, 2, 3, np.random.default_rng(9))
    a = ce.max_clique_value(ch, 2, restarts=8, seed=3)
    b = ce.max_clique_value(ch, 2, restarts=8, seed=3)
    c = ce.max_clique_value(ch, 2, restarts=8, seed=3, threads=2)
    assert a.value == b.value == c.value
    np.testing.assert_array_equal(a.vectors[0], c.vectors[0])


def test_initial_frame_is_used():
    ch = co.random_channel(3, 2, 2, np.random.default_rng(4))
    best = ce.max_clique_value(ch, 2, restarts=8, seed=0)
    seeded = ce.max_clique_value(ch, 2, restarts=0, initial=[np.column_stack(best.vectors)])
    assert seeded.value >= best.value - 1e-12


def test_certificate_round_trip_and_revalidation(rng):
    ch = co.random_channel(3, 2, 2, rng)
    cert = ce.max_clique_value(ch, 2, restarts=4, seed=2)
    back = ce.CliqueCertificate.from_dict(cert.to_dict())
    back.revalidate(ch)
    assert back.k == 2 and back.kind == "clique"
    f = random_frame(3, 2, rng)
    assert ce.tuple_value(ch, [f[:, 0], f[:, 1]]) == pytest.approx(kraus_overlap(ch.kraus(), f[:, 0], f[:, 1]))
    bad = ce.CliqueCertificate(back.states, back.value + 0.1, "clique")
    with pytest.raises(ce.CertificateError):
        bad.revalidate(ch)


def test_purify_certificate_does_not_lose_value(rng):
    ch = co.random_channel(4, 2, 2, rng)
    f = random_frame(4, 4, rng)
    rhos = [0.5 * (pure(f[:, 0]) + pure(f[:, 1])), 0.5 * (pure(f[:, 2]) + pure(f[:, 3]))]
    vecs = ce.purify_certificate(ch, rhos)
    assert ce.tuple_value(ch, vecs) >= ce.tuple_value(ch, rhos) - 1e-12


@hsettings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_qma2_verifier_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    circ = cm.random_circuit(1, 6, rng, max_width=3)
    ch = co.CircuitChannel(circ)
    rho, sigma = random_density(2, rng), random_density(2, rng)
    p = float(rng.random())
    got = ce.qma2_clique_verifier(circ, (rho, sigma), p).accept_probability
    assert got == pytest.approx(ce.qma2_closed_form(ch, rho, sigma, p), abs=1e-10)


def test_qma2_honest_acceptance():
    # constant pure output: every orthogonal pair has output overlap c = 1
    circ = Circuit(1, [Gate.trace_out(0), Gate.prepare(0)])
    c, s = 1.0, 0.5
    p = ce.qma2_weight(c, s)
    got = ce.qma2_clique_verifier(circ, (pure(ket("0")), pure(ket("1"))), p).accept_probability
    assert got == pytest.approx(0.5 + (1 - p) * c / 2, abs=1e-12)
    assert got >= ce.qma2_thresholds(c, s)[0]
    assert got >= ce.qma2_bounds(c, s)[0] - 1e-12


def _depolarized_no_instance():
    # fully depolarizing qubit channel: every orthogonal pair has output overlap 1/2
    circ = Circuit(1, [Gate.prepare(1), Gate.unitary("H", 1), Gate.prepare(2), Gate.unitary("CNOT", 1, 2),
                       Gate.unitary("SWAP", 0, 1), Gate.trace_out(2), Gate.trace_out(1)])
    return circ, 1.0, 0.5


def test_qma2_recomputed_soundness_holds(rng):
    circ, c, s = _depolarized_no_instance()
    p = ce.qma2_weight(c, s)
    bound = ce.qma2_bounds(c, s)[1]
    for _ in range(50):
        a, b = haar_state(2, rng), haar_state(2, rng)
        acc = ce.qma2_clique_verifier(circ, (pure(a), pure(b)), p).accept_probability
        assert acc <= bound + 1e-12


@pytest.mark.xfail(strict=True, reason="stated soundness threshold is below the acceptance of an orthogonal "
                                       "pair on a no-instance; see the decisions ledger")
def test_qma2_stated_soundness_threshold():
    circ, c, s = _depolarized_no_instance()
    p = ce.qma2_weight(c, s)
    acc = ce.qma2_clique_verifier(circ, (pure(ket("0")), pure(ket("1"))), p).accept_probability
    assert acc <= ce.qma2_thresholds(c, s)[1]


@hsettings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), k=st.integers(2, 3))
def test_qis_verifier_matches_closed_forms(seed, k):
    rng = np.random.default_rng(seed)
    circ = cm.random_circuit(2, 6, rng, max_width=3)
    ch = co.CircuitChannel(circ)
    f = random_frame(4, k, rng)
    proofs = [pure(f[:, i]) for i in range(k)]
    p = float(rng.random())
    got = ce.qmak_is_verifier(circ, proofs, p).accept_probability
    assert got == pytest.approx(ce.qmak_is_closed_form(ch, proofs, p), abs=1e-10)


def test_qis_threshold_formula():
    c, s = 0.8, 0.3
    p = ce.qis_weight(c, s)
    assert p == pytest.approx(2 / 2.5)
    # orthogonal proofs with output overlap 1 - c
    assert p / 2 + (1 - p) * c / 2 == pytest.approx(ce.qis_thresholds(c, s)[0])
    cc, ss = ce.qis_thresholds(c, s)
    assert cc - ss == pytest.approx((c - s) ** 2 / (4 * (2 + c - s)))


def test_brute_force_limits():
    with pytest.raises(DimensionError):
        ce.brute_force_value(co.identity_channel(5))
