"""Sampled verification suites for the structural lemmas.

Each suite returns a list of :class:`Check` records.  A check compares an
observed quantity against a bound under a relation, with a tolerance and a
provenance tag (``closed-form``, ``simulated``, ``optimized`` or ``exact``).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import channel_ops as co
from . import circuit_model as cm
from . import classical_problems as cp
from . import clique_engine as ce
from . import reductions as rd
from .config import override
from .tensor_core import (frobenius_norm, haar_state, haar_unitary, nearest_isometry, overlap,
                          random_density, random_frame, trace_norm)


@dataclass(frozen=True)
class Check:
    name: str
    observed: float
    bound: float
    relation: str
    tol: float
    provenance: str

    @property
    def passed(self) -> bool:
        if self.relation == "<=":
            return self.observed <= self.bound + self.tol
        if self.relation == ">=":
            return self.observed >= self.bound - self.tol
        return abs(self.observed - self.bound) <= self.tol

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _pure(v):
    return np.outer(v, v.conj())


def suite_norms(samples, rng):
    gap_eq, gap_vec = 0.0, -np.inf
    for _ in range(samples):
        d = int(rng.integers(2, 17))
        a, b = haar_state(d, rng), haar_state(d, rng)
        diff = _pure(a) - _pure(b)
        gap_eq = max(gap_eq, abs(frobenius_norm(diff) - math.sqrt(2) * trace_norm(diff)))
        gap_vec = max(gap_vec, frobenius_norm(diff) - math.sqrt(2) * np.linalg.norm(a - b))
    return [Check("frobenius = sqrt2 * trace distance", gap_eq, 0.0, "==", 1e-9, "simulated"),
            Check("frobenius <= sqrt2 * vector distance", gap_vec, 0.0, "<=", 1e-9, "simulated")]


def suite_swap_test(samples, rng):
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(1, 4))
        r1, r2 = random_density(2 ** n, rng), random_density(2 ** n, rng)
        out = cm.evaluate(cm.swap_test_circuit(n), np.kron(r1, r2))
        worst = max(worst, abs(cm.qubit_zero_probability(out, 2 * n) - (0.5 + 0.5 * overlap(r1, r2))))
    return [Check("swap test accepts with 1/2 + Tr(rho sigma)/2", worst, 0.0, "==", 1e-9, "simulated")]


def suite_direct_sum(samples, rng):
    worst, size_excess = 0.0, -np.inf
    for _ in range(samples):
        n = int(rng.integers(1, 3))
        c1 = cm.random_circuit(n, int(rng.integers(1, 9)), rng, max_width=3, canonical=True)
        c2 = cm.random_circuit(n, int(rng.integers(1, 9)), rng, max_width=3, canonical=True)
        ch1, ch2 = co.CircuitChannel(c1), co.CircuitChannel(c2)
        emb = cm.direct_sum_embedding(c1.out_count, c2.out_count)
        for p in (0.0, 0.3, 0.5, 1.0):
            ds = cm.direct_sum(c1, c2, p)
            size_excess = max(size_excess, ds.size - (cm.DIRECT_SUM_SIZE_SLOPE * (c1.size + c2.size)
                                                      + cm.DIRECT_SUM_SIZE_INTERCEPT))
            want_ch = co.BlockSumChannel([ch1, ch2], [p, 1 - p])
            for x in range(2 ** n):
                rho = np.zeros((2 ** n, 2 ** n), dtype=complex)
                rho[x, x] = 1.0
                want = emb @ want_ch.apply_matrix(rho) @ emb.T
                worst = max(worst, float(np.max(np.abs(cm.evaluate_matrix(ds, rho) - want))))
    return [Check("direct sum circuit = p Phi1 + (1-p) Phi2", worst, 0.0, "==", 1e-6, "simulated"),
            Check("direct sum size - (A(|C1|+|C2|) + B)", size_excess, 0.0, "<=", 0.0, "exact")]


def near_optimal_pair(planted, rng, scale):
    a, b = planted
    d = a.size
    x = a + scale * (rng.normal(size=d) + 1j * rng.normal(size=d))
    x /= np.linalg.norm(x)
    y = b + scale * (rng.normal(size=d) + 1j * rng.normal(size=d))
    y -= np.vdot(x, y) * x
    return x, y / np.linalg.norm(y)


def suite_separator(samples, rng, k=2, h_dim=4, k_dim=2):
    sep = rd.separator_channel(h_dim, k, k_dim)
    kr = sep.kraus()
    d = sep.in_dim
    best = -np.inf
    for _ in range(samples):
        f = random_frame(d, 2, rng)
        oa = np.einsum("rij,j->ri", kr, f[:, 0])
        ob = np.einsum("rij,j->ri", kr, f[:, 1])
        best = max(best, float(np.sum(np.abs(oa.conj() @ ob.T) ** 2)))
    planted_err, stab_worst, inter_fail = 0.0, -np.inf, 0
    for t in range(max(1, samples // 10)):
        body = rd._kron_all([haar_state(h_dim, rng) for _ in range(k)])
        pair = rd.planted_pair(body, k_dim)
        planted_err = max(planted_err, abs(co.output_overlap(sep, _pure(pair[0]), _pure(pair[1])) - 1 / k))
        x, y = near_optimal_pair(pair, rng, 10 ** rng.uniform(-4, -0.5))
        rep = rd.separator_stability_check(x, y, h_dim, k, k_dim)
        stab_worst = max(stab_worst, rep.distance - rep.bound)
        inter_fail += not rep.holds
    return [Check("max overlap of random orthogonal pairs", best, 1 / k, "<=", 1e-9, "simulated"),
            Check("planted separable pair overlap", planted_err, 0.0, "==", 1e-10, "closed-form"),
            Check("stability distance - 10 k eps^(1/4)", stab_worst, 0.0, "<=", 1e-9, "simulated"),
            Check("stability intermediate bounds violated", inter_fail, 0, "==", 0, "simulated")]


def _measuring_channel():
    """One-qubit computational-basis measurement, so <1|Φ(ψ)|1> = |ψ_1|²."""
    return co.dephasing_channel(2)


def suite_algorithm_channel(samples, rng):
    psi = rd.algorithm_channel(_measuring_channel())
    worst = 0.0
    for _ in range(samples):
        q, qp = rng.random(), rng.random()
        u = np.array([math.sqrt(1 - q), math.sqrt(q)])
        w = np.array([math.sqrt(1 - qp), math.sqrt(qp)])
        s1, s2 = random_density(2, rng), random_density(2, rng)
        obs = overlap(psi.apply_matrix(np.kron(_pure(u), s1)), psi.apply_matrix(np.kron(_pure(w), s2)))
        worst = max(worst, abs(obs - rd.algorithm_overlap(q, qp)))
    hi = rd.algorithm_overlap(Fraction(3, 4))
    lo = rd.algorithm_overlap(Fraction(2, 3))
    return [Check("overlap = (1-q)(1-q')/2 + q q'", worst, 0.0, "==", 1e-10, "simulated"),
            Check("q = 3/4 endpoint", float(hi - Fraction(19, 32)), 0.0, "==", 0.0, "exact"),
            Check("q = 2/3 endpoint", float(lo - Fraction(1, 2)), 0.0, "==", 0.0, "exact")]


def suite_stability_weight(samples, rng, c_const=20.0, alpha=0.25):
    checks = []
    eps = np.logspace(-8, 0, max(samples, 100))
    for eta in (1e-1, 1e-2, 1e-3):
        p = rd.stability_weight(c_const, alpha, eta)
        worst = float(np.max(rd.stability_excess(p, c_const, alpha, eps)))
        checks.append(Check(f"max excess at eta={eta:g} (p={p:.6f})", worst, eta, "<=", 0.0, "closed-form"))
    return checks


def suite_qma2(samples, rng, p=0.5):
    restarts = max(4, samples // 25)
    yes = rd.qma2_hard_instance(rd.toy_accepting_verifier(), p=p, build_circuit=False)
    no = rd.qma2_hard_instance(rd.toy_rejecting_verifier(4), p=p, build_circuit=False)
    seed = int(rng.integers(2 ** 31))
    body = np.zeros(16)
    body[0] = 1.0
    planted = rd.planted_pair(body)
    got_yes = ce.max_clique_value(yes.channel, 2, restarts=restarts, seed=seed, initial=[np.column_stack(planted)]).value
    got_no = ce.max_clique_value(no.channel, 2, restarts=restarts, seed=seed).value
    return [Check("yes instance optimizer value >= c", got_yes, yes.promise.c, ">=", 1e-6, "optimized"),
            Check("no instance optimizer value <= s + 0.01", got_no, no.promise.s + 0.01, "<=", 0.0, "optimized")]


def random_hamiltonian(n_qubits, n_terms, rng, alpha, beta):
    terms = []
    for _ in range(n_terms):
        width = int(rng.integers(1, min(2, n_qubits) + 1))
        support = tuple(sorted(rng.choice(n_qubits, size=width, replace=False).tolist()))
        u = haar_unitary(2 ** width, rng)
        terms.append((u @ np.diag(rng.random(2 ** width)) @ u.conj().T, support))
    return rd.HamiltonianInstance(n_qubits, tuple(terms), alpha, beta)


def suite_localham(samples, rng):
    worst = 0.0
    for _ in range(max(1, samples // 20)):
        hm = random_hamiltonian(int(rng.integers(1, 4)), int(rng.integers(1, 4)), rng, 0.05, 0.5)
        inst = rd.local_ham_to_clique(hm)
        lam, vecs = hm.spectrum()
        for j in range(len(lam)):
            a, b = rd.planted_pair(vecs[:, j])
            obs = co.output_overlap(inst.channel, _pure(a), _pure(b))
            worst = max(worst, abs(obs - rd.local_ham_overlap(lam[j], hm.t)))
    return [Check("eigenstate pair overlap = (E/t)^2/2 + (1-E/t)^2", worst, 0.0, "==", 1e-10, "closed-form")]


def random_cnf(rng, n_vars, n_clauses, width=3):
    clauses = []
    for _ in range(n_clauses):
        vs = rng.choice(n_vars, size=min(width, n_vars), replace=False) + 1
        clauses.append(tuple(int(v) * (1 if rng.random() < 0.5 else -1) for v in vs))
    return cp.CNF(n_vars, tuple(clauses))


def suite_classical(samples, rng):
    mismatches = 0
    for _ in range(max(1, samples // 20)):
        cnf = random_cnf(rng, int(rng.integers(3, 7)), int(rng.integers(2, 12)))
        sat = cp.brute_force_sat(cnf)[0]
        v, x = cp.cnf_verifier(cnf), cp.cnf_instance_bits(cnf)
        mismatches += cp.has_k_clique(cp.np_reduce_clique(v, x), 2)[0] != sat
        mismatches += cp.has_k_is(cp.np_reduce_is(v, x), 2)[0] != sat
    yes_v = cp.threshold_verifier(1, [2, 0], 3)
    no_v = cp.threshold_verifier(1, [1, 1], 3)
    yes_c = cp.best_pair(cp.ma_reduce_clique(yes_v, ""), "clique")[0]
    no_c = cp.best_pair(cp.ma_reduce_clique(no_v, ""), "clique")[0]
    yes_i = cp.best_pair(cp.ma_reduce_is(yes_v, ""), "is")[0]
    no_i = cp.best_pair(cp.ma_reduce_is(no_v, ""), "is")[0]
    return [Check("NP reductions disagree with SAT", mismatches, 0, "==", 0, "exact"),
            Check("MA clique yes value", float(yes_c - Fraction(2, 3)), 0.0, "==", 0.0, "exact"),
            Check("MA clique no value", float(no_c - Fraction(1, 3)), 0.0, "==", 0.0, "exact"),
            Check("MA IS yes min collision <= 1/3", float(yes_i), 1 / 3, "<=", 0.0, "exact"),
            Check("MA IS no min collision", float(no_i - Fraction(4, 9)), 0.0, ">=", 0.0, "exact")]


def suite_k_to_2(samples, rng, k=3):
    bad = 0
    for _, f in cp.all_functions(2, 1):
        bad += cp.has_k_clique(f, k)[0] != cp.has_k_clique(cp.k_to_2_clique_det(f, k), 2)[0]
        bad += cp.has_k_is(f, k)[0] != cp.has_k_is(cp.k_to_2_is_det(f, k), 2)[0]
    # quantum planted instance: constant pure output, orthonormal body, k = 2
    weights = (0.3, 0.3, 0.4)
    phi = co.constant_channel(np.diag([1.0, 0.0]), 2)
    inst = rd.q_k_to_2(phi, 2, *weights)
    a, b = rd.planted_pair(np.kron([1, 0], [0, 1]))
    got = co.output_overlap(inst.channel, _pure(a), _pure(b))
    return [Check("deterministic k->2 mismatches over all f", bad, 0, "==", 0, "exact"),
            Check("planted value = exact block-sum value", got - inst.planted_value([1.0]), 0.0, "==", 1e-8,
                  "closed-form")]


def random_eb_channel(rng, in_dim, out_dim, n_outcomes):
    u = random_frame(in_dim * n_outcomes, in_dim, rng).reshape(n_outcomes, in_dim, in_dim)
    povm = np.einsum("nai,naj->nij", u.conj(), u)
    states = [random_density(out_dim, rng) for _ in range(n_outcomes)]
    return co.EBChannel(povm, states)


def suite_bell(samples, rng):
    worst = 0.0
    for _ in range(max(1, samples // 20)):
        d_in, d_out = int(rng.choice([2, 4])), int(rng.choice([2, 4]))
        ch = random_eb_channel(rng, d_in, d_out, int(rng.integers(2, 5)))
        form = co.bell_measurement_form(ch)
        worst = max(worst, frobenius_norm(form.operator() - co.swap_test_acceptance_operator(ch)))
    return [Check("Bell form reconstructs the acceptance operator", worst, 0.0, "==", 1e-8, "simulated")]


def suite_qis(samples, rng):
    worst = 0.0
    for _ in range(max(1, samples // 50)):
        circ = cm.random_circuit(2, 6, rng, max_width=3)
        ch = co.CircuitChannel(circ)
        f = random_frame(2 ** circ.in_count, 2, rng)
        proofs = [_pure(f[:, 0]), _pure(f[:, 1])]
        c = 1.0 - overlap(ch.apply_matrix(proofs[0]), ch.apply_matrix(proofs[1]))
        s = c * rng.random()
        p = ce.qis_weight(c, s)
        sim = ce.qmak_is_verifier(circ, proofs, p).accept_probability
        worst = max(worst, abs(sim - ce.qis_thresholds(c, s)[0]))
    proc = -np.inf
    for _ in range(samples):
        d = int(rng.integers(2, 9))
        k = int(rng.integers(1, d + 1))
        psi = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
        psi /= np.linalg.norm(psi, axis=0)
        iso = nearest_isometry(psi)
        gram = psi.conj().T @ psi
        proc = max(proc, np.linalg.norm(psi - iso) ** 2 - float(np.sum(np.abs(gram - np.eye(k)) ** 2)))
    return [Check("simulated acceptance = c' closed form", worst, 0.0, "==", 1e-9, "simulated"),
            Check("Procrustes distance^2 - off-diagonal Gram mass", proc, 0.0, "<=", 1e-9, "simulated")]


SUITES = {
    "norms": suite_norms,
    "swap-test": suite_swap_test,
    "direct-sum": suite_direct_sum,
    "separator": suite_separator,
    "algorithm-channel": suite_algorithm_channel,
    "stability-weight": suite_stability_weight,
    "qma2": suite_qma2,
    "localham": suite_localham,
    "classical": suite_classical,
    "k-to-2": suite_k_to_2,
    "bell": suite_bell,
    "qis": suite_qis,
}


def run_suite(name: str, samples: int = 1000, seed: int = 0) -> list[Check]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, sorted(SUITES).index(name)]))
    with override(max_qubits=16):
        return SUITES[name](samples, rng)
