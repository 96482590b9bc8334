"""Channel constructions behind the hardness reductions.

Block conventions
-----------------
* ``Q_⊥`` is a 3-dimensional output with basis ``|0>, |1>, |⊥>``; ``μ_Q`` is
  the maximally mixed state on the first two vectors.
* Multi-register inputs are ordered ``H^{⊗k} ⊗ K`` (copies first, the extra
  register last); outputs ``H ⊗ C^[k]`` and ``Q_⊥ ⊗ C^S`` put the label last.
* When a construction is also emitted as a circuit, ``Q_⊥`` is stored in two
  qubits (flag first) as ``|0> -> |00>``, ``|1> -> |01>``, ``|⊥> -> |10>``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag

from . import circuit_model as cm
from .channel_ops import (BlockSumChannel, Channel, CircuitChannel, EBChannel, KrausChannel,
                          compose_channels, compress_kraus, swap_test_acceptance_operator)
from .circuit_model import Circuit, Gate
from .config import settings
from .tensor_core import (DimensionError, ValidationError, as_matrix, decode_matrix, encode_matrix,
                          nearest_isometry)

BOTTOM = 2                     # index of |⊥> in Q_⊥
SEPARATOR_STABILITY_FACTOR = 10.0   # bound 10 k ε^(1/4)
QMA2_SEPARATOR_CONSTANT = 20.0      # 10k with k = 2
QMA2_SEPARATOR_EXPONENT = 0.25


def mu_q() -> np.ndarray:
    return np.diag([0.5, 0.5, 0.0]).astype(complex)


def bottom_state() -> np.ndarray:
    return np.diag([0.0, 0.0, 1.0]).astype(complex)


def _basis_proj(d: int, i: int) -> np.ndarray:
    e = np.zeros((d, d), dtype=complex)
    e[i, i] = 1.0
    return e


@dataclass(frozen=True)
class PromisePair:
    """Completeness/soundness thresholds ``0 <= s <= c <= 1`` with their provenance."""

    c: float
    s: float
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        tol = 1e-12
        if not (-tol <= self.s <= self.c + tol and self.c <= 1 + tol):
            raise ValueError(f"promise needs 0 <= s <= c <= 1, got c={self.c}, s={self.s}")

    @property
    def gap(self) -> float:
        return self.c - self.s

    def to_dict(self) -> dict:
        return {"c": self.c, "s": self.s, "gap": self.gap, "provenance": self.provenance}


@dataclass(eq=False)
class HardInstance:
    """A constructed channel with its promise, and optionally a circuit realising it.

    ``embedding`` maps the channel's output space isometrically into the
    circuit's output register, so ``evaluate(circuit, ρ) = V Φ(ρ) V†``.
    """

    channel: Channel
    promise: PromisePair
    circuit: Circuit | None = None
    embedding: np.ndarray | None = None
    parts: dict = field(default_factory=dict)

    def circuit_error(self, rho) -> float:
        """Max-entry deviation between the circuit and the embedded channel on ``rho``."""
        if self.circuit is None:
            raise ValueError("no circuit was built for this instance")
        v = self.embedding
        want = v @ self.channel.apply_matrix(as_matrix(rho)) @ v.conj().T
        got = cm.evaluate_matrix(self.circuit, as_matrix(rho))
        return float(np.max(np.abs(got - want)))


# index plumbing ---------------------------------------------------------------

def _partial_trace_kraus(dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Kraus operators of ``ρ ↦ Tr_{rest} ρ``; shape (d_rest, d_keep, D)."""
    dims = list(dims)
    rest = [i for i in range(len(dims)) if i not in keep]
    d_total = int(np.prod(dims))
    d_keep = int(np.prod([dims[i] for i in keep]))
    eye = np.eye(d_total, dtype=complex).reshape(dims + [d_total])
    t = eye.transpose(list(keep) + rest + [len(dims)])
    return t.reshape(d_keep, d_total // d_keep, d_total).transpose(1, 0, 2)


def _permute_subsystems(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary sending factor ``perm[i]`` of the input to position ``i``."""
    dims = list(dims)
    d = int(np.prod(dims))
    eye = np.eye(d, dtype=complex).reshape(dims + [d])
    return eye.transpose(list(perm) + [len(dims)]).reshape(d, d)


def embed_operator(op, positions: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """``op`` acting on the listed subsystems (in that order), identity elsewhere."""
    dims = list(dims)
    rest = [i for i in range(len(dims)) if i not in positions]
    d_rest = int(np.prod([dims[i] for i in rest])) if rest else 1
    full = np.kron(as_matrix(op), np.eye(d_rest))
    order = list(positions) + rest
    p = _permute_subsystems(dims, order)      # natural -> (positions, rest)
    return p.conj().T @ full @ p


def swap_subsystems(dims: Sequence[int], i: int, j: int) -> np.ndarray:
    perm = list(range(len(dims)))
    perm[i], perm[j] = perm[j], perm[i]
    return _permute_subsystems(dims, perm)


def _pairs(k: int) -> list[tuple[int, int]]:
    return list(combinations(range(k), 2))


# separator ------------------------------------------------------------------

def separator_channel(h_dim: int, k: int, k_dim: int = 2) -> KrausChannel:
    """``ρ ↦ (1/k) Σ_i ρ_i ⊗ |i><i|`` from ``H^{⊗k} ⊗ K`` to ``H ⊗ C^[k]``."""
    if k < 1 or h_dim < 1 or k_dim < 1:
        raise DimensionError("dimensions must be positive")
    dims = [h_dim] * k + [k_dim]
    if np.prod(dims) > 2 ** settings.max_qubits:
        raise DimensionError("separator input exceeds the configured qubit limit")
    ops = []
    for i in range(k):
        marg = _partial_trace_kraus(dims, [i])
        op = np.zeros((marg.shape[0], h_dim * k, marg.shape[2]), dtype=complex)
        op[:, i::k, :] = marg / math.sqrt(k)
        ops.append(op)
    return KrausChannel(np.concatenate(ops))


def separator_value(psi, phi, h_dim: int, k: int, k_dim: int = 2) -> float:
    """Output overlap ``(1/k²) Σ_i Tr(ρ_i σ_i)`` of the separator on two pure inputs."""
    a = _marginals(psi, h_dim, k, k_dim)
    b = _marginals(phi, h_dim, k, k_dim)
    return float(sum(np.real(np.vdot(x.T.conj(), y)) for x, y in zip(a, b)) / k ** 2)


def _as_tensor(vec, h_dim: int, k: int, k_dim: int) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    if v.size != h_dim ** k * k_dim:
        raise DimensionError(f"vector of size {v.size} does not match H^{k} ⊗ K")
    return v.reshape([h_dim] * k + [k_dim])


def _marginals(vec, h_dim: int, k: int, k_dim: int) -> list[np.ndarray]:
    t = _as_tensor(vec, h_dim, k, k_dim)
    out = []
    for i in range(k):
        m = np.moveaxis(t, i, 0).reshape(h_dim, -1)
        out.append(m @ m.conj().T)
    return out


def _contract_body(t: np.ndarray, body: Sequence[np.ndarray]) -> np.ndarray:
    for v in body:
        t = np.tensordot(v.conj(), t, axes=(0, 0))
    return t


def _kron_all(vs: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for v in vs:
        out = np.kron(out, v)
    return out


def _infidelity(a: np.ndarray, b: np.ndarray) -> float:
    """``1 - |<a|b>|²`` for unit-normalised a, b, via the residual norm (stable near 1)."""
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return min(1.0, float(np.linalg.norm(b - np.vdot(a, b) * a) ** 2))


def _product_infidelity(pairs) -> float:
    """``1 - Π_i |<a_i|b_i>|²`` without cancellation."""
    return float(-np.expm1(sum(np.log1p(-min(_infidelity(a, b), 1.0 - 1e-300)) for a, b in pairs)))


def _pure_trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return math.sqrt(_infidelity(a, b))


def _pure_frobenius_distance(a: np.ndarray, b: np.ndarray) -> float:
    return math.sqrt(2.0) * _pure_trace_distance(a, b)


@dataclass(frozen=True)
class StabilityReport:
    eps: float
    distance: float
    bound: float
    holds: bool
    approximants: tuple
    intermediate: dict


def _close_to_separable(vec, h_dim, k, k_dim):
    t = _as_tensor(vec, h_dim, k, k_dim)
    body = []
    for rho_i in _marginals(vec, h_dim, k, k_dim):
        lam, u = np.linalg.eigh(0.5 * (rho_i + rho_i.conj().T))
        body.append(u[:, -1])
    rest = _contract_body(t, body)
    nrm = np.linalg.norm(rest)
    extra = rest / nrm if nrm > 1e-15 else np.eye(k_dim, dtype=complex)[0]
    return body, extra


def separator_stability_check(psi, phi, h_dim: int, k: int, k_dim: int = 2,
                              eps: float | None = None) -> StabilityReport:
    """Build the separable approximants for a near-optimal orthogonal pair and measure them.

    Both states are first replaced by products of the top eigenvectors of
    their marginals (with the normalised leftover on ``K``); then the second
    state's body is replaced by the first's and its ``K`` part is
    orthogonalised against the first's.
    """
    psi = np.asarray(psi, dtype=complex) / np.linalg.norm(psi)
    phi = np.asarray(phi, dtype=complex) / np.linalg.norm(phi)
    if abs(np.vdot(psi, phi)) ** 2 > settings.orth:
        raise ValidationError("the pair must be orthogonal")
    value = separator_value(psi, phi, h_dim, k, k_dim)
    gap = 1.0 / k - value
    if eps is None:
        eps = max(gap, 0.0)
    elif gap > eps + 1e-12:
        raise ValueError(f"precondition violated: overlap {value} < 1/k - eps")
    ra, rb = _marginals(psi, h_dim, k, k_dim), _marginals(phi, h_dim, k, k_dim)
    eps_i = [1.0 - float(np.real(np.vdot(a.T.conj(), b))) for a, b in zip(ra, rb)]
    eps_bar = max(float(np.mean(eps_i)), 0.0)

    body_r, alpha = _close_to_separable(psi, h_dim, k, k_dim)
    body_s, phi_extra = _close_to_separable(phi, h_dim, k, k_dim)
    rho1 = _kron_all(body_r + [alpha])
    sig1 = _kron_all(body_s + [phi_extra])
    infid_body = _product_infidelity(zip(body_r, body_s))
    beta = phi_extra - np.vdot(alpha, phi_extra) * alpha
    if np.linalg.norm(beta) < 1e-12:
        # any unit vector orthogonal to alpha
        q, _ = np.linalg.qr(np.column_stack([alpha, np.eye(k_dim, dtype=complex)]))
        beta = q[:, 1]
    beta = beta / np.linalg.norm(beta)
    rho_t = rho1
    sig_t = _kron_all(body_r + [beta])
    distance = _pure_trace_distance(psi, rho_t) + _pure_trace_distance(phi, sig_t)
    bound = SEPARATOR_STABILITY_FACTOR * k * eps ** 0.25
    root = math.sqrt(k * eps_bar)
    inter = {
        "eps_bar": eps_bar,
        "rho_frobenius": _pure_frobenius_distance(psi, rho1), "rho_frobenius_bound": 2 * root,
        "sigma_frobenius": _pure_frobenius_distance(phi, sig1), "sigma_frobenius_bound": 2 * root,
        "body_frobenius": math.sqrt(2 * infid_body), "body_frobenius_bound": 6 * root,
    }
    slack = 1e-9
    holds = (distance <= bound + slack
             and inter["rho_frobenius"] <= inter["rho_frobenius_bound"] + slack
             and inter["sigma_frobenius"] <= inter["sigma_frobenius_bound"] + slack
             and inter["body_frobenius"] <= inter["body_frobenius_bound"] + slack)
    return StabilityReport(float(eps), distance, bound, holds, (rho_t, sig_t), inter)


def separator_circuit(m: int, k: int) -> Circuit:
    """Circuit for the separator on ``k`` registers of ``m`` qubits plus one extra qubit.

    A uniform coin over ``k`` values is loaded and dephased; controlled SWAPs
    bring register ``i`` to the front when the coin reads ``i``; everything but
    the front register and the coin is traced out.  Output: front register,
    then the coin.
    """
    if k < 2 or m < 1:
        raise ValueError("need k >= 2 registers of at least one qubit")
    n = k * m + 1
    w = max(1, math.ceil(math.log2(k)))
    coin = list(range(n, n + w))
    gates = [Gate.prepare(q) for q in coin]
    gates += cm.prepare_distribution_gates([1.0 / k] * k, coin)
    anc = n + w
    for q in coin:
        gates += [Gate.prepare(anc), Gate.unitary("CNOT", q, anc), Gate.trace_out(anc)]
    for i in range(1, k):
        bits = tuple(int(b) for b in format(i, f"0{w}b"))
        for q in range(m):
            gates.append(Gate("U", (q, i * m + q), name="SWAP", controls=tuple(coin), control_values=bits))
    for pos in range(k * m, m - 1, -1):
        gates.append(Gate.trace_out(pos))
    return Circuit(n, gates)


def separator_circuit_embedding(m: int, k: int) -> np.ndarray:
    """Isometry from ``H ⊗ C^[k]`` into the separator circuit's output register."""
    w = max(1, math.ceil(math.log2(k)))
    h = 2 ** m
    v = np.zeros((h * 2 ** w, h * k), dtype=complex)
    for a in range(h):
        for i in range(k):
            v[a * 2 ** w + i, a * k + i] = 1.0
    return v


# algorithm channel ----------------------------------------------------------

def algorithm_channel(phi: Channel, extra_dim: int = 2) -> EBChannel:
    """``ρ ↦ <0|Φ(Tr_Q ρ)|0> μ_Q + <1|Φ(Tr_Q ρ)|1> |⊥><⊥|`` on ``H ⊗ Q`` into ``Q_⊥``."""
    if phi.out_dim != 2:
        raise DimensionError(f"the verifier channel must output one qubit, got dimension {phi.out_dim}")
    reject = phi.adjoint_matrix(_basis_proj(2, 0))
    accept = phi.adjoint_matrix(_basis_proj(2, 1))
    eye = np.eye(extra_dim)
    return EBChannel([np.kron(reject, eye), np.kron(accept, eye)], [mu_q(), bottom_state()])


def algorithm_overlap(q: float, q_prime: float | None = None) -> float:
    """Output overlap of two inputs accepted with probabilities ``q`` and ``q'``."""
    q_prime = q if q_prime is None else q_prime
    return (1 - q) * (1 - q_prime) / 2 + q * q_prime


def algorithm_circuit(verifier: Circuit) -> Circuit:
    """Circuit for :func:`algorithm_channel` of a one-qubit-output verifier circuit."""
    if verifier.out_count != 1:
        raise ValueError("the verifier circuit must output exactly one qubit")
    n = verifier.in_count
    gates = list(verifier.gates)
    # live wires now: [accept, extra]
    gates += [Gate.trace_out(1)]
    gates += [Gate.prepare(1), Gate.prepare(2),
              Gate("U", (1,), name="H", controls=(0,), control_values=(0,)),
              Gate.unitary("CNOT", 1, 2), Gate.trace_out(2),
              Gate.prepare(2), Gate.unitary("CNOT", 0, 2), Gate.trace_out(2)]
    return Circuit(n + 1, gates)


def q_bottom_embedding() -> np.ndarray:
    """Isometry from ``Q_⊥`` into two qubits (flag first)."""
    v = np.zeros((4, 3), dtype=complex)
    v[0, 0] = v[1, 1] = v[2, BOTTOM] = 1.0
    return v


# weights ----------------------------------------------------------------------

def stability_weight(c_const: float, alpha_exp: float, eta: float) -> float:
    """Weight ``p`` with ``(1-p)² C ε^α - p² ε <= η`` for every ``ε >= 0``."""
    if not 0 < alpha_exp < 1:
        raise ValueError("alpha_exp must lie in (0, 1)")
    if c_const <= 0 or eta <= 0:
        raise ValueError("C and eta must be positive")
    a = alpha_exp
    denom = c_const ** (1 / (1 - a)) * (a ** (a / (1 - a)) - a ** (1 / (1 - a)))
    return 1.0 / (1.0 + (eta / denom) ** ((1 - a) / 2))


def stability_excess(p: float, c_const: float, alpha_exp: float, eps) -> np.ndarray:
    eps = np.asarray(eps, dtype=float)
    return (1 - p) ** 2 * c_const * eps ** alpha_exp - p ** 2 * eps


def default_eta(p: float) -> float:
    """Half of the constant gap ``3(1-p)²/32``."""
    return (1 - p) ** 2 * 3 / 64


# hardness instances -----------------------------------------------------------

def _check_verifier(verifier: Circuit, k: int) -> int:
    if verifier.out_count != 1:
        raise ValueError("the verifier must output one qubit")
    if verifier.in_count % k:
        raise ValueError(f"verifier inputs ({verifier.in_count}) do not split into {k} proofs")
    return verifier.in_count // k


def _clique_hard_instance(verifier: Circuit, k: int, p: float, eta: float | None,
                          build_circuit: bool) -> HardInstance:
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    m = _check_verifier(verifier, k)
    eta = default_eta(p) if eta is None else eta
    sep = separator_channel(2 ** m, k, 2)
    psi = algorithm_channel(CircuitChannel(verifier))
    channel = BlockSumChannel([sep, psi], [p, 1 - p])
    c = p ** 2 / k + (1 - p) ** 2 * 19 / 32
    s = p ** 2 / k + (1 - p) ** 2 / 2 + eta
    prov = {"p": p, "eta": eta, "k": k, "proof_qubits": m, "stability_constant": 10.0 * k,
            "stability_exponent": QMA2_SEPARATOR_EXPONENT,
            "stability_weight_for_eta": stability_weight(10.0 * k, QMA2_SEPARATOR_EXPONENT, eta) if eta > 0 else None,
            "c": "p^2/k + 19(1-p)^2/32", "s": "p^2/k + (1-p)^2/2 + eta"}
    if s > c:
        prov["note"] = "eta exceeds the gap; soundness clipped to completeness"
        s = c
    inst = HardInstance(channel, PromisePair(c, s, prov), parts={"separator": sep, "algorithm": psi})
    if build_circuit:
        c_sep, c_psi = separator_circuit(m, k), algorithm_circuit(verifier)
        inst.circuit = cm.direct_sum(c_sep, c_psi, p)
        inner = block_diag(separator_circuit_embedding(m, k), q_bottom_embedding())
        inst.embedding = cm.direct_sum_embedding(c_sep.out_count, c_psi.out_count) @ inner
    return inst


def qma2_hard_instance(verifier: Circuit, p: float = 0.5, eta: float | None = None,
                       build_circuit: bool = True) -> HardInstance:
    """``p Φ₁ ⊕ (1-p) Ψ`` for a two-proof verifier on ``2m`` qubits (input ``2m+1`` qubits)."""
    return _clique_hard_instance(verifier, 2, p, eta, build_circuit)


def qmak_hard_instance(verifier: Circuit, k: int, p: float = 0.5, eta: float | None = None,
                       build_circuit: bool = True) -> HardInstance:
    """Same family with ``k`` proofs; completeness ``p²/k + 19(1-p)²/32``."""
    if k < 2:
        raise ValueError("k must be at least 2")
    return _clique_hard_instance(verifier, k, p, eta, build_circuit)


def planted_pair(body: np.ndarray, extra_dim: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """``(body ⊗ |0>, body ⊗ |1>)``."""
    e = np.eye(extra_dim, dtype=complex)
    body = np.asarray(body, dtype=complex)
    return np.kron(body, e[0]), np.kron(body, e[1])


def toy_accepting_verifier(m: int = 2) -> Circuit:
    """Two-proof verifier on ``2m`` qubits accepting ``|0..0>`` with certainty (m = 2 only)."""
    if m != 2:
        raise ValueError("the toy accepting verifier is defined for m = 2")
    n = 4
    gates = [Gate.unitary("X", q) for q in range(n)]
    gates += [Gate.prepare(4), Gate.prepare(5), Gate.prepare(6)]
    gates += [Gate.unitary("CCX", 0, 1, 4), Gate.unitary("CCX", 2, 3, 5), Gate.unitary("CCX", 4, 5, 6)]
    for q in range(5, -1, -1):
        gates.append(Gate.trace_out(q))
    return Circuit(n, gates)


def toy_rejecting_verifier(n_inputs: int) -> Circuit:
    """Verifier that outputs |0> (reject) on every input."""
    gates = [Gate.prepare(0)] + [Gate.trace_out(1) for _ in range(n_inputs)]
    return Circuit(n_inputs, gates)


# orthogonaliser and pair tester ---------------------------------------------------

def _pair_label_states(n_pairs: int):
    states_mu, states_bot = [], []
    for s in range(n_pairs):
        lab = _basis_proj(n_pairs, s)
        states_mu.append(np.kron(mu_q(), lab))
        states_bot.append(np.kron(bottom_state(), lab))
    return states_mu, states_bot


def orthogonaliser_channel(h_dim: int, k: int, extra_dim: int = 2) -> EBChannel:
    """``E_(i,j) (Tr[Π ρ_ij] μ_Q + Tr[(1-Π) ρ_ij] |⊥><⊥|) ⊗ |ij><ij|`` on ``H^{⊗k} ⊗ K``."""
    if k < 2:
        raise ValueError("k must be at least 2")
    dims = [h_dim] * k + [extra_dim]
    d = int(np.prod(dims))
    if d > 2 ** settings.max_qubits:
        raise DimensionError("orthogonaliser input exceeds the configured qubit limit")
    pairs = _pairs(k)
    mu, bot = _pair_label_states(len(pairs))
    povm, states = [], []
    for s, (i, j) in enumerate(pairs):
        sym = 0.5 * (np.eye(d) + swap_subsystems(dims, i, j))
        povm += [sym / len(pairs), (np.eye(d) - sym) / len(pairs)]
        states += [mu[s], bot[s]]
    return EBChannel(povm, states)


def orthogonaliser_value(vectors: Sequence[np.ndarray]) -> float:
    """Closed-form output overlap of the orthogonaliser on ``(body ⊗ |α>, body ⊗ |β>)``.

    With ``x = |<ψ_i|ψ_j>|²`` each pair contributes ``(1+x)²/8 + (1-x)²/4``.
    """
    k = len(vectors)
    pairs = _pairs(k)
    tot = 0.0
    for i, j in pairs:
        x = abs(np.vdot(vectors[i], vectors[j])) ** 2
        tot += (1 + x) ** 2 / 8 + (1 - x) ** 2 / 4
    return tot / len(pairs) ** 2


def orthogonaliser_stability_check(vectors: Sequence[np.ndarray]) -> StabilityReport:
    """Procrustes step: replace the body frame by its nearest isometry and measure the move.

    ``eps`` is the deficit of ``E[½x² + (1-x)²]/(2k(k-1))`` from ``1/(2k(k-1))``,
    ``x = |<ψ_i|ψ_j>|²``; the bound is ``4k√k(k-1)√eps``.
    """
    vs = [np.asarray(v, dtype=complex) / np.linalg.norm(v) for v in vectors]
    k = len(vs)
    frame = np.column_stack(vs)
    if frame.shape[0] < k:
        raise DimensionError(f"{k} orthonormal vectors do not fit in dimension {frame.shape[0]}")
    xs = [abs(np.vdot(vs[i], vs[j])) ** 2 for i, j in _pairs(k)]
    norm = 1.0 / (2 * k * (k - 1))
    eps = max(0.0, norm - norm * float(np.mean([0.5 * x * x + (1 - x) ** 2 for x in xs])))
    iso = nearest_isometry(frame)
    distance = 2.0 * math.sqrt(_product_infidelity((frame[:, i], iso[:, i]) for i in range(k)))
    bound = 4 * k * math.sqrt(k) * (k - 1) * math.sqrt(eps)
    gram_off = float(np.sum(np.abs(frame.conj().T @ frame - np.eye(k)) ** 2))
    procrustes = float(np.linalg.norm(frame - iso) ** 2)
    inter = {"mean_overlap": float(np.mean(xs)), "mean_overlap_bound": 4 * k * (k - 1) * eps,
             "procrustes_sq": procrustes, "gram_offdiag_sq": gram_off,
             "gram_bound": 4 * k ** 2 * (k - 1) ** 2 * eps}
    slack = 1e-9
    holds = (distance <= bound + slack and procrustes <= gram_off + slack
             and inter["mean_overlap"] <= inter["mean_overlap_bound"] + slack
             and gram_off <= inter["gram_bound"] + slack)
    return StabilityReport(eps, distance, bound, holds, tuple(iso.T), inter)


def pair_test_channel(phi: Channel, k: int, extra_dim: int = 2) -> EBChannel:
    """``E_(i,j) (Tr[Π_K (Φ⊗Φ)(ρ_ij)] |⊥><⊥| + Tr[(1-Π_K)(Φ⊗Φ)(ρ_ij)] μ_Q) ⊗ |ij><ij|``."""
    if k < 2:
        raise ValueError("k must be at least 2")
    h = phi.in_dim
    dims = [h] * k + [extra_dim]
    d = int(np.prod(dims))
    if d > 2 ** settings.max_qubits:
        raise DimensionError("pair-tester input exceeds the configured qubit limit")
    acc = swap_test_acceptance_operator(phi)
    pairs = _pairs(k)
    mu, bot = _pair_label_states(len(pairs))
    povm, states = [], []
    for s, (i, j) in enumerate(pairs):
        m = embed_operator(acc, [i, j], dims)
        povm += [m / len(pairs), (np.eye(d) - m) / len(pairs)]
        states += [bot[s], mu[s]]
    return EBChannel(povm, states)


def pair_test_term(x: float) -> float:
    """Per-pair overlap ``(½ + x/2)² + ½(½ - x/2)²`` of the pair tester at output overlap ``x``."""
    return (0.5 + x / 2) ** 2 + 0.5 * (0.5 - x / 2) ** 2


@dataclass(eq=False)
class KToTwoInstance:
    channel: BlockSumChannel
    k: int
    weights: tuple

    def alpha_prime(self, alpha: float) -> float:
        p1, p2, p3 = self.weights
        k = self.k
        return p1 ** 2 / k + (p2 ** 2 + p3 ** 2 * (1.5 + alpha)) / (2 * k * (k - 1))

    def beta_prime(self, beta: float) -> float:
        p1, p2, p3 = self.weights
        k = self.k
        return p1 ** 2 / k + (p2 ** 2 + p3 ** 2 * (1.5 + 2.5 * beta)) / (2 * k * (k - 1))

    def planted_value(self, output_overlaps: Sequence[float]) -> float:
        """Exact overlap of the planted pair for an orthonormal body with the given pair overlaps."""
        p1, p2, p3 = self.weights
        k = self.k
        n_pairs = k * (k - 1) // 2
        third = sum(pair_test_term(x) for x in output_overlaps) / n_pairs ** 2
        return p1 ** 2 / k + p2 ** 2 * 3 / (8 * n_pairs) + p3 ** 2 * third


def q_k_to_2(phi: Channel, k: int, p1: float, p2: float, p3: float, extra_dim: int = 2) -> KToTwoInstance:
    """``p1 Φ₁ ⊕ p2 Φ₂ ⊕ p3 Φ₃`` with k-fold copies of Φ's input plus an extra register."""
    w = (p1, p2, p3)
    if min(w) < 0 or abs(sum(w) - 1) > 1e-12:
        raise ValueError("weights must be non-negative and sum to 1")
    h = phi.in_dim
    blocks = [separator_channel(h, k, extra_dim), orthogonaliser_channel(h, k, extra_dim),
              pair_test_channel(phi, k, extra_dim)]
    return KToTwoInstance(BlockSumChannel(blocks, list(w)), k, w)


# local Hamiltonian --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HamiltonianInstance:
    """``H = Σ_i H_i`` on ``n_qubits``; each term is (matrix, support qubits)."""

    n_qubits: int
    terms: tuple
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.terms:
            raise ValidationError("a Hamiltonian needs at least one term")
        fixed = []
        for idx, (mat, support) in enumerate(self.terms):
            mat = as_matrix(mat)
            support = tuple(int(q) for q in support)
            if mat.shape != (2 ** len(support),) * 2:
                raise ValidationError(f"term {idx}: matrix shape {mat.shape} does not match support {support}")
            if len(set(support)) != len(support) or any(not 0 <= q < self.n_qubits for q in support):
                raise ValidationError(f"term {idx}: bad support {support}")
            if np.max(np.abs(mat - mat.conj().T)) > 1e-10:
                raise ValidationError(f"term {idx} is not Hermitian")
            lam = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
            if lam[0] < -1e-10 or lam[-1] > 1 + 1e-10:
                raise ValidationError(f"term {idx} violates 0 <= H_i <= Id (spectrum [{lam[0]:.3g}, {lam[-1]:.3g}])")
            fixed.append((mat, support))
        object.__setattr__(self, "terms", tuple(fixed))
        if not self.beta > 4 * self.alpha:
            raise ValidationError(f"need beta > 4 alpha, got alpha={self.alpha}, beta={self.beta}")

    @property
    def t(self) -> int:
        return len(self.terms)

    def term_operator(self, i: int) -> np.ndarray:
        mat, support = self.terms[i]
        return embed_operator(mat, list(support), [2] * self.n_qubits)

    def operator(self) -> np.ndarray:
        return sum(self.term_operator(i) for i in range(self.t))

    def spectrum(self):
        return np.linalg.eigh(self.operator())

    def ground_energy(self) -> float:
        return float(np.linalg.eigvalsh(self.operator())[0])

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "alpha": self.alpha, "beta": self.beta,
                "terms": [{"matrix": encode_matrix(m), "support": list(s)} for m, s in self.terms]}

    @classmethod
    def from_dict(cls, doc: dict) -> "HamiltonianInstance":
        try:
            terms = tuple((decode_matrix(t["matrix"]), tuple(t["support"])) for t in doc["terms"])
            support_max = max((q for _, s in terms for q in s), default=-1)
            n = int(doc.get("n_qubits", support_max + 1))
            return cls(n, terms, float(doc["alpha"]), float(doc["beta"]))
        except KeyError as exc:
            raise ValidationError(f"Hamiltonian file is missing field {exc}") from None


def load_hamiltonian(path) -> HamiltonianInstance:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if isinstance(doc, list):
        raise ValidationError("expected an object with 'terms', 'alpha' and 'beta'")
    return HamiltonianInstance.from_dict(doc)


def local_ham_to_clique(hm: HamiltonianInstance) -> HardInstance:
    """EB channel ``Tr[(H/t ⊗ 1)ρ] μ_Q + Tr[((1 - H/t) ⊗ 1)ρ] |⊥><⊥|`` on ``n + 1`` qubits."""
    t = hm.t
    eye2 = np.eye(2)
    povm, states = [], []
    for i in range(t):
        h = hm.term_operator(i)
        povm += [np.kron(h, eye2) / t, np.kron(np.eye(h.shape[0]) - h, eye2) / t]
        states += [mu_q(), bottom_state()]
    channel = EBChannel(povm, states)
    prov = {"t": t, "alpha": hm.alpha, "beta": hm.beta, "c": "1 - 2 alpha/t", "s": "1 - beta/(2t)",
            "ignored_qubit": hm.n_qubits}
    return HardInstance(channel, PromisePair(1 - 2 * hm.alpha / t, 1 - hm.beta / (2 * t), prov))


def local_ham_overlap(energy: float, t: int) -> float:
    """Overlap of ``(ψ⊗|0>, ψ⊗|1>)`` for a state of energy ``E``: ``½(E/t)² + (1-E/t)²``."""
    e = energy / t
    return 0.5 * e * e + (1 - e) ** 2


# alternate construction --------------------------------------------------------

def alt_qma2_channel(v_unitary, m: int, workspace: int) -> KrausChannel:
    """Channel from ``G ⊗ C²`` (``2m + workspace`` qubits) to one proof register ``H``.

    Steps: trace the last qubit; apply ``V†`` to ``|1><1| ⊗ ρ_G``; measure
    the workspace and replace the state by ``μ_HH`` unless it reads ``0^k``;
    trace the first copy of ``H``.
    """
    v = as_matrix(v_unitary)
    n = 2 * m + workspace
    if v.shape != (2 ** n, 2 ** n):
        raise DimensionError(f"V must act on 2m + k = {n} qubits")
    if np.max(np.abs(v.conj().T @ v - np.eye(2 ** n))) > 1e-9:
        raise ValidationError("V is not unitary")
    d_g, d_w, d_h = 2 ** (n - 1), 2 ** workspace, 2 ** m
    d_hh = d_h * d_h
    # 1. trace the last qubit
    e2 = np.eye(2)
    step1 = np.stack([np.kron(np.eye(d_g), e2[b][None, :]) for b in range(2)])
    # 2. V† (|1> ⊗ ·)
    step2 = v.conj().T[:, d_g:][None]
    # 3. workspace instrument
    keep = np.zeros((d_hh, d_hh * d_w), dtype=complex)
    keep[np.arange(d_hh), np.arange(d_hh) * d_w] = 1.0
    fail_cols = [j for j in range(d_hh * d_w) if j % d_w]
    fail = np.zeros((d_hh * len(fail_cols), d_hh, d_hh * d_w), dtype=complex)
    for r, j in enumerate(fail_cols):
        for a in range(d_hh):
            fail[r * d_hh + a, a, j] = 1.0 / math.sqrt(d_hh)
    step3 = np.concatenate([keep[None], fail]) if fail_cols else keep[None]
    # 4. trace the first H
    step4 = _partial_trace_kraus([d_h, d_h], [1])
    ch = KrausChannel(step1, check=False)
    for ops in (step2, compress_kraus(step3), step4):
        ch = compose_channels(ch, KrausChannel(ops, check=False))
    return KrausChannel(ch.kraus())


def alt_acceptance(v_unitary, psi, phi, workspace: int) -> float:
    """``||(<1| ⊗ 1) V |ψ>|φ>|0^k>||²``."""
    v = as_matrix(v_unitary)
    w = np.zeros(2 ** workspace)
    w[0] = 1.0
    out = v @ np.kron(np.kron(psi, phi), w)
    return float(np.sum(np.abs(out[out.size // 2:]) ** 2))


def alt_qma2_instance(v_unitary, m: int, workspace: int, c: float, s: float) -> HardInstance:
    """The alternate channel with thresholds ``1 - 2√(2-2c)`` and ``s + 2^-m``."""
    channel = alt_qma2_channel(v_unitary, m, workspace)
    c_new = max(0.0, 1 - 2 * math.sqrt(max(0.0, 2 - 2 * c)))
    s_new = s + 2.0 ** (-m)
    prov = {"c_verifier": c, "s_verifier": s, "m": m, "workspace": workspace,
            "c": "1 - 2 sqrt(2 - 2c)", "s": "s + 2^-m", "linear_c": 4 * (c - 7 / 8)}
    if s_new > c_new:
        raise ValueError(f"no gap at these parameters (c'={c_new:.4g}, s'={s_new:.4g})")
    return HardInstance(channel, PromisePair(c_new, s_new, prov))
