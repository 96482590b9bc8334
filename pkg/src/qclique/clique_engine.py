"""Clique and independent-set values of channels.

For orthogonal inputs ρ₁..ρ_k the *tuple value* is the average pairwise
output overlap ``2/(k(k-1)) Σ_{i<j} Tr[Φ(ρᵢ)Φ(ρⱼ)]``.  Large values are
cliques, small values independent sets.

:func:`max_clique_value` / :func:`min_is_value` run alternating coordinate
ascent (descent) over orthogonal pure frames.  Fixing all states but one,
the objective is linear, ``Tr(ρᵢ Mᵢ)`` with ``Mᵢ = Σ_{j≠i} Φ†(Φ(ρⱼ))``, so the
best replacement orthogonal to the others is an extreme eigenvector of ``Mᵢ``
compressed to their orthocomplement.  Each sweep is followed by one joint
Riemannian gradient step, which matters when k is close to the dimension
and single-state moves are frozen.  The results are bounds, never certified
optima.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from . import circuit_model as cm
from .channel_ops import Channel, CircuitChannel
from .config import settings
from .tensor_core import (DensityOperator, DimensionError, PureState, as_matrix, decode_matrix,
                          decode_vector, encode_matrix, encode_vector, overlap, random_frame)

DEFAULT_RESTARTS = 64
DEFAULT_ITERATIONS = 200
STEP_TOLERANCE = 1e-10


class CertificateError(ValueError):
    """Certificate states are not mutually orthogonal (or have the wrong shape)."""


def _as_density(x) -> np.ndarray:
    if isinstance(x, PureState):
        v = x.amplitudes
        return np.outer(v, v.conj())
    m = as_matrix(x)
    if m.ndim == 1:
        return np.outer(m, m.conj())
    return m


def _pair_average(outs: Sequence[np.ndarray]) -> float:
    k = len(outs)
    total = sum(overlap(outs[i], outs[j]) for i, j in combinations(range(k), 2))
    return 2.0 * total / (k * (k - 1))


def check_orthogonal(states: Sequence[np.ndarray], tol: float | None = None) -> None:
    tol = settings.orth if tol is None else tol
    for i, j in combinations(range(len(states)), 2):
        ov = overlap(states[i], states[j])
        if ov > tol:
            raise CertificateError(f"states {i} and {j} overlap by {ov:.3e} (> {tol:.1e})")


def tuple_value(channel: Channel, states: Sequence) -> float:
    """Average pairwise output overlap of k mutually orthogonal states."""
    rhos = [_as_density(s) for s in states]
    if len(rhos) < 2:
        raise ValueError("need at least two states")
    for r in rhos:
        if r.shape != (channel.in_dim, channel.in_dim):
            raise DimensionError(f"state of dimension {r.shape[0]} for channel input {channel.in_dim}")
    check_orthogonal(rhos)
    return _pair_average([channel.apply_matrix(r) for r in rhos])


@dataclass(frozen=True, eq=False)
class CliqueCertificate:
    states: tuple
    value: float
    kind: str
    vectors: tuple | None = None
    seed: int | None = None
    budget: tuple | None = None
    history: tuple = field(default=(), repr=False)

    @property
    def k(self) -> int:
        return len(self.states)

    def densities(self) -> list[DensityOperator]:
        return [DensityOperator(s, check=False) for s in self.states]

    def revalidate(self, channel: Channel, tol: float = 1e-9) -> None:
        v = tuple_value(channel, self.states)
        if abs(v - self.value) > tol:
            raise CertificateError(f"stored value {self.value} differs from recomputed {v}")

    def to_dict(self) -> dict:
        if self.vectors is not None:
            states = [{"amplitudes": encode_vector(v)} for v in self.vectors]
        else:
            states = [{"matrix": encode_matrix(s)} for s in self.states]
        return {"kind": self.kind, "value": self.value, "k": self.k, "seed": self.seed,
                "budget": list(self.budget) if self.budget else None, "states": states}

    @classmethod
    def from_dict(cls, doc: dict) -> "CliqueCertificate":
        vecs, mats = [], []
        for s in doc["states"]:
            if "amplitudes" in s:
                v = decode_vector(s["amplitudes"])
                vecs.append(v)
                mats.append(np.outer(v, v.conj()))
            else:
                mats.append(decode_matrix(s["matrix"]))
        vectors = tuple(vecs) if len(vecs) == len(mats) else None
        budget = tuple(doc["budget"]) if doc.get("budget") else None
        return cls(tuple(mats), float(doc["value"]), doc["kind"], vectors, doc.get("seed"), budget)


def certificate_from_vectors(channel: Channel, vectors, kind: str = "clique", **meta) -> CliqueCertificate:
    vecs = tuple(np.asarray(v, dtype=complex) for v in vectors)
    states = tuple(np.outer(v, v.conj()) for v in vecs)
    return CliqueCertificate(states, tuple_value(channel, states), kind, vecs, **meta)


# alternating ascent ---------------------------------------------------------

def _complement_basis(others: np.ndarray, d: int) -> np.ndarray:
    if others.shape[1] == 0:
        return np.eye(d, dtype=complex)
    q, _ = np.linalg.qr(others, mode="complete")
    return q[:, others.shape[1]:]


def _extreme_vector(h: np.ndarray, prev: np.ndarray, maximize: bool) -> np.ndarray:
    lam, vecs = np.linalg.eigh(0.5 * (h + h.conj().T))
    if not maximize:
        lam, vecs = -lam[::-1], vecs[:, ::-1]
    top = lam[-1]
    scale = max(1.0, abs(top))
    tied = vecs[:, lam >= top - 1e-12 * scale]
    if tied.shape[1] > 1:
        proj = tied @ (tied.conj().T @ prev)
        nrm = np.linalg.norm(proj)
        if nrm > 1e-8:
            return proj / nrm
    return vecs[:, -1]


def _frame_value(channel: Channel, frame: np.ndarray):
    outs = [channel.apply_pure(frame[:, i]) for i in range(frame.shape[1])]
    return _pair_average(outs), outs


def _gradient_step(channel: Channel, frame: np.ndarray, outs, value: float, maximize: bool):
    """One Armijo-backtracked Riemannian gradient step on the Stiefel manifold.

    Returns the new (frame, outs, value); the frame is unchanged when no
    step improves the objective, so the sequence of values is monotone.
    """
    k = frame.shape[1]
    adj = [channel.adjoint_matrix(o) for o in outs]
    total = sum(adj)
    g = np.stack([(total - adj[i]) @ frame[:, i] for i in range(k)], axis=1)
    g *= 4.0 / (k * (k - 1))
    if not maximize:
        g = -g
    herm = frame.conj().T @ g
    grad = g - frame @ (0.5 * (herm + herm.conj().T))
    gnorm2 = float(np.vdot(grad, grad).real)
    if gnorm2 < 1e-24:
        return frame, outs, value
    def trial(t):
        q, r = np.linalg.qr(frame + t * grad)
        q = q * np.sign(np.diag(r).real + (np.diag(r).real == 0))
        cand, cand_outs = _frame_value(channel, q)
        return q, cand_outs, cand, (cand - value if maximize else value - cand)

    t = 1.0
    for _ in range(30):
        q, cand_outs, cand, gain = trial(t)
        if gain >= 1e-4 * t * gnorm2:
            break
        t *= 0.5
    else:
        return frame, outs, value
    # refine the accepted step in both directions: a unit step can overshoot
    # across a quadratic minimum, and flat directions want longer steps
    for factor in (0.5, 2.0):
        for _ in range(20):
            q2, outs2, cand2, gain2 = trial(factor * t)
            if gain2 <= gain:
                break
            q, cand_outs, cand, gain, t = q2, outs2, cand2, gain2, factor * t
    return q, cand_outs, cand


def _local_search(channel: Channel, frame: np.ndarray, iterations: int, maximize: bool,
                  tol: float = STEP_TOLERANCE, record: bool = False):
    """Alternate exact single-state updates with a joint gradient step until the gain stalls."""
    d, k = frame.shape
    vecs = [frame[:, i].copy() for i in range(k)]
    outs = [channel.apply_pure(v) for v in vecs]
    value = _pair_average(outs)
    history = [value] if record else []
    for _ in range(iterations):
        before = value
        for i in range(k):
            m = sum(channel.adjoint_matrix(outs[j]) for j in range(k) if j != i)
            others = np.stack([vecs[j] for j in range(k) if j != i], axis=1)
            q = _complement_basis(others, d)
            h = q.conj().T @ m @ q
            y = _extreme_vector(h, q.conj().T @ vecs[i], maximize)
            v = q @ y
            v = v / np.linalg.norm(v)
            new_out = channel.apply_pure(v)
            trial = outs[:i] + [new_out] + outs[i + 1:]
            new_value = _pair_average(trial)
            # keep the old state if round-off would make the exact update a loss
            if (new_value >= value) if maximize else (new_value <= value):
                vecs[i], outs, value = v, trial, new_value
            if record:
                history.append(value)
        f, outs, value = _gradient_step(channel, np.stack(vecs, axis=1), outs, value, maximize)
        vecs = [f[:, i].copy() for i in range(k)]
        if record:
            history.append(value)
        if abs(value - before) < tol:
            break
    return value, vecs, history


def _optimize(channel: Channel, k: int, kind: str, restarts: int, iterations: int, seed: int,
              threads: int, initial: Sequence[np.ndarray], record: bool) -> CliqueCertificate:
    if k < 2:
        raise ValueError("k must be at least 2")
    d = channel.in_dim
    if k > d:
        raise DimensionError(f"cannot fit {k} orthogonal states in dimension {d}")
    maximize = kind == "clique"
    children = np.random.SeedSequence(seed).spawn(restarts)
    frames = [np.asarray(f, dtype=complex) for f in initial]
    frames += [random_frame(d, k, np.random.default_rng(c)) for c in children]

    def run(frame):
        return _local_search(channel, frame, iterations, maximize, record=record)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, frames))
    else:
        results = [run(f) for f in frames]
    # ties resolve to the earliest start so results are reproducible
    sign = -1.0 if maximize else 1.0
    best = min(range(len(results)), key=lambda i: (sign * results[i][0], i))
    value, vecs, history = results[best]
    vecs = tuple(vecs)
    states = tuple(np.outer(v, v.conj()) for v in vecs)
    check_orthogonal(states)
    return CliqueCertificate(states, _pair_average([channel.apply_pure(v) for v in vecs]), kind,
                             vecs, seed, (restarts, iterations), tuple(history))


def max_clique_value(channel: Channel, k: int = 2, restarts: int = DEFAULT_RESTARTS,
                     iterations: int = DEFAULT_ITERATIONS, seed: int = 0, threads: int = 1,
                     initial: Sequence[np.ndarray] = (), record_history: bool = False) -> CliqueCertificate:
    """Best clique tuple found by seeded alternating ascent (a lower bound on the maximum)."""
    return _optimize(channel, k, "clique", restarts, iterations, seed, threads, initial, record_history)


def min_is_value(channel: Channel, k: int = 2, restarts: int = DEFAULT_RESTARTS,
                 iterations: int = DEFAULT_ITERATIONS, seed: int = 0, threads: int = 1,
                 initial: Sequence[np.ndarray] = (), record_history: bool = False) -> CliqueCertificate:
    """Lowest average overlap found by alternating descent (an upper bound on the minimum)."""
    return _optimize(channel, k, "independent_set", restarts, iterations, seed, threads, initial, record_history)


def purify_certificate(channel: Channel, states: Sequence, maximize: bool = True) -> list[np.ndarray]:
    """Replace each state by the best pure state inside its support, one at a time."""
    rhos = [_as_density(s) for s in states]
    check_orthogonal(rhos)
    vecs: list[np.ndarray] = []
    outs = [channel.apply_matrix(r) for r in rhos]
    for i, r in enumerate(rhos):
        lam, basis = np.linalg.eigh(0.5 * (r + r.conj().T))
        support = basis[:, lam > 1e-10]
        m = sum(channel.adjoint_matrix(outs[j]) for j in range(len(rhos)) if j != i)
        h = support.conj().T @ m @ support
        w, y = np.linalg.eigh(0.5 * (h + h.conj().T))
        v = support @ (y[:, -1] if maximize else y[:, 0])
        vecs.append(v)
        rhos[i] = np.outer(v, v.conj())
        outs[i] = channel.apply_pure(v)
    return vecs


# brute force ----------------------------------------------------------------

@dataclass(frozen=True)
class BruteForceResult:
    max: float
    min: float
    resolution: float
    max_pair: tuple
    min_pair: tuple
    points: int


def _hyperspherical(params: np.ndarray, d: int) -> np.ndarray:
    """Unit vectors (first amplitude real, non-negative) from angles; ``params`` has shape (N, 2(d-1))."""
    theta, phi = params[:, : d - 1], params[:, d - 1:]
    n = params.shape[0]
    amp = np.ones((n, d))
    sin_acc = np.ones(n)
    for j in range(d - 1):
        amp[:, j] = sin_acc * np.cos(theta[:, j])
        sin_acc = sin_acc * np.sin(theta[:, j])
    amp[:, d - 1] = sin_acc
    vec = amp.astype(complex)
    vec[:, 1:] *= np.exp(1j * phi)
    return vec


_DEFAULT_STEPS = {2: (33, 64), 3: (12, 16), 4: (7, 8)}


def _inner_extrema(kraus: np.ndarray, psis: np.ndarray):
    """For each ψ: max and min over φ ⊥ ψ of Tr[Φ(ψ)Φ(φ)], with the optimizing φ."""
    w = np.einsum("kai,ni->nka", kraus, psis)
    outs = np.einsum("nka,nkb->nab", w, w.conj())
    m = np.einsum("kai,nab,kbj->nij", kraus.conj(), outs, kraus)
    proj = np.eye(psis.shape[1])[None] - np.einsum("ni,nj->nij", psis, psis.conj())
    a = proj @ m @ proj
    lam_hi, vec_hi = np.linalg.eigh(a)
    big = 4.0 + np.abs(np.trace(m, axis1=1, axis2=2))
    lam_lo, vec_lo = np.linalg.eigh(a + big[:, None, None] * np.einsum("ni,nj->nij", psis, psis.conj()))
    return lam_hi[:, -1].real, vec_hi[:, :, -1], lam_lo[:, 0].real, vec_lo[:, :, 0]


def brute_force_value(channel: Channel, k: int = 2, steps: tuple | None = None, samples: int = 2000,
                      seed: int = 0, polish: bool = True) -> BruteForceResult:
    """Extremes of the pair value over a deterministic net of pure inputs (dim <= 4, k = 2).

    The first state ranges over a grid in hyperspherical coordinates plus Haar
    samples; for each one the second state (orthogonal to it) is optimized
    exactly by an eigen-decomposition.  The best net points are then polished
    with Nelder-Mead.  ``resolution`` is an a-priori bracket 2h·sqrt(2(d-1))
    for grid spacing h; polished values are usually far tighter.
    """
    from scipy.optimize import minimize

    d = channel.in_dim
    if d > 4 or d < 2:
        raise DimensionError(f"brute force supports input dimension 2..4, got {d}")
    if k != 2:
        raise ValueError("brute force is implemented for pairs (k = 2)")
    nt, npf = steps or _DEFAULT_STEPS[d]
    tg = np.linspace(0, np.pi / 2, nt)
    pg = np.linspace(0, 2 * np.pi, npf, endpoint=False)
    axes = [tg] * (d - 1) + [pg] * (d - 1)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2 * (d - 1))
    psis = _hyperspherical(grid, d)
    rng = np.random.default_rng(seed)
    haar = rng.standard_normal((samples, d)) + 1j * rng.standard_normal((samples, d))
    haar /= np.linalg.norm(haar, axis=1, keepdims=True)
    psis = np.concatenate([psis, haar])
    kraus = channel.kraus()
    hi_v, hi_p, lo_v, lo_p = [], [], [], []
    for start in range(0, len(psis), 4096):
        a, b, c, e = _inner_extrema(kraus, psis[start:start + 4096])
        hi_v.append(a); hi_p.append(b); lo_v.append(c); lo_p.append(e)
    hi_v, hi_p = np.concatenate(hi_v), np.concatenate(hi_p)
    lo_v, lo_p = np.concatenate(lo_v), np.concatenate(lo_p)
    ih, il = int(np.argmax(hi_v)), int(np.argmin(lo_v))
    best_hi = (float(hi_v[ih]), (psis[ih], hi_p[ih]))
    best_lo = (float(lo_v[il]), (psis[il], lo_p[il]))

    if polish:
        def f(x, sign):
            psi = _hyperspherical(x[None], d)
            a, b, c, e = _inner_extrema(kraus, psi)
            return -a[0] if sign > 0 else c[0], (psi[0], b[0] if sign > 0 else e[0])

        # start points: best grid parameters (grid points only; Haar points are already included)
        for sign, vals in ((1, -hi_v[: len(grid)]), (-1, lo_v[: len(grid)])):
            for idx in np.argsort(vals)[:4]:
                res = minimize(lambda x: f(x, sign)[0], grid[idx], method="Nelder-Mead",
                               options={"xatol": 1e-11, "fatol": 1e-14, "maxiter": 6000})
                val, pair = f(res.x, sign)
                if sign > 0 and -val > best_hi[0]:
                    best_hi = (float(-val), pair)
                if sign < 0 and val < best_lo[0]:
                    best_lo = (float(val), pair)
    h = max(np.pi / 2 / max(nt - 1, 1), 2 * np.pi / npf)
    resolution = 2 * h * math.sqrt(2 * (d - 1))
    return BruteForceResult(best_hi[0], max(best_lo[0], 0.0), resolution, best_hi[1], best_lo[1], len(psis))


# verifier protocols ---------------------------------------------------------

@dataclass(frozen=True)
class VerifierOutcome:
    accept_probability: float
    branch_probabilities: dict
    parameters: dict


def qma2_weight(c: float, s: float) -> float:
    """Probability of running the plain swap test in the two-proof clique verifier."""
    return 1.0 - (c - s) / 2.0


def qma2_thresholds(c: float, s: float) -> tuple[float, float]:
    """Stated threshold pair ``(½ + (c-s)c/8, ½ + (c-s)(c+s)/16)`` for :func:`qma2_weight`.

    The completeness value is a valid (loose) lower bound.  The soundness
    value is not an upper bound in general; use :func:`qma2_bounds`.
    """
    return 0.5 + (c - s) * c / 8.0, 0.5 + (c - s) * (c + s) / 16.0


def qma2_bounds(c: float, s: float, p: float | None = None) -> tuple[float, float]:
    """Acceptance bounds of the two-proof clique verifier recomputed from its branches.

    Yes: at least ``½ + (1-p)c/2``.  No: at most ``½ + (1-p)s/2 + (1-p)²/(8p)``.
    """
    p = qma2_weight(c, s) if p is None else p
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    return 0.5 + (1 - p) * c / 2.0, 0.5 + (1 - p) * s / 2.0 + (1 - p) ** 2 / (8.0 * p)


def qis_weight(c: float, s: float) -> float:
    return 2.0 / (2.0 + c - s)


def qis_thresholds(c: float, s: float) -> tuple[float, float]:
    g = c - s
    return (1.0 + (g / 2.0) * c) / (2.0 + g), (1.0 + (g / 2.0) * (c + s) / 2.0) / (2.0 + g)


def _swap_fail(rho, sigma) -> float:
    """Probability that the literal swap-test circuit rejects ρ⊗σ."""
    a, b = _as_density(rho), _as_density(sigma)
    n = int(round(math.log2(a.shape[0])))
    out = cm.evaluate(cm.swap_test_circuit(n), np.kron(a, b))
    return 1.0 - cm.qubit_zero_probability(out, 2 * n)


def _swap_after_channel_pass(circuit: cm.Circuit, rho, sigma) -> float:
    """Accept-on-pass probability of: run C on each proof, then swap-test the outputs."""
    full = cm.compose(cm.parallel(circuit, circuit), cm.swap_test_circuit(circuit.out_count))
    out = cm.evaluate(full, np.kron(_as_density(rho), _as_density(sigma)))
    return cm.qubit_zero_probability(out, 2 * circuit.out_count)


def qma2_clique_verifier(circuit: cm.Circuit, proof: tuple, p: float,
                         c: float | None = None, s: float | None = None) -> VerifierOutcome:
    """Acceptance of the two-proof clique verifier, simulated circuit by circuit.

    With probability ``p`` the proofs are swap-tested and the verifier accepts
    when the test fails; otherwise both proofs go through the channel and the
    verifier accepts when the swap test on the outputs passes.
    """
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    rho, sigma = proof
    d = 2 ** circuit.in_count
    for st in (rho, sigma):
        if _as_density(st).shape != (d, d):
            raise DimensionError("proof states must live on the circuit's input qubits")
    if circuit.out_count < 1:
        raise ValueError("the channel circuit needs at least one output qubit")
    b0 = _swap_fail(rho, sigma)
    b1 = _swap_after_channel_pass(circuit, rho, sigma)
    return VerifierOutcome(p * b0 + (1 - p) * b1, {0: b0, 1: b1}, {"p": p, "c": c, "s": s})


def qma2_closed_form(channel: Channel, rho, sigma, p: float) -> float:
    a, b = _as_density(rho), _as_density(sigma)
    return p * (0.5 - 0.5 * overlap(a, b)) + (1 - p) * (0.5 + 0.5 * overlap(channel.apply_matrix(a), channel.apply_matrix(b)))


def qmak_is_verifier(circuit: cm.Circuit, proofs: Sequence, p: float,
                     c: float | None = None, s: float | None = None) -> VerifierOutcome:
    """Acceptance of the k-proof independent-set verifier (uniform pair, accept on swap-test failure)."""
    k = len(proofs)
    if k < 2:
        raise ValueError("need at least two proofs")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    d = 2 ** circuit.in_count
    for st in proofs:
        if _as_density(st).shape != (d, d):
            raise DimensionError("proof states must live on the circuit's input qubits")
    pairs = list(combinations(range(k), 2))
    b0 = float(np.mean([_swap_fail(proofs[i], proofs[j]) for i, j in pairs]))
    b1 = float(np.mean([1.0 - _swap_after_channel_pass(circuit, proofs[i], proofs[j]) for i, j in pairs]))
    return VerifierOutcome(p * b0 + (1 - p) * b1, {0: b0, 1: b1}, {"p": p, "c": c, "s": s})


def qmak_is_closed_form(channel: Channel, proofs: Sequence, p: float) -> float:
    rhos = [_as_density(x) for x in proofs]
    outs = [channel.apply_matrix(r) for r in rhos]
    pairs = list(combinations(range(len(rhos)), 2))
    b0 = np.mean([0.5 - 0.5 * overlap(rhos[i], rhos[j]) for i, j in pairs])
    b1 = np.mean([0.5 - 0.5 * overlap(outs[i], outs[j]) for i, j in pairs])
    return float(p * b0 + (1 - p) * b1)


def circuit_channel(circuit: cm.Circuit) -> CircuitChannel:
    return CircuitChannel(circuit)
