"""Channel representations and channel-level constructions.

Four concrete variants share the :class:`Channel` interface:

* :class:`KrausChannel`   ``ρ ↦ Σ A ρ A†``
* :class:`CircuitChannel` evaluated by simulating a :class:`Circuit`
* :class:`BlockSumChannel` weighted direct sum with disjoint output blocks
* :class:`EBChannel`      measure-and-prepare ``ρ ↦ Σ Tr(M ρ) σ``

Methods ending in ``_matrix`` work on raw arrays and are linear (they accept
non-positive inputs, e.g. for Choi matrices); :func:`apply` wraps states.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag

from . import circuit_model as cm
from .config import settings
from .tensor_core import (DensityOperator, DimensionError, ValidationError, as_matrix, overlap,
                          symmetric_projector)


class ChannelError(ValueError):
    """Invalid channel data (non-TP Kraus set, bad POVM, mismatched dims)."""


class Channel:
    in_dim: int
    out_dim: int

    def apply_matrix(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint_matrix(self, a: np.ndarray) -> np.ndarray:
        return np.einsum("kji,jl,klm->im", self.kraus().conj(), a, self.kraus())

    def kraus(self) -> np.ndarray:
        """Kraus operators stacked as an array of shape ``(r, out_dim, in_dim)``."""
        raise NotImplementedError

    def apply_pure(self, vec: np.ndarray) -> np.ndarray:
        v = np.asarray(vec, dtype=complex)
        return self.apply_matrix(np.outer(v, v.conj()))

    def _check_in(self, x: np.ndarray) -> None:
        if x.shape != (self.in_dim, self.in_dim):
            raise DimensionError(f"channel input must be {self.in_dim}x{self.in_dim}, got {x.shape}")

    def _check_out(self, a: np.ndarray) -> None:
        if a.shape != (self.out_dim, self.out_dim):
            raise DimensionError(f"adjoint input must be {self.out_dim}x{self.out_dim}, got {a.shape}")

    def to_kraus(self) -> "KrausChannel":
        return KrausChannel(self.kraus(), check=False)


def _truncate(ops: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(ops.reshape(ops.shape[0], -1), axis=1)
    keep = norms >= 1e-12
    if not np.any(keep):
        keep[np.argmax(norms)] = True
    return ops[keep]


class KrausChannel(Channel):
    def __init__(self, ops, check: bool = True):
        arr = np.asarray(ops, dtype=complex)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3:
            raise ChannelError("Kraus operators must be matrices of equal shape")
        self.ops = _truncate(arr)
        self.ops.setflags(write=False)
        self.out_dim, self.in_dim = arr.shape[1], arr.shape[2]
        if check:
            s = np.einsum("kji,kjl->il", self.ops.conj(), self.ops)
            err = np.max(np.abs(s - np.eye(self.in_dim)))
            if err > settings.channel:
                raise ChannelError(f"Kraus operators are not trace preserving (error {err:.2e})")

    def kraus(self) -> np.ndarray:
        return self.ops

    def apply_matrix(self, x):
        x = as_matrix(x)
        self._check_in(x)
        return np.einsum("kij,jl,kml->im", self.ops, x, self.ops.conj())

    def apply_pure(self, vec):
        w = self.ops @ np.asarray(vec, dtype=complex)
        return w.T @ w.conj()

    def adjoint_matrix(self, a):
        a = as_matrix(a)
        self._check_out(a)
        return np.einsum("kji,jl,klm->im", self.ops.conj(), a, self.ops)

    def __repr__(self):
        return f"KrausChannel(rank={len(self.ops)}, {self.in_dim}->{self.out_dim})"


class CircuitChannel(Channel):
    def __init__(self, circuit: cm.Circuit):
        self.circuit = circuit
        self.in_dim = 2 ** circuit.in_count
        self.out_dim = 2 ** circuit.out_count

    def apply_matrix(self, x):
        return cm.evaluate_matrix(self.circuit, x)

    def apply_pure(self, vec):
        return cm.evaluate_pure(self.circuit, vec).matrix

    @cached_property
    def _kraus(self):
        return kraus_from_circuit(self.circuit).ops

    def kraus(self):
        return self._kraus

    def __repr__(self):
        return f"CircuitChannel({self.circuit.in_count}->{self.circuit.out_count} qubits, {len(self.circuit.gates)} gates)"


class BlockSumChannel(Channel):
    def __init__(self, channels: Sequence[Channel], weights: Sequence[float]):
        if not channels or len(channels) != len(weights):
            raise ChannelError("need one weight per channel")
        w = np.asarray(weights, dtype=float)
        if np.any(w < -1e-15) or abs(w.sum() - 1.0) > 1e-12:
            raise ChannelError(f"weights {list(w)} are not a probability distribution")
        dims = {c.in_dim for c in channels}
        if len(dims) != 1:
            raise ChannelError(f"block channels have different input dims {sorted(dims)}")
        self.channels = list(channels)
        self.weights = np.clip(w, 0.0, None)
        self.in_dim = dims.pop()
        self.block_dims = [c.out_dim for c in channels]
        self.offsets = np.concatenate([[0], np.cumsum(self.block_dims)]).astype(int)
        self.out_dim = int(self.offsets[-1])

    def blocks_matrix(self, x) -> list[np.ndarray]:
        return [c.apply_matrix(x) for c in self.channels]

    def apply_matrix(self, x):
        x = as_matrix(x)
        self._check_in(x)
        return block_diag(*[w * c.apply_matrix(x) for w, c in zip(self.weights, self.channels)])

    def apply_pure(self, vec):
        return block_diag(*[w * c.apply_pure(vec) for w, c in zip(self.weights, self.channels)])

    def adjoint_matrix(self, a):
        a = as_matrix(a)
        self._check_out(a)
        out = np.zeros((self.in_dim, self.in_dim), dtype=complex)
        for b, (w, c) in enumerate(zip(self.weights, self.channels)):
            lo, hi = self.offsets[b], self.offsets[b + 1]
            out += w * c.adjoint_matrix(a[lo:hi, lo:hi])
        return out

    def kraus(self):
        ops = []
        for b, (w, c) in enumerate(zip(self.weights, self.channels)):
            if w == 0:
                continue
            k = c.kraus()
            emb = np.zeros((k.shape[0], self.out_dim, self.in_dim), dtype=complex)
            emb[:, self.offsets[b]:self.offsets[b + 1], :] = np.sqrt(w) * k
            ops.append(emb)
        return _truncate(np.concatenate(ops))

    def __repr__(self):
        return f"BlockSumChannel(weights={list(np.round(self.weights, 6))}, blocks={self.block_dims})"


class EBChannel(Channel):
    def __init__(self, povm, states, check: bool = True):
        m = np.asarray([as_matrix(x) for x in povm], dtype=complex)
        s = np.asarray([as_matrix(x) for x in states], dtype=complex)
        if m.ndim != 3 or s.ndim != 3 or len(m) != len(s) or len(m) == 0:
            raise ChannelError("need equally many POVM elements and output states")
        self.povm, self.states = m, s
        self.in_dim, self.out_dim = m.shape[1], s.shape[1]
        if check:
            total = m.sum(axis=0)
            err = np.max(np.abs(total - np.eye(self.in_dim)))
            if err > settings.channel:
                raise ChannelError(f"POVM elements do not sum to the identity (error {err:.2e})")
            for i, e in enumerate(m):
                if np.max(np.abs(e - e.conj().T)) > settings.channel or np.linalg.eigvalsh(e)[0] < -settings.channel:
                    raise ChannelError(f"POVM element {i} is not positive")
            for i, st in enumerate(s):
                try:
                    DensityOperator(st)
                except ValidationError as exc:
                    raise ChannelError(f"output state {i}: {exc}") from exc
        self.povm.setflags(write=False)
        self.states.setflags(write=False)

    def probabilities(self, x) -> np.ndarray:
        return np.real(np.einsum("nij,ji->n", self.povm, x))

    def apply_matrix(self, x):
        x = as_matrix(x)
        self._check_in(x)
        return np.einsum("n,nab->ab", np.einsum("nij,ji->n", self.povm, x), self.states)

    def apply_pure(self, vec):
        v = np.asarray(vec, dtype=complex)
        probs = np.real(np.einsum("i,nij,j->n", v.conj(), self.povm, v))
        return np.einsum("n,nab->ab", probs, self.states)

    def adjoint_matrix(self, a):
        a = as_matrix(a)
        self._check_out(a)
        return np.einsum("n,nij->ij", np.einsum("nab,ba->n", self.states, a), self.povm)

    @cached_property
    def _kraus(self):
        ops = []
        for m, s in zip(self.povm, self.states):
            root = _psd_root(m)
            lam, vecs = np.linalg.eigh(0.5 * (s + s.conj().T))
            for l, v in zip(lam, vecs.T):
                if l <= 1e-15:
                    continue
                # sqrt(l) |v><b| sqrt(M) for every input basis vector b
                ops.append(np.sqrt(l) * v[None, :, None] * root[:, None, :])
        return _truncate(np.concatenate(ops))

    def kraus(self):
        return self._kraus

    def __repr__(self):
        return f"EBChannel({len(self.povm)} outcomes, {self.in_dim}->{self.out_dim})"


def _psd_root(m):
    lam, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (vecs * np.sqrt(np.clip(lam, 0, None))) @ vecs.conj().T


# module-level operations ----------------------------------------------------

def apply(channel: Channel, rho) -> DensityOperator:
    """Output state of ``channel`` on the state ``rho``."""
    if isinstance(channel, CircuitChannel):
        return cm.evaluate(channel.circuit, rho)
    out = channel.apply_matrix(as_matrix(rho))
    return DensityOperator(0.5 * (out + out.conj().T), check=channel.out_dim <= 256)


def adjoint_apply(channel: Channel, a) -> np.ndarray:
    """Heisenberg-picture map ``A ↦ Φ†(A)``."""
    return channel.adjoint_matrix(as_matrix(a))


def kraus_from_circuit(c: cm.Circuit) -> KrausChannel:
    """Kraus operators of a circuit, sliced from its Stinespring isometry."""
    t, survivors, traced = cm.dilation(c)
    width = t.ndim - 1
    t = np.transpose(t, list(traced) + list(survivors) + [width])
    ops = t.reshape(2 ** len(traced), 2 ** len(survivors), t.shape[-1])
    return KrausChannel(ops)


def eb_channel(povm, states) -> EBChannel:
    return EBChannel(povm, states)


def block_sum(channels: Sequence[Channel], weights: Sequence[float]) -> BlockSumChannel:
    return BlockSumChannel(channels, weights)


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel(np.eye(d, dtype=complex)[None])


def unitary_channel(u) -> KrausChannel:
    return KrausChannel(np.asarray(u, dtype=complex)[None])


def constant_channel(sigma, in_dim: int) -> EBChannel:
    return EBChannel([np.eye(in_dim)], [as_matrix(sigma)])


def dephasing_channel(d: int = 2) -> EBChannel:
    basis = np.eye(d, dtype=complex)
    proj = [np.outer(b, b) for b in basis]
    return EBChannel(proj, proj)


def compress_kraus(ops, tol: float = 1e-12) -> np.ndarray:
    """Equivalent Kraus set of minimal size (at most ``out_dim * in_dim`` operators)."""
    ops = np.asarray(ops, dtype=complex)
    r, d_out, d_in = ops.shape
    u, s, vh = np.linalg.svd(ops.reshape(r, d_out * d_in), full_matrices=False)
    keep = s > tol * max(1.0, s[0])
    return (s[keep, None] * vh[keep]).reshape(-1, d_out, d_in)


def compose_channels(first: Channel, second: Channel) -> KrausChannel:
    """``second ∘ first`` with a compressed Kraus set."""
    if first.out_dim != second.in_dim:
        raise DimensionError(f"cannot compose {first.out_dim}-dim output into {second.in_dim}-dim input")
    ops = np.einsum("bij,ajk->abik", second.kraus(), first.kraus())
    return KrausChannel(compress_kraus(ops.reshape(-1, second.out_dim, first.in_dim)), check=False)


def random_channel(in_dim: int, out_dim: int, rank: int, rng: np.random.Generator) -> KrausChannel:
    """Channel from a Haar-random isometry ``C^in -> C^out ⊗ C^rank``."""
    from .tensor_core import random_frame
    v = random_frame(out_dim * rank, in_dim, rng)
    ops = v.reshape(out_dim, rank, in_dim).transpose(1, 0, 2)
    return KrausChannel(ops)


def embed_output(channel: Channel, iso: np.ndarray) -> KrausChannel:
    """``ρ ↦ V Φ(ρ) V†`` for an isometry ``V`` on the output space."""
    return KrausChannel(np.einsum("ab,kbc->kac", iso, channel.kraus()), check=False)


def choi_matrix(channel: Channel) -> np.ndarray:
    """``Σ |i><j| ⊗ Φ(|i><j|)`` (input factor first)."""
    d = channel.in_dim
    j = np.zeros((d * channel.out_dim, d * channel.out_dim), dtype=complex)
    for a in range(d):
        for b in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[a, b] = 1.0
            j += np.kron(e, channel.apply_matrix(e))
    return j


def is_cptp(channel: Channel, tol: float | None = None) -> bool:
    tol = settings.channel if tol is None else tol
    j = choi_matrix(channel)
    if np.max(np.abs(j - j.conj().T)) > tol:
        return False
    if np.linalg.eigvalsh(0.5 * (j + j.conj().T))[0] < -tol:
        return False
    d, e = channel.in_dim, channel.out_dim
    marg = np.einsum("iaja->ij", j.reshape(d, e, d, e))
    return bool(np.max(np.abs(marg - np.eye(d))) <= tol)


# Bell-measurement form ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BellForm:
    """Acceptance operator of "apply Φ⊗Φ, then swap test" written as Σ c_ij M_i ⊗ M_j."""

    coefficients: np.ndarray
    povm: np.ndarray

    def operator(self) -> np.ndarray:
        return np.einsum("ij,iab,jcd->acbd", self.coefficients, self.povm, self.povm).reshape(
            self.povm.shape[1] ** 2, self.povm.shape[1] ** 2)


def bell_measurement_form(channel: Channel) -> BellForm:
    if not isinstance(channel, EBChannel):
        raise ChannelError("Bell-measurement form needs a measure-and-prepare channel")
    d = channel.out_dim
    proj = symmetric_projector(d)
    s = channel.states
    n = len(s)
    coef = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            coef[i, j] = np.real(np.trace(proj @ np.kron(s[i], s[j])))
    return BellForm(coef, channel.povm)


def swap_test_acceptance_operator(channel: Channel) -> np.ndarray:
    """``(Φ†⊗Φ†)(Π_sym)`` computed from Kraus operators."""
    k = channel.kraus()
    d_in, d_out = channel.in_dim, channel.out_dim
    proj = symmetric_projector(d_out)
    out = np.zeros((d_in ** 2, d_in ** 2), dtype=complex)
    for a in k:
        for b in k:
            ab = np.kron(a, b)
            out += ab.conj().T @ proj @ ab
    return out


# operator systems -----------------------------------------------------------

def operator_system_basis(channel: Channel, max_dim: int = 16, tol: float = 1e-10) -> list[np.ndarray]:
    """Hilbert-Schmidt orthonormal basis of ``span{A_i† A_j}``."""
    if channel.in_dim > max_dim:
        raise DimensionError(f"input dimension {channel.in_dim} exceeds limit {max_dim}")
    k = channel.kraus()
    d = channel.in_dim
    prods = np.einsum("iba,jbc->ijac", k.conj(), k).reshape(-1, d * d)
    _, s, vh = np.linalg.svd(prods, full_matrices=False)
    rank = int(np.sum(s > tol * max(s[0], 1.0)))
    return [vh[i].conj().reshape(d, d) for i in range(rank)]


def _basis_columns(basis: Sequence[np.ndarray]) -> np.ndarray:
    return np.stack([np.asarray(b).reshape(-1) for b in basis], axis=1)


def in_span(a: np.ndarray, basis: Sequence[np.ndarray], tol: float = 1e-8) -> bool:
    q = _basis_columns(basis)
    v = np.asarray(a, dtype=complex).reshape(-1)
    resid = v - q @ (q.conj().T @ v)
    return bool(np.linalg.norm(resid) <= tol * max(1.0, np.linalg.norm(v)))


def subspace_distance(basis1, basis2) -> float:
    """Sine of the largest principal angle between two spans (1 if dimensions differ)."""
    if len(basis1) != len(basis2):
        return 1.0
    q1, q2 = _basis_columns(basis1), _basis_columns(basis2)
    # spectral norm of the part of span 2 outside span 1; avoids sqrt(1 - cos²) cancellation
    resid = q2 - q1 @ (q1.conj().T @ q2)
    return float(min(1.0, np.linalg.norm(resid, 2)))


# classical channels and confusability graphs --------------------------------

@dataclass(frozen=True)
class ConfusabilityGraph:
    vertices: tuple
    edges: frozenset

    def adjacent(self, u, v) -> bool:
        return frozenset((u, v)) in self.edges

    def has_independent_set(self, k: int):
        """Exhaustive search; returns a witness tuple or ``None``."""
        for combo in combinations(self.vertices, k):
            if all(not self.adjacent(a, b) for a, b in combinations(combo, 2)):
                return combo
        return None

    def has_clique(self, k: int):
        for combo in combinations(self.vertices, k):
            if all(self.adjacent(a, b) for a, b in combinations(combo, 2)):
                return combo
        return None


def _check_stochastic(n) -> list[list]:
    cols = [list(col) for col in zip(*n)]
    for x, col in enumerate(cols):
        if any(p < 0 for p in col):
            raise ChannelError(f"negative probability for input {x}")
        total = sum(col)
        exact = all(isinstance(p, (int, Fraction)) for p in col)
        if (exact and total != 1) or (not exact and abs(float(total) - 1.0) > 1e-12):
            raise ChannelError(f"column {x} sums to {total}, not 1")
    return cols


def confusability_graph(n, labels: Sequence | None = None) -> ConfusabilityGraph:
    """Graph on inputs with ``x ~ x'`` when some output has positive probability under both.

    ``n[y][x] = N(y|x)``: each column is the output distribution of one input.
    Support is decided exactly (entries are compared with 0).
    """
    cols = _check_stochastic(n)
    labels = tuple(range(len(cols))) if labels is None else tuple(labels)
    supports = [frozenset(y for y, p in enumerate(col) if p != 0) for col in cols]
    edges = frozenset(frozenset((labels[a], labels[b]))
                      for a, b in combinations(range(len(cols)), 2) if supports[a] & supports[b])
    return ConfusabilityGraph(labels, edges)


def classical_channel(n) -> EBChannel:
    """Quantum channel of a classical channel: measure in the computational basis, prepare diag N(·|x)."""
    cols = _check_stochastic(n)
    basis = np.eye(len(cols), dtype=complex)
    povm = [np.outer(b, b) for b in basis]
    states = [np.diag([float(p) for p in col]).astype(complex) for col in cols]
    return EBChannel(povm, states)


def graph_operator_system(graph: ConfusabilityGraph) -> list[np.ndarray]:
    """Orthonormal basis ``{|i><j| : i = j or i ~ j}`` of the graph's operator system."""
    idx = {v: i for i, v in enumerate(graph.vertices)}
    d = len(idx)
    out = []
    for u in graph.vertices:
        for v in graph.vertices:
            if u == v or graph.adjacent(u, v):
                e = np.zeros((d, d), dtype=complex)
                e[idx[u], idx[v]] = 1.0
                out.append(e)
    return out


def output_overlap(channel: Channel, rho, sigma) -> float:
    return overlap(channel.apply_matrix(as_matrix(rho)), channel.apply_matrix(as_matrix(sigma)))


# serialization --------------------------------------------------------------

def channel_to_dict(channel: Channel) -> dict:
    from .tensor_core import encode_matrix
    if isinstance(channel, EBChannel):
        return {"type": "eb", "povm": [encode_matrix(m) for m in channel.povm],
                "states": [encode_matrix(s) for s in channel.states]}
    if isinstance(channel, BlockSumChannel):
        return {"type": "block_sum", "weights": [float(w) for w in channel.weights],
                "blocks": [channel_to_dict(c) for c in channel.channels]}
    if isinstance(channel, CircuitChannel):
        return {"type": "circuit", "circuit": channel.circuit.to_dict()}
    return {"type": "kraus", "ops": [encode_matrix(k) for k in channel.kraus()]}


def channel_from_dict(doc: dict) -> Channel:
    from .tensor_core import decode_matrix
    kind = doc.get("type")
    if kind == "eb":
        return EBChannel([decode_matrix(m) for m in doc["povm"]], [decode_matrix(s) for s in doc["states"]])
    if kind == "block_sum":
        return BlockSumChannel([channel_from_dict(b) for b in doc["blocks"]], doc["weights"])
    if kind == "circuit":
        return CircuitChannel(cm.circuit_from_dict(doc["circuit"]))
    if kind == "kraus":
        return KrausChannel([decode_matrix(k) for k in doc["ops"]])
    raise ChannelError(f"unknown channel type {kind!r}")
