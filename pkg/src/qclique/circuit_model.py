"""Quantum circuits with unitary, prepare-|0> and trace-out gates.

Wires are addressed by their *current* position among the live wires.  A
``prep`` gate at position ``w`` inserts a fresh |0> wire there (shifting the
wires at ``w`` and above up by one); a ``trace`` gate at ``w`` discards that
wire and the wires above it move down.  Unitaries may carry extra control
wires with arbitrary control values; the "acts on 1-3 wires" rule applies to
the target wires.

Evaluation keeps the state as a factorization ``L R^†`` and only forms a
dense matrix when the factor rank exceeds the dimension, so low-rank inputs on
wide circuits stay cheap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .config import settings
from .tensor_core import DensityOperator, DimensionError, ValidationError, as_matrix, is_unitary


class CircuitError(ValueError):
    """Malformed circuit (bad wire reference, unknown gate, width overflow)."""


class CircuitFormatError(CircuitError):
    """Problem while parsing the circuit file format."""


# gate library ---------------------------------------------------------------

_S2 = 1 / math.sqrt(2)


def _controlled(u: np.ndarray, n_controls: int = 1) -> np.ndarray:
    d = u.shape[0]
    full = np.eye(d * 2 ** n_controls, dtype=complex)
    full[-d:, -d:] = u
    return full


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

FIXED_GATES: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": _X,
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "S": np.diag([1, 1j]).astype(complex),
    "SDG": np.diag([1, -1j]).astype(complex),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]).astype(complex),
    "TDG": np.diag([1, np.exp(-1j * np.pi / 4)]).astype(complex),
    "CNOT": _controlled(_X),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": _SWAP,
    "CSWAP": _controlled(_SWAP),
    "CCX": _controlled(_X, 2),
}
GATE_ALIASES = {"CX": "CNOT", "FREDKIN": "CSWAP", "TOFFOLI": "CCX"}


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


ROTATION_GATES = {"RY": _ry, "RZ": _rz, "RX": _rx}


def gate_set() -> dict[str, int]:
    """Names of the available unitaries mapped to their target-wire count."""
    out = {name: int(round(math.log2(m.shape[0]))) for name, m in FIXED_GATES.items()}
    out.update({name: 1 for name in ROTATION_GATES})
    return out


def _named_matrix(name: str, theta: float | None) -> np.ndarray:
    if name in ROTATION_GATES:
        if theta is None:
            raise CircuitError(f"gate {name} needs a rotation angle")
        return ROTATION_GATES[name](float(theta))
    if name in FIXED_GATES:
        if theta is not None:
            raise CircuitError(f"gate {name} takes no angle")
        return FIXED_GATES[name]
    raise CircuitError(f"unknown gate {name!r}")


@dataclass(frozen=True, eq=False)
class Gate:
    """One circuit operation.  ``kind`` is ``"U"``, ``"prep"`` or ``"trace"``."""

    kind: str
    wires: tuple
    name: str | None = None
    theta: float | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)
    controls: tuple = ()
    control_values: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        object.__setattr__(self, "controls", tuple(int(w) for w in self.controls))
        cv = tuple(int(v) for v in self.control_values) if self.control_values else (1,) * len(self.controls)
        object.__setattr__(self, "control_values", cv)
        if self.kind in ("prep", "trace"):
            if len(self.wires) != 1 or self.controls:
                raise CircuitError(f"{self.kind} gate acts on exactly one wire")
            return
        if self.kind != "U":
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if len(cv) != len(self.controls) or any(v not in (0, 1) for v in cv):
            raise CircuitError("control values must be 0/1, one per control wire")
        if not 1 <= len(self.wires) <= 3:
            raise CircuitError("unitaries act on 1 to 3 target wires")
        if len(set(self.all_wires)) != len(self.all_wires):
            raise CircuitError(f"repeated wire in {self.all_wires}")
        if self.name is not None:
            name = GATE_ALIASES.get(self.name.upper(), self.name.upper())
            object.__setattr__(self, "name", name)
            base = _named_matrix(name, self.theta)
            if self.theta is not None:
                object.__setattr__(self, "theta", float(self.theta))
        elif self.matrix is not None:
            base = np.array(self.matrix, dtype=complex)
            if not is_unitary(base):
                raise CircuitError("custom gate matrix is not unitary")
            base.setflags(write=False)
            object.__setattr__(self, "matrix", base)
        else:
            raise CircuitError("unitary gate needs a name or a matrix")
        if base.shape[0] != 2 ** len(self.wires):
            raise CircuitError(f"gate {self.name or 'matrix'} expects {int(math.log2(base.shape[0]))} wires, got {len(self.wires)}")

    # constructors
    @classmethod
    def unitary(cls, name: str, *wires: int, theta: float | None = None) -> "Gate":
        return cls("U", wires, name=name, theta=theta)

    @classmethod
    def custom(cls, matrix, wires: Sequence[int]) -> "Gate":
        return cls("U", tuple(wires), matrix=np.asarray(matrix, dtype=complex))

    @classmethod
    def prepare(cls, wire: int) -> "Gate":
        return cls("prep", (wire,))

    @classmethod
    def trace_out(cls, wire: int) -> "Gate":
        return cls("trace", (wire,))

    @property
    def all_wires(self) -> tuple:
        return self.controls + self.wires

    def target_matrix(self) -> np.ndarray:
        if self.name is not None:
            return _named_matrix(self.name, self.theta)
        return self.matrix

    def full_matrix(self) -> np.ndarray:
        """Matrix on ``controls + wires`` in that qubit order."""
        u = self.target_matrix()
        if not self.controls:
            return u
        c = len(self.controls)
        d = u.shape[0]
        full = np.eye(d * 2 ** c, dtype=complex)
        block = int("".join(map(str, self.control_values)), 2)
        full[block * d:(block + 1) * d, block * d:(block + 1) * d] = u
        return full

    def with_wires(self, wires: Sequence[int], controls: Sequence[int] | None = None,
                   extra_controls: Sequence[int] = (), extra_values: Sequence[int] = ()) -> "Gate":
        """Copy acting on different positions, optionally with more control wires prepended."""
        if self.kind != "U":
            return Gate(self.kind, tuple(wires))
        ctrl = tuple(self.controls if controls is None else controls)
        return Gate("U", tuple(wires), name=self.name, theta=self.theta, matrix=self.matrix,
                    controls=tuple(extra_controls) + ctrl,
                    control_values=tuple(extra_values) + self.control_values)

    def to_dict(self) -> dict:
        if self.kind != "U":
            return {"op": self.kind, "wires": list(self.wires)}
        d: dict = {"op": "U"}
        if self.name is not None:
            d["name"] = self.name
            if self.theta is not None:
                d["theta"] = self.theta
        else:
            from .tensor_core import encode_matrix
            d["matrix"] = encode_matrix(self.matrix)
        d["wires"] = list(self.wires)
        if self.controls:
            d["controls"] = list(self.controls)
            d["control_values"] = list(self.control_values)
        return d


# circuit --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Circuit:
    """Immutable gate list acting on ``in_count`` input qubits."""

    in_count: int
    gates: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.in_count < 0:
            raise CircuitError("in_count must be non-negative")
        width = self.in_count
        peak = width
        for i, g in enumerate(self.gates):
            if not isinstance(g, Gate):
                raise CircuitError(f"gate {i} is not a Gate")
            if g.kind == "prep":
                if not 0 <= g.wires[0] <= width:
                    raise CircuitError(f"gate {i}: prepare position {g.wires[0]} outside 0..{width}")
                width += 1
            elif g.kind == "trace":
                if not 0 <= g.wires[0] < width:
                    raise CircuitError(f"gate {i}: trace of missing wire {g.wires[0]} (width {width})")
                width -= 1
            else:
                bad = [w for w in g.all_wires if not 0 <= w < width]
                if bad:
                    raise CircuitError(f"gate {i}: wires {bad} not live (width {width})")
            peak = max(peak, width)
        object.__setattr__(self, "_out", width)
        object.__setattr__(self, "_peak", peak)

    @property
    def out_count(self) -> int:
        return self._out

    @property
    def peak_width(self) -> int:
        return self._peak

    @property
    def size(self) -> int:
        """Circuit length: inputs + outputs + gates."""
        return self.in_count + self.out_count + len(self.gates)

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def is_canonical(self) -> bool:
        order = {"prep": 0, "U": 1, "trace": 2}
        ranks = [order[g.kind] for g in self.gates]
        return all(a <= b for a, b in zip(ranks, ranks[1:]))

    def then(self, *gates: Gate) -> "Circuit":
        return Circuit(self.in_count, self.gates + tuple(gates))

    def to_dict(self) -> dict:
        return {"in": self.in_count, "gates": [g.to_dict() for g in self.gates]}

    def to_json(self, indent: int | None = 1) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @cached_property
    def _wire_history(self):
        return _track_wires(self)


def _track_wires(c: Circuit):
    """Give every wire a persistent id (inputs 0..n-1, preps numbered on creation).

    Returns (number of prep ids, unitaries as (gate, ids), traced ids, surviving ids in order).
    """
    live = list(range(c.in_count))
    next_id = c.in_count
    unitaries, traced = [], []
    for g in c.gates:
        if g.kind == "prep":
            live.insert(g.wires[0], next_id)
            next_id += 1
        elif g.kind == "trace":
            traced.append(live.pop(g.wires[0]))
        else:
            unitaries.append((g, [live[w] for w in g.all_wires]))
    return next_id - c.in_count, unitaries, traced, live


# gate application on factor tensors -----------------------------------------

def _apply_matrix(t: np.ndarray, u: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    """Apply ``u`` (on ``len(positions)`` qubits) to axes ``positions`` of ``t``.

    ``t`` has one axis of size 2 per live wire followed by one column axis.
    """
    k = len(positions)
    ut = u.reshape((2,) * (2 * k))
    res = np.tensordot(ut, t, axes=(list(range(k, 2 * k)), list(positions)))
    return np.moveaxis(res, list(range(k)), list(positions))


def _apply_gate(t: np.ndarray, g: Gate) -> np.ndarray:
    return _apply_matrix(t, g.full_matrix(), g.all_wires)


def _insert_zero(t: np.ndarray, pos: int) -> np.ndarray:
    return np.stack([t, np.zeros_like(t)], axis=pos)


def _split_trace(t: np.ndarray, pos: int) -> np.ndarray:
    return np.concatenate([np.take(t, 0, axis=pos), np.take(t, 1, axis=pos)], axis=-1)


def _check_width(c: Circuit) -> None:
    if c.peak_width > settings.max_qubits:
        raise CircuitError(f"circuit needs {c.peak_width} live qubits; limit is {settings.max_qubits}")


def _compress(left, right, width: int, hermitian: bool):
    d = 2 ** width
    lm = left.reshape(d, -1)
    if hermitian:
        dense = lm @ lm.conj().T
        lam, vecs = np.linalg.eigh(0.5 * (dense + dense.conj().T))
        keep = lam > 1e-15 * max(lam.max(), 1e-300)
        newl = (vecs[:, keep] * np.sqrt(lam[keep])).reshape((2,) * width + (-1,))
        return newl, newl
    dense = lm @ right.reshape(d, -1).conj().T
    u, s, vh = np.linalg.svd(dense)
    keep = s > 1e-15 * max(s.max() if s.size else 0.0, 1e-300)
    sq = np.sqrt(s[keep])
    newl = (u[:, keep] * sq).reshape((2,) * width + (-1,))
    newr = (vh.conj().T[:, keep] * sq).reshape((2,) * width + (-1,))
    return newl, newr


def _run(c: Circuit, left: np.ndarray, right: np.ndarray | None) -> np.ndarray:
    """Simulate gate by gate on the factorization ``left @ right^†``."""
    _check_width(c)
    hermitian = right is None
    width = c.in_count
    left = left.reshape((2,) * width + (-1,))
    right = left if hermitian else right.reshape((2,) * width + (-1,))
    for g in c.gates:
        if g.kind == "U":
            left = _apply_gate(left, g)
            right = left if hermitian else _apply_gate(right, g)
        elif g.kind == "prep":
            left = _insert_zero(left, g.wires[0])
            right = left if hermitian else _insert_zero(right, g.wires[0])
            width += 1
        else:
            left = _split_trace(left, g.wires[0])
            right = left if hermitian else _split_trace(right, g.wires[0])
            width -= 1
            if left.shape[-1] > 2 ** width:
                left, right = _compress(left, right, width, hermitian)
    d = 2 ** width
    lm, rm = left.reshape(d, -1), right.reshape(d, -1)
    return lm @ rm.conj().T


def evaluate_matrix(c: Circuit, x) -> np.ndarray:
    """Apply the circuit's linear map to an arbitrary ``2^in x 2^in`` matrix."""
    x = as_matrix(x)
    d = 2 ** c.in_count
    if x.shape != (d, d):
        raise DimensionError(f"input of shape {x.shape} for a circuit on {c.in_count} qubits")
    return _run(c, x.copy(), np.eye(d, dtype=complex))


def evaluate(c: Circuit, rho) -> DensityOperator:
    """Output state of the circuit on input ``rho`` (a state or a PSD matrix)."""
    m = as_matrix(rho)
    d = 2 ** c.in_count
    if m.shape != (d, d):
        raise DimensionError(f"input of dimension {m.shape[0]} for a circuit on {c.in_count} qubits")
    lam, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    keep = lam > 1e-15
    factor = vecs[:, keep] * np.sqrt(lam[keep])
    if factor.shape[1] == 0:
        factor = np.zeros((d, 1), dtype=complex)
    out = _run(c, factor, None)
    out = 0.5 * (out + out.conj().T)
    return DensityOperator(out, (2,) * c.out_count, check=c.out_count <= 8)


def evaluate_pure(c: Circuit, vec) -> DensityOperator:
    v = np.asarray(vec, dtype=complex).reshape(-1, 1)
    if v.shape[0] != 2 ** c.in_count:
        raise DimensionError("state dimension does not match the circuit")
    out = _run(c, v, None)
    return DensityOperator(0.5 * (out + out.conj().T), (2,) * c.out_count, check=False)


def dilation(c: Circuit):
    """Stinespring data of a canonical circuit.

    Returns ``(V, survivors, traced)`` where ``V`` has shape ``(2,)*w + (2^in,)``
    (the isometry after preparations and unitaries, ``w`` the pre-trace width)
    and ``survivors``/``traced`` are pre-trace positions, survivors in output order.
    """
    if not c.is_canonical():
        c = canonicalize(c)
    _check_width(c)
    n = c.in_count
    t = np.eye(2 ** n, dtype=complex).reshape((2,) * n + (2 ** n,))
    width = n
    positions = None
    for g in c.gates:
        if g.kind == "prep":
            t = _insert_zero(t, g.wires[0])
            width += 1
        elif g.kind == "U":
            t = _apply_gate(t, g)
        else:
            if positions is None:
                positions = list(range(width))
            positions.pop(g.wires[0])
    survivors = list(range(width)) if positions is None else positions
    traced = [p for p in range(width) if p not in survivors]
    return t, survivors, traced


# transformations ------------------------------------------------------------

def canonicalize(c: Circuit) -> Circuit:
    """Equivalent circuit with all preparations first and all trace-outs last.

    Preparations are appended after the inputs in creation order; if the
    surviving wires would come out in a different order, SWAP gates are added
    before the trace stage to restore the original output order.
    """
    if c.is_canonical():
        return c
    n_prep, unitaries, traced, survivors = c._wire_history
    n = c.in_count
    gates = [Gate.prepare(n + j) for j in range(n_prep)]
    for g, ids in unitaries:
        nc = len(g.controls)
        gates.append(g.with_wires(ids[nc:], controls=ids[:nc]))
    width = n + n_prep
    slots = sorted(survivors)
    arr = list(range(width))  # arr[pos] = wire id currently at pos
    for k, want in enumerate(survivors):
        t = slots[k]
        if arr[t] != want:
            q = arr.index(want)
            gates.append(Gate.unitary("SWAP", t, q))
            arr[t], arr[q] = arr[q], arr[t]
    for pos in sorted(set(range(width)) - set(slots), reverse=True):
        gates.append(Gate.trace_out(pos))
    return Circuit(n, gates)


def canonical_permutation(c: Circuit) -> list[int]:
    """Output order of the original circuit in terms of canonical pre-trace positions."""
    return list(c._wire_history[3])


def prepare_superposition_gate(p: float, wire: int = 0) -> Gate:
    """Single-qubit rotation with |0> -> sqrt(p)|0> + sqrt(1-p)|1> exactly."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"weight p={p} outside [0, 1]")
    return Gate.unitary("RY", wire, theta=2.0 * math.acos(math.sqrt(p)))


def prepare_distribution_gates(probs: Sequence[float], wires: Sequence[int]) -> list[Gate]:
    """Gates loading ``sum_i sqrt(probs[i]) |i>`` onto fresh |0> wires (first wire = MSB)."""
    probs = np.asarray(probs, dtype=float)
    nq = len(wires)
    if probs.size > 2 ** nq or np.any(probs < 0) or abs(probs.sum() - 1) > 1e-12:
        raise ValueError("need a probability vector of length <= 2^len(wires)")
    full = np.zeros(2 ** nq)
    full[: probs.size] = probs
    gates = []
    for level in range(nq):
        block = 2 ** (nq - level)
        for prefix in range(2 ** level):
            seg = full[prefix * block:(prefix + 1) * block]
            mass = seg.sum()
            if mass <= 0:
                continue
            p0 = seg[: block // 2].sum() / mass
            if abs(p0 - 1.0) < 1e-15:
                continue
            theta = 2.0 * math.acos(math.sqrt(min(max(p0, 0.0), 1.0)))
            bits = [int(b) for b in format(prefix, f"0{level}b")] if level else []
            gates.append(Gate("U", (wires[level],), name="RY", theta=theta,
                              controls=tuple(wires[:level]), control_values=tuple(bits)))
    return gates


def swap_test_circuit(n: int) -> Circuit:
    """Swap test on two n-qubit registers.

    Output keeps both registers followed by the (dephased) test qubit, which
    reads 0 with probability ½ + ½Tr(ρ₁ρ₂) on product inputs.
    """
    if n < 1:
        raise ValueError("swap test needs n >= 1")
    a, d = 2 * n, 2 * n + 1
    gates = [Gate.prepare(a), Gate.prepare(d), Gate.unitary("H", a)]
    gates += [Gate.unitary("CSWAP", a, i, n + i) for i in range(n)]
    gates += [Gate.unitary("H", a), Gate.unitary("CNOT", a, d), Gate.trace_out(d)]
    return Circuit(2 * n, gates)


def dephasing_circuit() -> Circuit:
    """Computational-basis measurement of one qubit, kept as a classical flag."""
    return Circuit(1, [Gate.prepare(1), Gate.unitary("CNOT", 0, 1), Gate.trace_out(1)])


def qubit_zero_probability(rho, position: int) -> float:
    """Probability that qubit ``position`` of an n-qubit state reads 0."""
    m = as_matrix(rho)
    n = int(round(math.log2(m.shape[0])))
    diag = np.real(np.diag(m)).reshape((2,) * n)
    return float(np.clip(np.take(diag, 0, axis=position).sum(), 0.0, 1.0))


def parallel(c1: Circuit, c2: Circuit) -> Circuit:
    """``c1 ⊗ c2``: inputs of c1 then c2; outputs of c1 then c2."""
    gates = list(c1.gates)
    shift = c1.out_count
    for g in c2.gates:
        nc = len(g.controls)
        moved = [w + shift for w in g.all_wires]
        gates.append(g.with_wires(moved[nc:], controls=moved[:nc]) if g.kind == "U"
                     else Gate(g.kind, (g.wires[0] + shift,)))
    return Circuit(c1.in_count + c2.in_count, gates)


def compose(first: Circuit, second: Circuit) -> Circuit:
    """Run ``first`` and feed its outputs into ``second``."""
    if first.out_count != second.in_count:
        raise CircuitError(f"cannot compose: {first.out_count} outputs into {second.in_count} inputs")
    return Circuit(first.in_count, first.gates + second.gates)


# direct sum -----------------------------------------------------------------

# |direct_sum(C1, C2)| <= SLOPE * (|C1| + |C2|) + INTERCEPT (see tests)
DIRECT_SUM_SIZE_SLOPE = 4
DIRECT_SUM_SIZE_INTERCEPT = 8


def _branch_layout(c: Circuit, n: int):
    """Pre-trace positions of a canonical circuit mapped to labels ('in', i) / ('prep', j)."""
    live = [("in", i) for i in range(n)]
    j = 0
    unitaries = []
    trace_positions = []
    for g in c.gates:
        if g.kind == "prep":
            live.insert(g.wires[0], ("prep", j))
            j += 1
        elif g.kind == "U":
            unitaries.append(g)
        else:
            trace_positions.append(g.wires[0])
    order = list(range(len(live)))
    for pos in trace_positions:
        order.pop(pos)
    return live, j, unitaries, order


def direct_sum(c1: Circuit, c2: Circuit, p: float) -> Circuit:
    """Circuit for the weighted direct sum ``p Φ_{C1} ⊕ (1-p) Φ_{C2}``.

    Output: a flag qubit (0 for the C1 branch, 1 for C2) followed by
    ``max(out1, out2)`` qubits; the shorter branch output is padded with |0>.
    Use :func:`direct_sum_embedding` to map the block-diagonal channel output
    into this qubit register.
    """
    if c1.in_count != c2.in_count:
        raise CircuitError(f"input counts differ: {c1.in_count} vs {c2.in_count}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"weight p={p} outside [0, 1]")
    c1, c2 = canonicalize(c1), canonicalize(c2)
    n = c1.in_count
    branches = [_branch_layout(c, n) for c in (c1, c2)]
    outs = [c1.out_count, c2.out_count]
    max_out = max(outs)
    n_anc = max(b[1] for b in branches) + abs(outs[0] - outs[1])
    body = n + n_anc                 # positions 1..body are shared by both branches
    deph = body + 1                  # dephasing ancilla for the flag
    gates = [Gate.prepare(0)]
    gates += [Gate.prepare(n + 1 + a) for a in range(n_anc)]
    gates.append(Gate.prepare(deph))
    gates.append(prepare_superposition_gate(p, 0))
    for b, (live, n_prep, unitaries, survivors) in enumerate(branches):
        if b == 1:
            gates.append(Gate.unitary("X", 0))
        pos = [1 + i if kind == "in" else 1 + n + i for kind, i in live]
        for g in unitaries:
            nc = len(g.controls)
            mapped = [pos[w] for w in g.all_wires]
            gates.append(g.with_wires(mapped[nc:], controls=mapped[:nc],
                                      extra_controls=(0,), extra_values=(0,)))
        # move outputs to the front, padding zeros next, everything else to the tail
        used = {pos[s] for s in survivors}
        fresh = list(range(1 + n + n_prep, body + 1))
        pad = fresh[: max_out - outs[b]]
        rest = [q for q in range(1, body + 1) if q not in used and q not in pad]
        target = [pos[s] for s in survivors] + pad + rest
        arr = list(range(body + 1))
        for t, want in enumerate(target, start=1):
            if arr[t] != want:
                q = arr.index(want)
                gates.append(Gate("U", (t, q), name="SWAP", controls=(0,), control_values=(0,)))
                arr[t], arr[q] = arr[q], arr[t]
        if b == 1:
            gates.append(Gate.unitary("X", 0))
    gates.append(Gate.unitary("CNOT", 0, deph))
    for q in range(deph, max_out, -1):
        gates.append(Gate.trace_out(q))
    return Circuit(n, gates)


def direct_sum_embedding(out1: int, out2: int) -> np.ndarray:
    """Isometry from ``C^{2^out1} ⊕ C^{2^out2}`` into the direct-sum output register."""
    m = max(out1, out2)
    d1, d2 = 2 ** out1, 2 ** out2
    v = np.zeros((2 ** (m + 1), d1 + d2), dtype=complex)
    for a in range(d1):
        v[a * 2 ** (m - out1), a] = 1.0
    for b in range(d2):
        v[2 ** m + b * 2 ** (m - out2), d1 + b] = 1.0
    return v


# file format ----------------------------------------------------------------

def gate_from_dict(rec: dict, index: int = 0) -> Gate:
    from .tensor_core import decode_matrix
    if not isinstance(rec, dict):
        raise CircuitFormatError(f"gate {index}: expected an object")
    op = rec.get("op")
    wires = rec.get("wires")
    if not isinstance(wires, list) or not all(isinstance(w, int) for w in wires):
        raise CircuitFormatError(f"gate {index}: 'wires' must be a list of integers")
    try:
        if op in ("prep", "trace"):
            return Gate(op, tuple(wires))
        if op != "U":
            raise CircuitFormatError(f"gate {index}: unknown op {op!r}")
        extra = dict(controls=tuple(rec.get("controls", ())), control_values=tuple(rec.get("control_values", ())))
        if "matrix" in rec:
            return Gate("U", tuple(wires), matrix=decode_matrix(rec["matrix"]), **extra)
        return Gate("U", tuple(wires), name=rec.get("name"), theta=rec.get("theta"), **extra)
    except CircuitFormatError:
        raise
    except (CircuitError, ValueError, TypeError) as exc:
        raise CircuitFormatError(f"gate {index}: {exc}") from exc


def circuit_from_dict(doc: dict) -> Circuit:
    if not isinstance(doc, dict) or "in" not in doc or "gates" not in doc:
        raise CircuitFormatError("circuit document needs 'in' and 'gates'")
    if not isinstance(doc["in"], int) or doc["in"] < 0:
        raise CircuitFormatError("'in' must be a non-negative integer")
    gates = [gate_from_dict(rec, i) for i, rec in enumerate(doc["gates"])]
    try:
        return Circuit(doc["in"], gates)
    except CircuitError as exc:
        raise CircuitFormatError(str(exc)) from exc


def circuit_from_json(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return circuit_from_dict(doc)


def load_circuit(path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return circuit_from_json(fh.read())


def save_circuit(c: Circuit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(c.to_json())
        fh.write("\n")


def identity_circuit(n: int) -> Circuit:
    return Circuit(n, ())


def random_circuit(n_in: int, n_gates: int, rng: np.random.Generator, max_prep: int = 2,
                   max_trace: int | None = None, max_width: int = 4, canonical: bool = False) -> Circuit:
    """Random circuit over the built-in gates with interleaved preps and traces."""
    names_1 = ["X", "H", "T", "S", "Y", "Z"]
    gates: list[Gate] = []
    width, preps, traces = n_in, 0, 0
    max_trace = n_in + max_prep if max_trace is None else max_trace
    kinds = []
    while len(kinds) < n_gates:
        r = rng.random()
        if r < 0.2 and preps < max_prep and width < max_width:
            kinds.append("prep"); preps += 1; width += 1
        elif r < 0.35 and traces < max_trace and width > 1:
            kinds.append("trace"); traces += 1; width -= 1
        else:
            kinds.append("U")
    if canonical:
        kinds.sort(key={"prep": 0, "U": 1, "trace": 2}.__getitem__)
    width = n_in
    for kind in kinds:
        if kind == "prep":
            gates.append(Gate.prepare(int(rng.integers(0, width + 1)))); width += 1
        elif kind == "trace":
            gates.append(Gate.trace_out(int(rng.integers(0, width)))); width -= 1
        elif width == 0:
            gates.append(Gate.prepare(0)); width += 1
        else:
            choice = rng.random()
            if width >= 3 and choice < 0.15:
                w = rng.permutation(width)[:3]
                gates.append(Gate.unitary(rng.choice(["CSWAP", "CCX"]), *map(int, w)))
            elif width >= 2 and choice < 0.5:
                w = rng.permutation(width)[:2]
                gates.append(Gate.unitary(rng.choice(["CNOT", "CZ", "SWAP"]), *map(int, w)))
            elif choice < 0.7:
                gates.append(Gate.unitary("RY", int(rng.integers(0, width)), theta=float(rng.uniform(0, 2 * np.pi))))
            else:
                gates.append(Gate.unitary(str(rng.choice(names_1)), int(rng.integers(0, width))))
    return Circuit(n_in, gates)
