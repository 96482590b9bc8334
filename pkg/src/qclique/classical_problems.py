"""Deterministic and probabilistic NAND circuits and their clique problems.

Wires are numbered inputs first (``0..in_bits-1``), then one new wire per
gate.  Bitstrings are MSB-first: bit ``i`` of a string is wire ``i``, and the
integer code of a bitstring treats wire 0 as the most significant bit.

Probabilities are exact: the random inputs are enumerated and counted, and
results are returned as :class:`fractions.Fraction`.  Besides plain uniform
random bits a probabilistic circuit may group its random wires into
*registers* that are uniform over ``range(r)`` for any ``r``; this gives
exact non-dyadic probabilities such as 2/3.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

MAX_EXHAUSTIVE_BITS = 20
MAX_RANDOM_BITS = 24
FORMAT_NAME = "qclique-classical"


class ClassicalCircuitError(ValueError):
    pass


class SizeLimitError(ClassicalCircuitError):
    pass


# bit helpers -----------------------------------------------------------------

def bits_to_int(bits) -> int:
    if isinstance(bits, str):
        return int(bits, 2) if bits else 0
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


def int_to_bits(value: int, n: int) -> str:
    return format(value, f"0{n}b") if n else ""


def _parse_bits(x, n: int) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return int_to_bits(int(x), n)
    s = x if isinstance(x, str) else "".join(str(int(b)) for b in x)
    if len(s) != n or set(s) - {"0", "1"}:
        raise ClassicalCircuitError(f"expected a {n}-bit string, got {x!r}")
    return s


def _int_matrix(values: np.ndarray, n: int) -> np.ndarray:
    """Rows of MSB-first bits for an array of integer codes."""
    shifts = np.arange(n - 1, -1, -1)
    return ((values[:, None] >> shifts) & 1).astype(bool)


def _pack(bits: np.ndarray) -> np.ndarray:
    n = bits.shape[1]
    if n == 0:
        return np.zeros(bits.shape[0], dtype=np.int64)
    weights = (1 << np.arange(n - 1, -1, -1)).astype(np.int64)
    return bits.astype(np.int64) @ weights


# circuits ----------------------------------------------------------------------

@dataclass(frozen=True)
class ClassicalCircuit:
    """NAND circuit: ``gates[g] = (a, b)`` writes NAND(a, b) to wire ``in_bits + g``."""

    in_bits: int
    gates: tuple
    outputs: tuple

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple((int(a), int(b)) for a, b in self.gates))
        object.__setattr__(self, "outputs", tuple(int(o) for o in self.outputs))
        for g, (a, b) in enumerate(self.gates):
            wire = self.in_bits + g
            if not (0 <= a < wire and 0 <= b < wire):
                raise ClassicalCircuitError(f"gate {g} reads a wire that is not yet defined")
        n_wires = self.in_bits + len(self.gates)
        for o in self.outputs:
            if not 0 <= o < n_wires:
                raise ClassicalCircuitError(f"output wire {o} out of range")

    @property
    def out_bits(self) -> int:
        return len(self.outputs)

    @property
    def size(self) -> int:
        return self.in_bits + self.out_bits + len(self.gates)

    def evaluate_batch(self, inputs: np.ndarray) -> np.ndarray:
        """Evaluate on a boolean array of shape (N, in_bits); returns (N, out_bits)."""
        inputs = np.asarray(inputs, dtype=bool)
        if inputs.ndim != 2 or inputs.shape[1] != self.in_bits:
            raise ClassicalCircuitError(f"expected inputs of shape (N, {self.in_bits})")
        wires = np.empty((inputs.shape[0], self.in_bits + len(self.gates)), dtype=bool)
        wires[:, : self.in_bits] = inputs
        for g, (a, b) in enumerate(self.gates):
            wires[:, self.in_bits + g] = ~(wires[:, a] & wires[:, b])
        return wires[:, list(self.outputs)]

    def evaluate_codes(self, codes: np.ndarray) -> np.ndarray:
        return _pack(self.evaluate_batch(_int_matrix(np.asarray(codes, dtype=np.int64), self.in_bits)))

    def to_dict(self) -> dict:
        return {"format": FORMAT_NAME, "in_bits": self.in_bits,
                "gates": [{"op": "NAND", "in": [a, b]} for a, b in self.gates],
                "outputs": list(self.outputs)}


def eval_fn(c: ClassicalCircuit, x) -> str:
    """``f_C(x)`` as a bitstring."""
    bits = _parse_bits(x, c.in_bits)
    row = np.array([[ch == "1" for ch in bits]], dtype=bool).reshape(1, c.in_bits)
    return "".join("1" if b else "0" for b in c.evaluate_batch(row)[0])


def function_table(c: ClassicalCircuit) -> np.ndarray:
    """Output code for every input code (exhaustive, at most 2^20 inputs)."""
    if c.in_bits > MAX_EXHAUSTIVE_BITS:
        raise SizeLimitError(f"{c.in_bits} input bits exceed the exhaustive limit {MAX_EXHAUSTIVE_BITS}")
    return c.evaluate_codes(np.arange(2 ** c.in_bits, dtype=np.int64))


class CircuitBuilder:
    """Incremental NAND circuit construction with the usual derived gates."""

    def __init__(self, n_inputs: int):
        self.n_inputs = n_inputs
        self.gates: list[tuple[int, int]] = []
        self._zero: int | None = None

    @property
    def inputs(self) -> list[int]:
        return list(range(self.n_inputs))

    def nand(self, a: int, b: int) -> int:
        self.gates.append((a, b))
        return self.n_inputs + len(self.gates) - 1

    def not_(self, a: int) -> int:
        return self.nand(a, a)

    def and_(self, a: int, b: int) -> int:
        return self.not_(self.nand(a, b))

    def or_(self, a: int, b: int) -> int:
        return self.nand(self.not_(a), self.not_(b))

    def xor(self, a: int, b: int) -> int:
        t = self.nand(a, b)
        return self.nand(self.nand(a, t), self.nand(b, t))

    def eq(self, a: int, b: int) -> int:
        return self.not_(self.xor(a, b))

    def const(self, value: int) -> int:
        if self.n_inputs == 0:
            raise ClassicalCircuitError("constants are derived from an input wire; need at least one input")
        if self._zero is None:
            self._zero = self.and_(0, self.not_(0))
        return self.not_(self._zero) if value else self._zero

    def and_all(self, wires: Sequence[int]) -> int:
        wires = list(wires)
        if not wires:
            return self.const(1)
        acc = wires[0]
        for w in wires[1:]:
            acc = self.and_(acc, w)
        return acc

    def or_all(self, wires: Sequence[int]) -> int:
        wires = list(wires)
        if not wires:
            return self.const(0)
        acc = wires[0]
        for w in wires[1:]:
            acc = self.or_(acc, w)
        return acc

    def equal_words(self, xs: Sequence[int], ys: Sequence[int]) -> int:
        return self.and_all([self.eq(a, b) for a, b in zip(xs, ys)])

    def embed(self, c: ClassicalCircuit, inputs: Sequence[int]) -> list[int]:
        """Copy ``c`` with its inputs wired to ``inputs``; returns the output wires."""
        if len(inputs) != c.in_bits:
            raise ClassicalCircuitError(f"embedding needs {c.in_bits} wires, got {len(inputs)}")
        mapping = list(inputs)
        for a, b in c.gates:
            mapping.append(self.nand(mapping[a], mapping[b]))
        return [mapping[o] for o in c.outputs]

    def build(self, outputs: Sequence[int]) -> ClassicalCircuit:
        return ClassicalCircuit(self.n_inputs, tuple(self.gates), tuple(outputs))


def from_truth_table(n_inputs: int, n_outputs: int, fn: Callable[[int], int]) -> ClassicalCircuit:
    """Sum-of-minterms circuit for an arbitrary function on integer codes."""
    b = CircuitBuilder(n_inputs)
    negs = [b.not_(i) for i in range(n_inputs)]
    minterm = {}
    outs = []
    for bit in range(n_outputs):
        terms = []
        for v in range(2 ** n_inputs):
            if (fn(v) >> (n_outputs - 1 - bit)) & 1:
                if v not in minterm:
                    lits = [i if (v >> (n_inputs - 1 - i)) & 1 else negs[i] for i in range(n_inputs)]
                    minterm[v] = b.and_all(lits)
                terms.append(minterm[v])
        outs.append(b.or_all(terms))
    return b.build(outs)


def identity_classical(n: int) -> ClassicalCircuit:
    return ClassicalCircuit(n, (), tuple(range(n)))


def constant_classical(n_in: int, value: str) -> ClassicalCircuit:
    b = CircuitBuilder(n_in)
    return b.build([b.const(int(ch)) for ch in value])


# deterministic clique / independent set ------------------------------------

def has_k_clique(c: ClassicalCircuit, k: int):
    """(True, witness) if k distinct inputs share an image, else (False, None)."""
    table = function_table(c)
    values, counts = np.unique(table, return_counts=True)
    hit = np.nonzero(counts >= k)[0]
    if k < 1 or len(hit) == 0:
        return False, None
    xs = np.nonzero(table == values[hit[0]])[0][:k]
    return True, tuple(int_to_bits(int(x), c.in_bits) for x in xs)


def has_k_is(c: ClassicalCircuit, k: int):
    """(True, witness) if k distinct inputs have pairwise distinct images."""
    table = function_table(c)
    values, first = np.unique(table, return_index=True)
    if k < 1 or len(values) < k:
        return False, None
    return True, tuple(int_to_bits(int(x), c.in_bits) for x in sorted(first[:k]))


# probabilistic circuits ----------------------------------------------------

def _register_width(r: int) -> int:
    return max(1, math.ceil(math.log2(r)))


@dataclass(frozen=True)
class ProbabilisticCircuit:
    """A circuit whose final ``random_bits`` inputs are random.

    ``random_ranges`` splits the random wires into consecutive registers;
    a register with range ``r`` spans ``max(1, ceil(log2 r))`` wires and is
    uniform over the codes ``0..r-1``.  The default is independent uniform bits.
    """

    base: ClassicalCircuit
    random_bits: int
    random_ranges: tuple | None = None

    def __post_init__(self):
        if not 0 <= self.random_bits <= self.base.in_bits:
            raise ClassicalCircuitError("random_bits exceeds the circuit's inputs")
        if self.random_bits > MAX_RANDOM_BITS:
            raise SizeLimitError(f"{self.random_bits} random bits exceed the limit {MAX_RANDOM_BITS}")
        if self.random_ranges is not None:
            ranges = tuple(int(r) for r in self.random_ranges)
            if any(r < 1 for r in ranges) or sum(_register_width(r) for r in ranges) != self.random_bits:
                raise ClassicalCircuitError("random_ranges do not tile the random wires")
            object.__setattr__(self, "random_ranges", ranges)

    @property
    def in_bits(self) -> int:
        return self.base.in_bits - self.random_bits

    @property
    def out_bits(self) -> int:
        return self.base.out_bits

    @property
    def size(self) -> int:
        return self.base.size

    @property
    def ranges(self) -> tuple:
        return self.random_ranges if self.random_ranges is not None else (2,) * self.random_bits

    def random_codes(self) -> np.ndarray:
        """All equally likely random-wire assignments as integer codes."""
        code = np.zeros(1, dtype=np.int64)
        for r in self.ranges:
            w = _register_width(r)
            code = (code[:, None] << w | np.arange(r, dtype=np.int64)[None, :]).ravel()
        return code

    def outcome_counts(self, x) -> dict[int, int]:
        """Exact output histogram over the random assignments for input ``x``."""
        xi = bits_to_int(_parse_bits(x, self.in_bits))
        rc = self.random_codes()
        codes = (np.int64(xi) << self.random_bits) | rc
        out = self.base.evaluate_codes(codes)
        values, counts = np.unique(out, return_counts=True)
        return {int(v): int(n) for v, n in zip(values, counts)}

    def distribution(self, x) -> dict[str, Fraction]:
        counts = self.outcome_counts(x)
        total = sum(counts.values())
        return {int_to_bits(v, self.out_bits): Fraction(n, total) for v, n in counts.items()}

    def to_dict(self) -> dict:
        d = self.base.to_dict()
        d["random_bits"] = self.random_bits
        if self.random_ranges is not None:
            d["random_ranges"] = list(self.random_ranges)
        return d


def as_probabilistic(c) -> ProbabilisticCircuit:
    return c if isinstance(c, ProbabilisticCircuit) else ProbabilisticCircuit(c, 0)


def collision_prob(c, x, x_prime) -> Fraction:
    """``Σ_y Pr[f(x)=y] Pr[f(x')=y]`` for independent evaluations, exactly."""
    pc = as_probabilistic(c)
    a, b = pc.outcome_counts(x), pc.outcome_counts(x_prime)
    total = len(pc.random_codes())
    return Fraction(sum(n * b.get(v, 0) for v, n in a.items()), total * total)


def p_tuple_value(c, xs: Sequence) -> Fraction:
    """Average pairwise collision probability of k distinct inputs."""
    pc = as_probabilistic(c)
    keys = [_parse_bits(x, pc.in_bits) for x in xs]
    if len(keys) < 2:
        raise ValueError("need at least two inputs")
    if len(set(keys)) != len(keys):
        raise ClassicalCircuitError("inputs of a tuple must be distinct")
    k = len(keys)
    total = sum(collision_prob(pc, keys[i], keys[j]) for i, j in combinations(range(k), 2))
    return total * Fraction(2, k * (k - 1))


def collision_matrix(c):
    """Integer matrix ``G`` and denominator ``D`` with ``G[x, x'] / D`` the collision probability."""
    pc = as_probabilistic(c)
    if pc.in_bits > 12:
        raise SizeLimitError("pairwise collision tables are limited to 12 input bits")
    rc = pc.random_codes()
    xs = np.arange(2 ** pc.in_bits, dtype=np.int64)
    codes = ((xs[:, None] << pc.random_bits) | rc[None, :]).ravel()
    out = pc.base.evaluate_codes(codes).reshape(len(xs), len(rc))
    values, inverse = np.unique(out, return_inverse=True)
    hist = np.zeros((len(xs), len(values)), dtype=np.int64)
    np.add.at(hist, (np.repeat(np.arange(len(xs)), len(rc)), inverse.ravel()), 1)
    return hist @ hist.T, len(rc) ** 2


def best_pair(c, kind: str = "clique"):
    """Exact extreme pair value over all distinct input pairs: (value, (x, x'))."""
    pc = as_probabilistic(c)
    g, denom = collision_matrix(pc)
    n = g.shape[0]
    if n < 2:
        raise ClassicalCircuitError("need at least two inputs")
    masked = g.astype(float)
    fill = -1.0 if kind == "clique" else np.inf
    np.fill_diagonal(masked, fill)
    idx = int(np.argmax(masked) if kind == "clique" else np.argmin(masked))
    i, j = divmod(idx, n)
    return Fraction(int(g[i, j]), denom), (int_to_bits(i, pc.in_bits), int_to_bits(j, pc.in_bits))


def best_tuple(c, k: int, kind: str = "clique"):
    """Exact extreme k-tuple value by enumeration of all distinct k-subsets."""
    pc = as_probabilistic(c)
    g, denom = collision_matrix(pc)
    n = g.shape[0]
    best, arg = None, None
    for sub in combinations(range(n), k):
        s = sum(int(g[i, j]) for i, j in combinations(sub, 2))
        if best is None or (s > best if kind == "clique" else s < best):
            best, arg = s, sub
    if arg is None:
        raise ClassicalCircuitError("fewer than k inputs")
    value = Fraction(best, denom) * Fraction(2, k * (k - 1))
    return value, tuple(int_to_bits(i, pc.in_bits) for i in arg)


# NP and MA reductions -----------------------------------------------------

def _split_verifier(v: ClassicalCircuit, x) -> tuple[str, int]:
    if v.out_bits != 1:
        raise ClassicalCircuitError("a verifier has exactly one output bit")
    xs = x if isinstance(x, str) else "".join(str(int(b)) for b in x)
    if set(xs) - {"0", "1"} or len(xs) > v.in_bits:
        raise ClassicalCircuitError("instance does not fit the verifier's inputs")
    return xs, v.in_bits - len(xs)


def _bake(b: CircuitBuilder, xs: str) -> list[int]:
    return [b.const(int(ch)) for ch in xs]


def np_reduce_clique(v: ClassicalCircuit, x) -> ClassicalCircuit:
    """``f_x(y, b) = (y, b OR V(x, y))``."""
    xs, p = _split_verifier(v, x)
    b = CircuitBuilder(p + 1)
    ys, flag = list(range(p)), p
    acc = b.embed(v, _bake(b, xs) + ys)[0]
    return b.build(ys + [b.or_(flag, acc)])


def np_reduce_is(v: ClassicalCircuit, x) -> ClassicalCircuit:
    """``f_x(y) = (y_1 AND V(x, y), NOT y_1 AND V(x, y))``."""
    xs, p = _split_verifier(v, x)
    if p < 1:
        raise ClassicalCircuitError("the proof needs at least one bit")
    b = CircuitBuilder(p)
    acc = b.embed(v, _bake(b, xs) + list(range(p)))[0]
    return b.build([b.and_(0, acc), b.and_(b.not_(0), acc)])


def _split_prob_verifier(v: ProbabilisticCircuit, x):
    xs, rest = _split_verifier(v.base, x)
    p = rest - v.random_bits
    if p < 0:
        raise ClassicalCircuitError("instance overlaps the random wires")
    return xs, p


def ma_reduce_clique(v: ProbabilisticCircuit, x) -> ProbabilisticCircuit:
    """``f(y, b) = (y, V(x, y) OR b)`` with the verifier's randomness passed through."""
    xs, p = _split_prob_verifier(v, x)
    m = v.random_bits
    b = CircuitBuilder(p + 1 + m)
    ys, flag, rs = list(range(p)), p, list(range(p + 1, p + 1 + m))
    acc = b.embed(v.base, _bake(b, xs) + ys + rs)[0]
    return ProbabilisticCircuit(b.build(ys + [b.or_(flag, acc)]), m, v.random_ranges)


def ma_reduce_is(v: ProbabilisticCircuit, x) -> ProbabilisticCircuit:
    xs, p = _split_prob_verifier(v, x)
    if p < 1:
        raise ClassicalCircuitError("the proof needs at least one bit")
    m = v.random_bits
    b = CircuitBuilder(p + m)
    acc = b.embed(v.base, _bake(b, xs) + list(range(p)) + list(range(p, p + m)))[0]
    return ProbabilisticCircuit(b.build([b.and_(0, acc), b.and_(b.not_(0), acc)]), m, v.random_ranges)


def threshold_verifier(proof_bits: int, accept_counts: Sequence[int], denominator: int,
                       instance_bits: int = 0) -> ProbabilisticCircuit:
    """Toy verifier accepting proof ``y`` with probability ``accept_counts[y] / denominator``.

    Inputs are (x, y, r) with one random register uniform over ``range(denominator)``;
    the instance bits are ignored.
    """
    if len(accept_counts) != 2 ** proof_bits:
        raise ValueError("need one acceptance count per proof")
    w = _register_width(denominator)
    n = instance_bits + proof_bits

    def fn(code: int) -> int:
        y = (code >> w) & ((1 << proof_bits) - 1)
        r = code & ((1 << w) - 1)
        return int(r < accept_counts[y])

    base = from_truth_table(n + w, 1, fn)
    return ProbabilisticCircuit(base, w, (denominator,))


# k -> 2 reductions -----------------------------------------------------------

def _distinct_words(b: CircuitBuilder, words: Sequence[Sequence[int]]) -> int:
    return b.and_all([b.not_(b.equal_words(u, v)) for u, v in combinations(words, 2)])


def k_to_2_clique_det(c: ClassicalCircuit, k: int) -> ClassicalCircuit:
    """``g(x_1..x_k, b)``: raises the flag when the x_i are distinct and collide under f."""
    if k < 2:
        raise ValueError("k must be at least 2")
    n = c.in_bits
    b = CircuitBuilder(k * n + 1)
    xs = [list(range(i * n, (i + 1) * n)) for i in range(k)]
    flag = k * n
    fx = [b.embed(c, w) for w in xs]
    same = b.and_all([b.equal_words(fx[0], f) for f in fx[1:]])
    hit = b.and_(same, _distinct_words(b, xs))
    return b.build([w for word in xs for w in word] + [b.or_(flag, hit)])


def k_to_2_is_det(c: ClassicalCircuit, k: int) -> ClassicalCircuit:
    """``g(x_1..x_k) = 1`` iff the inputs are distinct and so are their images."""
    if k < 2:
        raise ValueError("k must be at least 2")
    n = c.in_bits
    b = CircuitBuilder(k * n)
    xs = [list(range(i * n, (i + 1) * n)) for i in range(k)]
    fx = [b.embed(c, w) for w in xs]
    return b.build([b.and_(_distinct_words(b, xs), _distinct_words(b, fx))])


def _pair_selector(b: CircuitBuilder, tag: Sequence[int], k: int):
    """Indicator wire per pair index (i, j), i < j, decoded from the tag register."""
    pairs = list(combinations(range(k), 2))
    width = len(tag)
    neg = [b.not_(t) for t in tag]
    sel = []
    for s in range(len(pairs)):
        lits = [tag[i] if (s >> (width - 1 - i)) & 1 else neg[i] for i in range(width)]
        sel.append(b.and_all(lits))
    return pairs, sel


def _mux(b: CircuitBuilder, sel: Sequence[int], words: Sequence[Sequence[int]]) -> list[int]:
    return [b.or_all([b.and_(s, w[i]) for s, w in zip(sel, words)]) for i in range(len(words[0]))]


def _k_to_2_prob_frame(f: ProbabilisticCircuit, k: int, extra_inputs: int):
    n, m = f.in_bits, f.random_bits
    n_pairs = k * (k - 1) // 2
    tag_w = _register_width(n_pairs)
    n_det = k * n + extra_inputs
    b = CircuitBuilder(n_det + tag_w + 2 * m)
    xs = [list(range(i * n, (i + 1) * n)) for i in range(k)]
    tag = list(range(n_det, n_det + tag_w))
    r1 = list(range(n_det + tag_w, n_det + tag_w + m))
    r2 = list(range(n_det + tag_w + m, n_det + tag_w + 2 * m))
    pairs, sel = _pair_selector(b, tag, k)
    left = _mux(b, sel, [xs[i] for i, _ in pairs]) if n else []
    right = _mux(b, sel, [xs[j] for _, j in pairs]) if n else []
    fi = b.embed(f.base, left + r1)
    fj = b.embed(f.base, right + r2)
    ranges = (n_pairs,) + f.ranges * 2
    return b, xs, tag, b.equal_words(fi, fj), ranges


def k_to_2_clique_prob(f, k: int) -> ProbabilisticCircuit:
    """``g(x, b) = (x, b OR [f(x_i)=f(x_j)], b OR d, (i, j))`` with (i, j) uniform over pairs."""
    f = as_probabilistic(f)
    if k < 2:
        raise ValueError("k must be at least 2")
    b, xs, tag, same, ranges = _k_to_2_prob_frame(f, k, 1)
    flag = k * f.in_bits
    d = _distinct_words(b, xs)
    outs = [w for word in xs for w in word] + [b.or_(flag, same), b.or_(flag, d)] + tag
    return ProbabilisticCircuit(b.build(outs), b.n_inputs - k * f.in_bits - 1, ranges)


def k_to_2_is_prob(f, k: int) -> ProbabilisticCircuit:
    """``g(x) = (d_ij, (i, j))`` with d_ij = [x distinct and f(x_i) != f(x_j)]."""
    f = as_probabilistic(f)
    if k < 3:
        raise ValueError("the probabilistic IS reduction needs k >= 3")
    b, xs, tag, same, ranges = _k_to_2_prob_frame(f, k, 0)
    d = b.and_(_distinct_words(b, xs), b.not_(same))
    return ProbabilisticCircuit(b.build([d] + tag), b.n_inputs - k * f.in_bits, ranges)


def k_to_2_clique_map(alpha, k: int):
    return alpha * Fraction(2, k * (k - 1))


def k_to_2_is_map(alpha, k: int):
    return 1 - (1 - alpha) * Fraction(2, k * (k - 1))


# CNF ------------------------------------------------------------------------

@dataclass(frozen=True)
class CNF:
    n_vars: int
    clauses: tuple

    def satisfied_by(self, assignment: str) -> bool:
        return all(any((assignment[abs(l) - 1] == "1") != (l < 0) for l in cl) for cl in self.clauses)


def parse_dimacs(text: str) -> CNF:
    n_vars, clauses, current = None, [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) < 4 or parts[1] != "cnf":
                raise ClassicalCircuitError(f"line {lineno}: malformed problem line")
            n_vars = int(parts[2])
            continue
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ClassicalCircuitError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                if current:
                    clauses.append(tuple(current))
                current = []
            else:
                if n_vars is not None and abs(lit) > n_vars:
                    raise ClassicalCircuitError(f"line {lineno}: variable {abs(lit)} exceeds {n_vars}")
                current.append(lit)
    if current:
        clauses.append(tuple(current))
    if n_vars is None:
        n_vars = max((abs(l) for cl in clauses for l in cl), default=0)
    return CNF(n_vars, tuple(clauses))


def load_dimacs(path) -> CNF:
    return parse_dimacs(Path(path).read_text())


def brute_force_sat(cnf: CNF):
    """(True, assignment) for the first satisfying assignment in counting order, else (False, None)."""
    for v in range(2 ** cnf.n_vars):
        a = int_to_bits(v, cnf.n_vars)
        if cnf.satisfied_by(a):
            return True, a
    return False, None


def cnf_verifier(cnf: CNF) -> ClassicalCircuit:
    """Verifier V(x, y) for formulas with this clause/variable skeleton.

    ``x`` carries one polarity bit per literal occurrence (1 = negated) and
    ``y`` is the assignment; see :func:`cnf_instance_bits`.
    """
    n_lits = sum(len(cl) for cl in cnf.clauses)
    b = CircuitBuilder(n_lits + cnf.n_vars)
    y0 = n_lits
    clause_wires, pos = [], 0
    for cl in cnf.clauses:
        lits = []
        for lit in cl:
            lits.append(b.xor(y0 + abs(lit) - 1, pos))
            pos += 1
        clause_wires.append(b.or_all(lits))
    return b.build([b.and_all(clause_wires)])


def cnf_instance_bits(cnf: CNF) -> str:
    return "".join("1" if lit < 0 else "0" for cl in cnf.clauses for lit in cl)


# file format ------------------------------------------------------------------

def classical_from_dict(doc: dict):
    try:
        gates = []
        for i, g in enumerate(doc["gates"]):
            if str(g.get("op", "")).upper() != "NAND":
                raise ClassicalCircuitError(f"gate {i}: only NAND gates are supported, got {g.get('op')!r}")
            gates.append(tuple(g["in"]))
        base = ClassicalCircuit(int(doc["in_bits"]), tuple(gates), tuple(doc["outputs"]))
    except KeyError as exc:
        raise ClassicalCircuitError(f"missing field {exc}") from None
    if doc.get("random_bits"):
        ranges = doc.get("random_ranges")
        return ProbabilisticCircuit(base, int(doc["random_bits"]), tuple(ranges) if ranges else None)
    return base


def load_classical(path):
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ClassicalCircuitError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return classical_from_dict(doc)


def save_classical(c, path) -> None:
    Path(path).write_text(json.dumps(c.to_dict(), indent=1))


def all_functions(n_in: int, n_out: int):
    """Every function {0,1}^n_in -> {0,1}^n_out as a truth-table circuit."""
    for table in product(range(2 ** n_out), repeat=2 ** n_in):
        yield table, from_truth_table(n_in, n_out, lambda v, t=table: t[v])
