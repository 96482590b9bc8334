"""Dense complex linear algebra for small multi-qubit systems.

Operators are plain ``numpy`` arrays.  :class:`DensityOperator` and
:class:`PureState` are thin validated wrappers that also remember the
subsystem layout (``dims``) needed by :func:`partial_trace`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .config import settings

logger = logging.getLogger(__name__)


class DimensionError(ValueError):
    """Raised when operand shapes or register layouts do not match."""


class ValidationError(ValueError):
    """Raised when an object violates a physical invariant (hermiticity, trace...)."""


def _prod(dims: Iterable[int]) -> int:
    return int(reduce(lambda a, b: a * b, dims, 1))


def as_matrix(x) -> np.ndarray:
    """Return the underlying complex matrix of a state or array-like."""
    if isinstance(x, DensityOperator):
        return x.matrix
    if isinstance(x, PureState):
        return x.density().matrix
    return np.asarray(x, dtype=complex)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Positive unit-trace matrix over registers of dimensions ``dims``."""

    matrix: np.ndarray
    dims: tuple = field(default=None)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got shape {m.shape}")
        dims = (m.shape[0],) if self.dims is None else tuple(int(d) for d in self.dims)
        if _prod(dims) != m.shape[0]:
            raise DimensionError(f"register dims {dims} do not multiply to {m.shape[0]}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("density matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)
        if self.check:
            self.validate()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self) -> None:
        m = self.matrix
        herm_err = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if herm_err > settings.herm:
            raise ValidationError(f"not Hermitian (max deviation {herm_err:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > settings.trace:
            raise ValidationError(f"trace {tr!r} differs from 1")
        lam_min = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
        if lam_min < -settings.psd:
            raise ValidationError(f"negative eigenvalue {lam_min:.3e}")

    @classmethod
    def maximally_mixed(cls, dims: Sequence[int] | int) -> "DensityOperator":
        dims = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
        d = _prod(dims)
        return cls(np.eye(d, dtype=complex) / d, dims)

    @classmethod
    def from_vector(cls, vec, dims=None) -> "DensityOperator":
        v = np.asarray(vec, dtype=complex).reshape(-1)
        return cls(np.outer(v, v.conj()), dims if dims is not None else (v.size,))

    @classmethod
    def basis(cls, index: int, dims: Sequence[int]) -> "DensityOperator":
        d = _prod(dims)
        m = np.zeros((d, d), dtype=complex)
        m[index, index] = 1.0
        return cls(m, dims)

    def tensor(self, other: "DensityOperator") -> "DensityOperator":
        return DensityOperator(np.kron(self.matrix, other.matrix), self.dims + other.dims, check=False)

    def purity(self) -> float:
        return overlap(self, self)


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector over registers of dimensions ``dims``."""

    amplitudes: np.ndarray
    dims: tuple = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        dims = (v.size,) if self.dims is None else tuple(int(d) for d in self.dims)
        if _prod(dims) != v.size:
            raise DimensionError(f"register dims {dims} do not multiply to {v.size}")
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > settings.norm:
            raise ValidationError(f"state norm {nrm!r} differs from 1")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "dims", dims)

    def density(self) -> DensityOperator:
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims, check=False)

    def tensor(self, other: "PureState") -> "PureState":
        return PureState(np.kron(self.amplitudes, other.amplitudes), self.dims + other.dims)


def ket(bits: str | Sequence[int]) -> np.ndarray:
    """Computational basis vector for a bitstring such as ``"010"``."""
    bits = [int(b) for b in bits]
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(map(str, bits)) or "0", 2)] = 1.0
    return v


def tensor(*ops) -> np.ndarray:
    """Kronecker product of any number of arrays (vectors or matrices)."""
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


# norms and overlaps ---------------------------------------------------------

def _square(a) -> np.ndarray:
    a = as_matrix(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def trace_norm(a) -> float:
    """Half the sum of singular values, ``½ Tr sqrt(A†A)``."""
    a = _square(a)
    if a.size == 0:
        return 0.0
    return 0.5 * float(np.sum(np.linalg.svd(a, compute_uv=False)))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a)))


def overlap(rho, sigma) -> float:
    """Hilbert-Schmidt overlap ``Tr(rho sigma)`` of two states; round-off negatives become 0."""
    a, b = _square(rho), _square(sigma)
    if a.shape != b.shape:
        raise DimensionError(f"overlap of {a.shape} and {b.shape} operators")
    val = float(np.real(np.sum(a * b.T)))
    if val < 0 and val >= -max(settings.psd, 1e-12):
        val = 0.0
    return val


# subsystem operations -------------------------------------------------------

def partial_trace(rho, keep: Sequence[int], dims: Sequence[int] | None = None):
    """Marginal on the registers listed in ``keep`` (in that order).

    ``rho`` may be a :class:`DensityOperator` (dims taken from it, result is a
    DensityOperator) or a raw matrix together with ``dims`` (result is a matrix).
    """
    wrap = isinstance(rho, DensityOperator)
    if wrap:
        dims = rho.dims
    elif dims is None:
        raise DimensionError("dims are required for a raw matrix")
    m = _square(rho)
    dims = tuple(int(d) for d in dims)
    if _prod(dims) != m.shape[0]:
        raise DimensionError(f"dims {dims} do not match matrix of size {m.shape[0]}")
    keep = [int(k) for k in keep]
    n = len(dims)
    if len(set(keep)) != len(keep) or any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"invalid register selection {keep} for {n} registers")
    t = m.reshape(dims + dims)
    # traced registers share their row and column subscript
    row = list(range(n))
    col = [n + i if i in keep else i for i in range(n)]
    out = keep + [n + k for k in keep]
    res = np.einsum(t, row + col, out)
    d_keep = _prod(dims[k] for k in keep)
    res = res.reshape(d_keep, d_keep)
    if wrap:
        return DensityOperator(res, tuple(dims[k] for k in keep), check=False)
    return res


def spectral_decomposition(rho) -> tuple[np.ndarray, list[PureState]]:
    """Eigenvalues in descending order with orthonormal eigenvectors."""
    m = _square(rho)
    herm_err = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if herm_err > settings.herm:
        raise ValidationError(f"not Hermitian (max deviation {herm_err:.3e})")
    lam, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    order = np.argsort(-lam, kind="stable")
    lam, vecs = lam[order], vecs[:, order]
    dims = rho.dims if isinstance(rho, DensityOperator) else None
    recon = (vecs * lam) @ vecs.conj().T
    err = np.linalg.norm(recon - m)
    if err > settings.eig:
        raise ValidationError(f"eigen reconstruction error {err:.3e}")
    return lam, [PureState(vecs[:, i], dims) for i in range(vecs.shape[1])]


def top_eigenvector(a) -> np.ndarray:
    lam, vecs = np.linalg.eigh(0.5 * (a + a.conj().T))
    return vecs[:, -1]


def psd_sqrt(a) -> np.ndarray:
    """Square root of a positive semidefinite matrix (negative round-off clipped)."""
    a = _square(a)
    lam, vecs = np.linalg.eigh(0.5 * (a + a.conj().T))
    return (vecs * np.sqrt(np.clip(lam, 0.0, None))) @ vecs.conj().T


def nearest_isometry(psi, full: bool = False):
    """Closest matrix with orthonormal columns in Frobenius norm (orthogonal Procrustes).

    With ``full=True`` also returns the singular values and a flag that is set
    when the smallest singular value is below 1e-12 (rank deficiency).
    """
    psi = as_matrix(psi)
    if psi.ndim != 2 or psi.shape[1] > psi.shape[0]:
        raise DimensionError(f"need rows >= cols, got shape {psi.shape}")
    u, s, vh = np.linalg.svd(psi, full_matrices=False)
    iso = u @ vh
    deficient = bool(s.size and s[-1] < 1e-12)
    if deficient:
        logger.debug("nearest_isometry: rank-deficient input (smallest singular value %.3e)", s[-1])
    if full:
        return iso, s, deficient
    return iso


def is_unitary(u, tol: float | None = None) -> bool:
    u = as_matrix(u)
    tol = settings.unitary if tol is None else tol
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def swap_operator(d: int) -> np.ndarray:
    """Operator exchanging the two factors of C^d ⊗ C^d."""
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1.0
    return s


def symmetric_projector(d: int) -> np.ndarray:
    """Projector onto the symmetric subspace of C^d ⊗ C^d."""
    return 0.5 * (np.eye(d * d, dtype=complex) + swap_operator(d))


# random objects -------------------------------------------------------------

def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phases of R fixed."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def haar_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_frame(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """``d x k`` matrix with Haar-random orthonormal columns."""
    return haar_unitary(d, rng)[:, :k]


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


# JSON helpers ---------------------------------------------------------------

def encode_matrix(a) -> list:
    """Nested list of ``[re, im]`` pairs (row-major)."""
    a = np.atleast_2d(as_matrix(a))
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def encode_vector(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).reshape(-1)]


def _decode_entry(z) -> complex:
    if isinstance(z, (list, tuple)):
        if len(z) != 2:
            raise ValueError(f"complex entry must be [re, im], got {z!r}")
        return complex(float(z[0]), float(z[1]))
    return complex(z)


def decode_matrix(rows) -> np.ndarray:
    """Inverse of :func:`encode_matrix`; plain real numbers are accepted too."""
    out = np.array([[_decode_entry(z) for z in row] for row in rows], dtype=complex)
    if out.ndim != 2:
        raise ValueError("matrix must be a list of rows")
    return out


def decode_vector(entries) -> np.ndarray:
    return np.array([_decode_entry(z) for z in entries], dtype=complex)
