"""Dense finite-dimensional complex linear algebra.

States and operators are thin immutable wrappers around complex numpy arrays.
The ``kind`` tag on :class:`Operator` is checked at construction, so a value
tagged ``hermitian``/``unitary``/``projector`` is guaranteed to satisfy that
property to :data:`STRUCT_TOL`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NotNormalized

STRUCT_TOL = 1e-10
EQ_TOL = 1e-12

_KINDS = ("general", "hermitian", "unitary", "projector")


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite amplitudes")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVec:
    """Ket vector. ``normalized`` asserts unit norm and is validated."""

    amps: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        amps = _frozen(self.amps)
        if amps.ndim != 1 or amps.size == 0:
            raise ValueError("state amplitudes must be a non-empty 1-d array")
        object.__setattr__(self, "amps", amps)
        if self.normalized and abs(np.vdot(amps, amps).real - 1.0) > STRUCT_TOL:
            raise NotNormalized("state flagged normalized has norm %r" % np.linalg.norm(amps))

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def unit(self) -> "StateVec":
        n = self.norm()
        if n == 0.0:
            raise NotNormalized("cannot normalize the zero vector")
        return StateVec(self.amps / n, normalized=True)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amps, dtype=dtype)

    def __repr__(self):
        return f"StateVec({np.array2string(self.amps, precision=6)}, normalized={self.normalized})"


@dataclass(frozen=True, eq=False)
class Operator:
    """Square matrix with a validated structural tag."""

    entries: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        m = _frozen(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError("operator must be a non-empty square matrix")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        object.__setattr__(self, "entries", m)
        if self.kind in ("hermitian", "projector") and not is_hermitian(m):
            raise NotHermitian(f"{self.kind}-tagged operator is not Hermitian")
        if self.kind == "unitary":
            dev = np.abs(m.conj().T @ m - np.eye(m.shape[0])).max()
            if dev > STRUCT_TOL:
                raise ValueError(f"unitary-tagged operator deviates by {dev:.3e}")
        if self.kind == "projector" and np.abs(m @ m - m).max() > STRUCT_TOL:
            raise ValueError("projector-tagged operator is not idempotent")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_hermitian(self) -> bool:
        return self.kind in ("hermitian", "projector") or is_hermitian(self.entries)

    def dag(self) -> "Operator":
        return Operator(self.entries.conj().T, self.kind)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def __matmul__(self, other):
        if isinstance(other, StateVec):
            _check_dims(self.dim, other.dim)
            return StateVec(self.entries @ other.amps)
        if isinstance(other, Operator):
            _check_dims(self.dim, other.dim)
            kind = "unitary" if self.kind == other.kind == "unitary" else "general"
            prod = self.entries @ other.entries
            if kind == "unitary" and np.abs(prod.conj().T @ prod - np.eye(self.dim)).max() > STRUCT_TOL:
                kind = "general"
            return Operator(prod, kind)
        return NotImplemented

    def _lin(self, other, sign):
        if not isinstance(other, Operator):
            return NotImplemented
        _check_dims(self.dim, other.dim)
        kind = "hermitian" if self.is_hermitian and other.is_hermitian else "general"
        return Operator(self.entries + sign * other.entries, kind)

    def __add__(self, other):
        return self._lin(other, 1.0)

    def __sub__(self, other):
        return self._lin(other, -1.0)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        real = np.isrealobj(scalar) or complex(scalar).imag == 0.0
        kind = "hermitian" if real and self.is_hermitian else "general"
        return Operator(self.entries * scalar, kind)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __repr__(self):
        return f"Operator(kind={self.kind!r}, dim={self.dim})"


def is_hermitian(m: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.abs(m - m.conj().T).max() <= tol)


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatch(f"dimension mismatch: {a} vs {b}")


def _amps(v) -> np.ndarray:
    return v.amps if isinstance(v, StateVec) else np.asarray(v, dtype=np.complex128)


def _mat(m) -> np.ndarray:
    return m.entries if isinstance(m, Operator) else np.asarray(m, dtype=np.complex128)


# -- constructors ------------------------------------------------------------

def basis(dim: int, k: int) -> StateVec:
    v = np.zeros(dim, dtype=np.complex128)
    v[k] = 1.0
    return StateVec(v, normalized=True)


def state(*amps, normalize: bool = True) -> StateVec:
    v = StateVec(np.asarray(amps, dtype=np.complex128).ravel())
    return v.unit() if normalize else v


def identity(dim: int) -> Operator:
    return Operator(np.eye(dim), "unitary")


def zeros(dim: int) -> Operator:
    return Operator(np.zeros((dim, dim)), "hermitian")


SIGMA_X = Operator(np.array([[0, 1], [1, 0]]), "hermitian")
SIGMA_Y = Operator(np.array([[0, -1j], [1j, 0]]), "hermitian")
SIGMA_Z = Operator(np.array([[1, 0], [0, -1]]), "hermitian")
IDENTITY_2 = Operator(np.eye(2), "hermitian")

PAULI = {
    "sigma_x": SIGMA_X,
    "sigma_y": SIGMA_Y,
    "sigma_z": SIGMA_Z,
    "identity": IDENTITY_2,
}


# -- core operations ---------------------------------------------------------

def inner(a: StateVec, b: StateVec) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    x, y = _amps(a), _amps(b)
    _check_dims(x.shape[0], y.shape[0])
    return complex(np.vdot(x, y))


def outer(f: StateVec) -> Operator:
    """Rank-one projector |f><f| of a normalized state."""
    if not isinstance(f, StateVec) or not f.normalized:
        if abs(np.linalg.norm(_amps(f)) - 1.0) > STRUCT_TOL:
            raise NotNormalized("outer() requires a normalized state")
    v = _amps(f)
    return Operator(np.outer(v, v.conj()), "projector")


def matrix_element(bra: StateVec, op: Operator, ket: StateVec) -> complex:
    """<bra|op|ket>."""
    m = _mat(op)
    _check_dims(m.shape[0], _amps(ket).shape[0])
    return inner(bra, StateVec(m @ _amps(ket)))


def mat_exp_unitary(H: Operator, s: float) -> Operator:
    """exp(-i s H) for Hermitian ``H`` via its eigendecomposition."""
    if not isinstance(H, Operator):
        H = Operator(H)
    if not H.is_hermitian:
        raise NotHermitian("mat_exp_unitary needs a Hermitian generator")
    if not np.isfinite(s):
        raise ValueError("exponent scale must be finite")
    return Operator(expm_hermitian(H.entries, s), "unitary")


def expm_hermitian(h: np.ndarray, s: float = 1.0) -> np.ndarray:
    """exp(-i s h) for one Hermitian matrix or a stack of them (``[..., d, d]``)."""
    h = np.asarray(h, dtype=np.complex128)
    # symmetrize so eigh sees an exactly Hermitian input
    h = 0.5 * (h + np.swapaxes(h.conj(), -1, -2))
    w, v = np.linalg.eigh(h)
    phase = np.exp(-1j * s * w)
    return (v * phase[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def tensor(a, b):
    """Kronecker product of two states or two operators."""
    if isinstance(a, StateVec) and isinstance(b, StateVec):
        return StateVec(np.kron(a.amps, b.amps), normalized=a.normalized and b.normalized)
    if isinstance(a, Operator) and isinstance(b, Operator):
        kinds = {a.kind, b.kind}
        kind = kinds.pop() if len(kinds) == 1 else "general"
        if kind == "general" and a.is_hermitian and b.is_hermitian:
            kind = "hermitian"
        return Operator(np.kron(a.entries, b.entries), kind)
    raise TypeError("tensor() operands must both be StateVec or both Operator")


def tensor_all(items: Iterable):
    items = list(items)
    if not items:
        raise ValueError("tensor_all needs at least one factor")
    out = items[0]
    for x in items[1:]:
        out = tensor(out, x)
    return out


def ordered_product(factors: Sequence[Operator], dim: int | None = None) -> Operator:
    """Product in matrix order, later times to the left.

    ``ordered_product([B, A])`` is ``B @ A``: the rightmost factor acts first.
    An empty sequence yields the identity of dimension ``dim`` (default 2).
    """
    factors = list(factors)
    if not factors:
        return identity(2 if dim is None else dim)
    d = factors[0].dim
    out = np.eye(d, dtype=np.complex128)
    unitary = True
    for op in reversed(factors):
        _check_dims(op.dim, d)
        out = op.entries @ out
        unitary = unitary and op.kind == "unitary"
    return Operator(out, "unitary" if unitary else "general")


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> Operator:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return Operator(scale * 0.5 * (m + m.conj().T), "hermitian")


def random_state(dim: int, rng: np.random.Generator) -> StateVec:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVec(v).unit()
