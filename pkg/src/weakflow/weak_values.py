"""Weak values, the weak-conditioned projector and transition-probability identities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NullWeakValue, OrthogonalSelection
from .linalg import (
    STRUCT_TOL,
    Operator,
    StateVec,
    _check_dims,
    inner,
    matrix_element,
    outer,
)

DEFAULT_OVERLAP_FLOOR = 1e-8
NULL_WEAK_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class PrePostPair:
    """Pre-selected ``pre`` = |i> and post-selected ``post`` = |f> with cached <f|i>."""

    pre: StateVec
    post: StateVec
    overlap_floor: float = DEFAULT_OVERLAP_FLOOR
    overlap: complex = field(init=False)

    def __post_init__(self):
        pre, post = self.pre, self.post
        if not isinstance(pre, StateVec):
            pre = StateVec(pre)
        if not isinstance(post, StateVec):
            post = StateVec(post)
        pre = pre if pre.normalized else StateVec(pre.amps, normalized=True)
        post = post if post.normalized else StateVec(post.amps, normalized=True)
        _check_dims(pre.dim, post.dim)
        if not self.overlap_floor > 0:
            raise ValueError("overlap_floor must be positive")
        object.__setattr__(self, "pre", pre)
        object.__setattr__(self, "post", post)
        object.__setattr__(self, "overlap", inner(post, pre))

    @property
    def dim(self) -> int:
        return self.pre.dim

    def require_overlap(self) -> complex:
        if abs(self.overlap) < self.overlap_floor:
            raise OrthogonalSelection(
                f"|<f|i>| = {abs(self.overlap):.3e} below floor {self.overlap_floor:.1e}"
            )
        return self.overlap


def theta_pair(theta: float, overlap_floor: float = DEFAULT_OVERLAP_FLOOR) -> PrePostPair:
    """|i> = cos(theta)|up> + sin(theta)|down>, |f> = |up>."""
    pre = StateVec(np.array([np.cos(theta), np.sin(theta)]), normalized=True)
    post = StateVec(np.array([1.0, 0.0]), normalized=True)
    return PrePostPair(pre, post, overlap_floor)


@dataclass(frozen=True)
class WeakValueResult:
    value: complex
    overlap: complex
    # None when the operator is not Hermitian (spectral radius undefined)
    anomalous: bool | None

    @property
    def re(self) -> float:
        return self.value.real

    @property
    def im(self) -> float:
        return self.value.imag


def spectral_radius(A: Operator) -> float:
    return float(np.abs(np.linalg.eigvalsh(A.entries)).max())


def weak_value(A: Operator, pair: PrePostPair) -> WeakValueResult:
    """A_w = <f|A|i> / <f|i>.

    Raises
    ------
    OrthogonalSelection
        If ``|<f|i>|`` is below ``pair.overlap_floor``.
    """
    _check_dims(A.dim, pair.dim)
    ov = pair.require_overlap()
    value = matrix_element(pair.post, A, pair.pre) / ov
    anomalous = None
    if A.is_hermitian:
        anomalous = abs(value) > spectral_radius(A) + STRUCT_TOL
    return WeakValueResult(complex(value), ov, anomalous)


def weak_conditioned_projector(pair: PrePostPair) -> Operator:
    """Projector onto |f> rescaled by 1/<i|P_f|i> = 1/|<f|i>|**2.

    Non-invasive on |i> in average (<i|P|i> = 1) yet <f|P|f> = 1/P(i->f), which
    diverges as the selection becomes orthogonal.
    """
    ov = pair.require_overlap()
    proj = outer(pair.post)
    return Operator(proj.entries / abs(ov) ** 2, "hermitian")


def transition_probability_direct(pair: PrePostPair) -> float:
    return float(min(1.0, abs(pair.overlap) ** 2))


def transition_probability_ratio(A: Operator, pair: PrePostPair) -> complex:
    """<i|P_f A|i> / A_w, which reproduces |<f|i>|**2 whenever A_w != 0."""
    aw = weak_value(A, pair).value
    if abs(aw) < NULL_WEAK_FLOOR:
        raise NullWeakValue(f"weak value {aw!r} is numerically zero")
    numerator = matrix_element(pair.pre, outer(pair.post) @ A, pair.pre)
    return complex(numerator / aw)
