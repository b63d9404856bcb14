"""Exact time-ordered propagators, their Dyson series, and weak evolution.

Conventions
-----------
The system evolves under ``H(t) = H_A(t)/N + H_s(t)/N`` (the strong part may
be left unscaled with ``MeasurementSetup.scale_strong=False``). Writing
``U_s`` for the forward strong-only evolution, the exact amplitude factorizes
as::

    <f| U_total(T) |i> = <f(T)| T exp(-i int H_I dt) |i>,
    <f(T)| = <f| U_s(T),        H_I(t) = U_s(t)^dag H_A(t) U_s(t) / N

so post-selecting on |f> after the strong pulse is the same as post-selecting
on the pulled-back state |f(T)> = U_s(T)^dag |f> in the interaction picture.
Every "normalized" quantity in this module is divided by ``<f(T)|i>``; with
the strong pulse off this is the bare overlap ``<f|i>``.

Time integrals use cell-averaged pulse rates on a uniform grid and an ordered
product of exactly exponentiated steps. The interaction-picture Hamiltonian of
step k is taken in the strong frame at the step midpoint. Series are
expanded order by order *in the coupling* inside every step, so the partial
sums converge to the discrete propagator itself; the weak series resums to
``exp(-i S_w)`` to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DimensionMismatch, OrthogonalSelection
from .linalg import (
    EQ_TOL,
    Operator,
    StateVec,
    _check_dims,
    expm_hermitian,
    inner,
    outer,
)
from .weak_values import PrePostPair

MAX_ORDER = 8
DEFAULT_STEPS = 2000


@dataclass(frozen=True)
class TimeGrid:
    t_end: float
    n_steps: int = DEFAULT_STEPS

    def __post_init__(self):
        if not (np.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError("t_end must be positive and finite")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")

    @property
    def step(self) -> float:
        return self.t_end / self.n_steps

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)

    def index(self, t: float) -> int:
        """Grid index of ``t``; raises if ``t`` is off the grid or out of range."""
        if not (0.0 <= t <= self.t_end * (1 + 1e-12)):
            raise ValueError(f"t={t!r} outside [0, {self.t_end!r}]")
        k = int(round(t / self.step))
        if abs(k * self.step - t) > 1e-9 * max(1.0, self.t_end):
            raise ValueError(f"t={t!r} is not a grid point")
        return min(k, self.n_steps)


@dataclass(frozen=True)
class PulseProfile:
    """Coupling rate d(eps)/dt as a function of time.

    ``amplitude`` is the rate inside ``window`` for the square shape. For the
    ``custom`` shape, ``samples`` are rates at evenly spaced knots spanning the
    window (linearly interpolated) and ``amplitude`` multiplies them.
    """

    amplitude: float
    window: tuple[float, float] = (0.0, 1.0)
    shape: str = "square"
    samples: tuple[float, ...] | None = None

    def __post_init__(self):
        t_on, t_off = (float(x) for x in self.window)
        object.__setattr__(self, "window", (t_on, t_off))
        if not (t_on >= 0 and t_on < t_off):
            raise ValueError("pulse window must satisfy 0 <= t_on < t_off")
        if not np.isfinite(self.amplitude):
            raise ValueError("pulse amplitude must be finite")
        if self.shape == "square":
            if self.samples is not None:
                raise ValueError("square pulses take no samples")
        elif self.shape == "custom":
            if self.samples is None or len(self.samples) < 2:
                raise ValueError("custom pulses need at least two rate samples")
            object.__setattr__(self, "samples", tuple(float(s) for s in self.samples))
        else:
            raise ValueError(f"unknown pulse shape {self.shape!r}")

    @classmethod
    def square(cls, total: float, window: tuple[float, float] = (0.0, 1.0)) -> "PulseProfile":
        """Square pulse whose integrated strength eps(t_off) equals ``total``."""
        return cls(total / (window[1] - window[0]), window)

    @classmethod
    def off(cls, window: tuple[float, float] = (0.0, 1.0)) -> "PulseProfile":
        return cls(0.0, window)

    def _knots(self):
        t_on, t_off = self.window
        x = np.linspace(t_on, t_off, len(self.samples))
        return x, self.amplitude * np.asarray(self.samples)

    def rate(self, t: float) -> float:
        t_on, t_off = self.window
        if not (t_on <= t < t_off):
            return 0.0
        if self.shape == "square":
            return float(self.amplitude)
        x, y = self._knots()
        return float(np.interp(t, x, y))

    def integral(self, t) -> np.ndarray | float:
        """eps(t) = int_0^t rate."""
        t = np.asarray(t, dtype=float)
        t_on, t_off = self.window
        tc = np.clip(t, t_on, t_off)
        if self.shape == "square":
            out = self.amplitude * (tc - t_on)
        else:
            x, y = self._knots()
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))])
            j = np.clip(np.searchsorted(x, tc, side="right") - 1, 0, len(x) - 2)
            dx = tc - x[j]
            slope = (y[j + 1] - y[j]) / (x[j + 1] - x[j])
            out = cum[j] + y[j] * dx + 0.5 * slope * dx**2
        return out if out.ndim else float(out)

    def cell_rates(self, grid: TimeGrid) -> np.ndarray:
        if self.window[1] > grid.t_end * (1 + 1e-12):
            raise ValueError("pulse window extends beyond the time grid")
        eps = self.integral(grid.times())
        return np.diff(eps) / grid.step


@dataclass(frozen=True, eq=False)
class MeasurementSetup:
    """One experiment: weak observable ``A``, strong observable ``B``, pulses, N."""

    A: Operator
    B: Operator
    pair: PrePostPair
    pulse_A: PulseProfile
    pulse_st: PulseProfile
    q_z: float = 1.0
    q_x: float = 1.0
    N: int = 1
    scale_strong: bool = True

    def __post_init__(self):
        if not (self.A.is_hermitian and self.B.is_hermitian):
            raise ValueError("A and B must be Hermitian")
        _check_dims(self.A.dim, self.B.dim)
        _check_dims(self.A.dim, self.pair.dim)
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("ensemble size N must be a positive integer")
        if not (np.isfinite(self.q_z) and np.isfinite(self.q_x)):
            raise ValueError("detector coordinates must be finite")

    @property
    def dim(self) -> int:
        return self.A.dim

    @property
    def weak_scale(self) -> float:
        return self.q_z / self.N

    @property
    def strong_scale(self) -> float:
        return self.q_x / self.N if self.scale_strong else self.q_x

    def with_(self, **changes) -> "MeasurementSetup":
        return replace(self, **changes)


@dataclass(frozen=True)
class SeriesResult:
    """Partial sums of a normalized propagator series, orders 0..order."""

    partial_sums: tuple[complex, ...]
    terms: tuple[complex, ...]
    residual_vs_exact: float
    order: int
    reference: complex = 0j
    projector_form_deviation: float = 0.0

    @property
    def value(self) -> complex:
        return self.partial_sums[-1]


# -- discretization -----------------------------------------------------------

@dataclass(eq=False)
class _Discrete:
    grid: TimeGrid
    ha: np.ndarray          # [n, d, d] per-system weak Hamiltonian, cell averaged
    hs: np.ndarray          # [n, d, d] strong Hamiltonian
    us: np.ndarray = field(default=None)     # [n+1, d, d] U_s(t_k)
    hi: np.ndarray = field(default=None)     # [n, d, d] interaction-picture H_A at step midpoints


def _discretize(setup: MeasurementSetup, grid: TimeGrid) -> _Discrete:
    ra = setup.pulse_A.cell_rates(grid) * setup.weak_scale
    rs = setup.pulse_st.cell_rates(grid) * setup.strong_scale
    ha = ra[:, None, None] * setup.A.entries
    hs = rs[:, None, None] * setup.B.entries
    us = kernels.cumulative_products(expm_hermitian(hs, grid.step))
    # strong frame at each step midpoint: the factorization is then a symmetric
    # splitting of the direct product, accurate to O(step**2)
    u = expm_hermitian(hs, 0.5 * grid.step) @ us[:-1]
    hi = np.swapaxes(u.conj(), -1, -2) @ ha @ u
    return _Discrete(grid, ha, hs, us, hi)


def _check_order(order: int) -> None:
    if int(order) != order or order < 0:
        raise ValueError("series order must be a non-negative integer")
    if order > MAX_ORDER:
        raise ValueError(f"series order capped at {MAX_ORDER}")


# -- Hamiltonians and propagators --------------------------------------------

def h_weak(setup: MeasurementSetup, grid: TimeGrid, t: float, scaled: bool = True) -> Operator:
    """Instantaneous weak-coupling Hamiltonian rate(t) q_z A (divided by N if ``scaled``)."""
    _in_range(grid, t)
    q = setup.weak_scale if scaled else setup.q_z
    return setup.pulse_A.rate(t) * q * setup.A


def h_strong(setup: MeasurementSetup, grid: TimeGrid, t: float, scaled: bool = True) -> Operator:
    _in_range(grid, t)
    q = setup.strong_scale if scaled else setup.q_x
    return setup.pulse_st.rate(t) * q * setup.B


def _in_range(grid: TimeGrid, t: float) -> None:
    if not (0.0 <= t <= grid.t_end):
        raise ValueError(f"t={t!r} outside [0, {grid.t_end!r}]")


def strong_evolution(setup: MeasurementSetup, grid: TimeGrid, t: float | None = None) -> Operator:
    """Forward strong-only propagator U_s(t) (default t = t_end)."""
    k = grid.n_steps if t is None else grid.index(t)
    return Operator(_discretize(setup, grid).us[k], "unitary")


def total_evolution(setup: MeasurementSetup, grid: TimeGrid, t: float | None = None) -> Operator:
    """Direct ordered product of exp(-i dt (H_A + H_s)/N) up to ``t``."""
    k = grid.n_steps if t is None else grid.index(t)
    return Operator(total_evolution_all(setup, grid)[k], "unitary")


def total_evolution_all(setup: MeasurementSetup, grid: TimeGrid) -> np.ndarray:
    """U_total at every grid point, shape ``[n_steps + 1, d, d]``."""
    d = _discretize(setup, grid)
    return kernels.cumulative_products(expm_hermitian(d.ha + d.hs, grid.step))


def effective_post(setup: MeasurementSetup, grid: TimeGrid, t: float | None = None) -> StateVec:
    """|f(t)> = U_s(t)^dag |f>: the post-selection pulled back through the strong pulse."""
    us = strong_evolution(setup, grid, t).entries
    return StateVec(us.conj().T @ setup.pair.post.amps, normalized=True)


def _effective_overlap(setup: MeasurementSetup, fT: StateVec) -> complex:
    ov = inner(fT, setup.pair.pre)
    if abs(ov) < setup.pair.overlap_floor:
        raise OrthogonalSelection(f"|<f(T)|i>| = {abs(ov):.3e} below overlap floor")
    return ov


def interaction_hamiltonian(setup: MeasurementSetup, grid: TimeGrid, t: float) -> Operator:
    """H_I(t) = U_s(t)^dag H_A(t) U_s(t) / N at a grid time."""
    u = strong_evolution(setup, grid, t).entries
    h = h_weak(setup, grid, t).entries
    hi = u.conj().T @ h @ u
    return Operator(0.5 * (hi + hi.conj().T), "hermitian")


def exact_amplitude(
    setup: MeasurementSetup,
    grid: TimeGrid,
    normalized: bool = False,
    route: str = "direct",
) -> complex:
    """<f|U_total(T)|i>, optionally divided by <f(T)|i>.

    ``route="direct"`` propagates with the summed Hamiltonian;
    ``route="interaction"`` uses the factorized form U_s(T) T exp(-i int H_I).
    The two agree up to the product-formula splitting error.
    """
    pre, post = setup.pair.pre.amps, setup.pair.post.amps
    d = _discretize(setup, grid)
    if route == "direct":
        psi = kernels.apply_ordered(expm_hermitian(d.ha + d.hs, grid.step), pre)
    elif route == "interaction":
        psi = d.us[-1] @ kernels.apply_ordered(expm_hermitian(d.hi, grid.step), pre)
    else:
        raise ValueError(f"unknown route {route!r}")
    amp = complex(np.vdot(post, psi))
    if normalized:
        fT = StateVec(d.us[-1].conj().T @ post, normalized=True)
        amp /= _effective_overlap(setup, fT)
    return amp


# -- series -------------------------------------------------------------------

def _first_order_integrand(setup: MeasurementSetup, d: _Discrete):
    """g_k = <f(T)|H_I(t_k)|i>/<f(T)|i> in both algebraic forms.

    Returns ``(g_ratio, g_projector, fT, overlap)`` where ``g_projector`` is
    evaluated as <i| P^w H_I |i> with the weak-conditioned projector built on
    (|i>, |f(T)>).
    """
    pre = setup.pair.pre.amps
    fT = d.us[-1].conj().T @ setup.pair.post.amps
    ov = _effective_overlap(setup, StateVec(fT))
    hi_pre = d.hi @ pre
    g_ratio = (hi_pre @ fT.conj()) / ov
    pw = np.outer(fT, fT.conj()) / abs(ov) ** 2
    g_proj = (pw @ hi_pre.T).T @ pre.conj()
    return g_ratio, g_proj, fT, ov


def dyson_series_exact(setup: MeasurementSetup, grid: TimeGrid, order: int) -> SeriesResult:
    """Order-by-order expansion of <f(T)|T exp(-i int H_I)|i> / <f(T)|i>.

    Order ``m`` collects the nested time-ordered integrals of ``m`` factors of
    H_I. Orders 0 and 1 are taken from the shared first-order integrand, so
    they coincide bit for bit with :func:`weak_evolution_series`.
    """
    _check_order(order)
    d = _discretize(setup, grid)
    g, _, fT, ov = _first_order_integrand(setup, d)
    dt = grid.step
    vecs = kernels.series_vector(-1j * dt * d.hi, setup.pair.pre.amps, order)
    terms = [complex(np.vdot(fT, v) / ov) for v in vecs]
    shared = kernels.series_scalar(-1j * dt * g, min(order, 1))
    terms[: len(shared)] = [complex(x) for x in shared]
    exact = exact_amplitude(setup, grid, normalized=True)
    return _series_result(terms, exact)


def weak_evolution_series(setup: MeasurementSetup, grid: TimeGrid, order: int) -> SeriesResult:
    """Weak-evolution series: order m is the time-ordered integral of m first-order factors.

    Computed from the ratio form <f(T)|H_I|i>/<f(T)|i> and from the projector
    form <i|P^w H_I|i>; their largest partial-sum discrepancy is reported as
    ``projector_form_deviation``.
    """
    _check_order(order)
    d = _discretize(setup, grid)
    g, g_proj, _, _ = _first_order_integrand(setup, d)
    dt = grid.step
    terms = [complex(x) for x in kernels.series_scalar(-1j * dt * g, order)]
    terms_proj = kernels.series_scalar(-1j * dt * g_proj, order)
    exact = exact_amplitude(setup, grid, normalized=True)
    res = _series_result(terms, exact)
    dev = float(np.abs(np.cumsum(terms_proj) - np.asarray(res.partial_sums)).max())
    return replace(res, projector_form_deviation=dev)


def _series_result(terms: Sequence[complex], exact: complex) -> SeriesResult:
    partial = tuple(complex(x) for x in np.cumsum(terms))
    return SeriesResult(
        partial_sums=partial,
        terms=tuple(terms),
        residual_vs_exact=float(abs(partial[-1] - exact)),
        order=len(terms) - 1,
        reference=exact,
    )


def weak_action(setup: MeasurementSetup, grid: TimeGrid) -> complex:
    """S_w = int_0^T <f(T)|H_I(t)|i>/<f(T)|i> dt (per system, Hamiltonian / N)."""
    d = _discretize(setup, grid)
    g = _first_order_integrand(setup, d)[0]
    return complex(g.sum() * grid.step)


def weak_exponential(setup: MeasurementSetup, grid: TimeGrid) -> complex:
    """exp(-i S_w). Its modulus exceeds 1 when Im S_w < 0; it is never clamped."""
    return complex(np.exp(-1j * weak_action(setup, grid)))


# -- identity resolution ------------------------------------------------------

def complement_basis(pair: PrePostPair):
    """(f, fbar, i, ibar) for a two-state pair.

    ``f`` is rephased so that <f|i> > 0, ``fbar`` so that <fbar|i> >= 0, and
    ``ibar`` is the unit vector orthogonal to ``i`` with <f|ibar> = <fbar|i>.
    For the theta pair this gives |down> and sin|up> - cos|down>.
    """
    if pair.dim != 2:
        raise DimensionMismatch("complementary basis is defined for two-state systems only")
    i = pair.pre.amps
    f = pair.post.amps
    ov = np.vdot(f, i)
    if abs(ov) > 0:
        f = f * (ov / abs(ov))
    fbar = np.array([-np.conj(f[1]), np.conj(f[0])])
    c = np.vdot(fbar, i)
    if abs(c) > 0:
        fbar = fbar * (c / abs(c))
    ibar = np.array([-np.conj(i[1]), np.conj(i[0])])
    # in two dimensions |<f|ibar>| = |<fbar|i>|, so fixing the phase suffices
    s = np.vdot(f, ibar)
    if abs(s) > 0:
        ibar = ibar * (abs(s) / s)
    return tuple(StateVec(v, normalized=True) for v in (f, fbar, i, ibar))


def identity_resolution(setup: MeasurementSetup, grid: TimeGrid, t: float) -> Operator:
    """|f(t)><f(t)| + |fbar(t)><fbar(t)| in the moving post-selection frame."""
    parts = identity_resolution_components(setup, grid, t)
    total = sum(parts.values(), np.zeros((2, 2), dtype=complex))
    return Operator(total)


def identity_resolution_components(setup: MeasurementSetup, grid: TimeGrid, t: float) -> dict:
    """Split the moving identity along the pre-selection basis.

    Returns ``{(y, x): M}`` for ``y`` in ("i", "ibar") and ``x`` in ("f", "fbar"),
    with ``M = <y|x> U |y><x| U^dag`` and ``U = U_s(t)^dag``; the four pieces
    sum to the identity.
    """
    f, fbar, i, ibar = complement_basis(setup.pair)
    u = strong_evolution(setup, grid, t).entries.conj().T
    out = {}
    for yname, y in (("i", i), ("ibar", ibar)):
        for xname, x in (("f", f), ("fbar", fbar)):
            piece = inner(y, x) * np.outer(y.amps, x.amps.conj())
            out[(yname, xname)] = u @ piece @ u.conj().T
    return out


# -- ensembles ----------------------------------------------------------------

def ensemble_amplitude_exact(setup: MeasurementSetup, grid: TimeGrid) -> complex:
    """<f_N|U^N|i_N> = (<f|U_total|i>)**N for product states, Hamiltonians / N."""
    return complex(exact_amplitude(setup, grid) ** setup.N)


def ensemble_amplitude_weak(setup: MeasurementSetup, grid: TimeGrid) -> complex:
    """(<f(T)|i>)**N exp(-i N S_w): N per-system weak actions add to the unscaled one."""
    d = _discretize(setup, grid)
    g, _, _, ov = _first_order_integrand(setup, d)
    s_total = setup.N * complex(g.sum() * grid.step)
    return complex(ov**setup.N * np.exp(-1j * s_total))


def weak_projector_at_end(setup: MeasurementSetup, grid: TimeGrid) -> Operator:
    """Weak-conditioned projector on (|i>, |f(T)>)."""
    fT = effective_post(setup, grid)
    ov = _effective_overlap(setup, fT)
    return Operator(outer(fT).entries / abs(ov) ** 2, "hermitian")


__all__ = [
    "EQ_TOL",
    "MAX_ORDER",
    "TimeGrid",
    "PulseProfile",
    "MeasurementSetup",
    "SeriesResult",
    "h_weak",
    "h_strong",
    "strong_evolution",
    "total_evolution",
    "total_evolution_all",
    "effective_post",
    "interaction_hamiltonian",
    "exact_amplitude",
    "dyson_series_exact",
    "weak_evolution_series",
    "weak_action",
    "weak_exponential",
    "complement_basis",
    "identity_resolution",
    "identity_resolution_components",
    "ensemble_amplitude_exact",
    "ensemble_amplitude_weak",
    "weak_projector_at_end",
]
