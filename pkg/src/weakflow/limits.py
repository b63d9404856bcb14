"""Validity margins of weak evolution, regime classification and sweeps.

"Much less than" is quantified by ``Thresholds.margin_factor`` (default 10).
The regime tag of a report is a pure function of its margin fields and the
thresholds; the measured approximation error is reported next to it but does
not feed the tag, so the two can be compared.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from typing import Sequence

import numpy as np

from .aav import SpinSelection
from .dyson import (
    MeasurementSetup,
    PulseProfile,
    TimeGrid,
    complement_basis,
    exact_amplitude,
    effective_post,
    strong_evolution,
    weak_evolution_series,
    weak_exponential,
)
from .errors import DegeneratePhase, NumericalFailure, WeakflowError
from .linalg import PAULI, inner, matrix_element
from .weak_values import theta_pair

REGIMES = ("weak_value", "null_weak_value", "breakdown", "indeterminate")
DEGENERATE_AMPLITUDE = 1e-14


@dataclass(frozen=True)
class Thresholds:
    margin_factor: float = 10.0
    phase_tol: float = 0.05
    # measured relative error above which the approximation is deemed broken
    error_breakdown: float = 0.1

    def __post_init__(self):
        if not self.margin_factor >= 1:
            raise ValueError("margin_factor must be >= 1")
        if not self.phase_tol > 0:
            raise ValueError("phase_tol must be positive")


def _theta(selection) -> float:
    theta = selection.theta if isinstance(selection, SpinSelection) else float(selection)
    if not (0.0 < theta < math.pi / 2):
        raise ValueError("theta must lie in (0, pi/2)")
    return theta


def check_restriction_11(selection, N: int) -> float:
    """tan(theta) / N; the restriction holds when this is >= margin_factor."""
    return math.tan(_theta(selection)) / N


def null_weak_value_side(selection, N: int) -> float:
    """cot(theta) / N, the mirror margin of the null-weak-value approach."""
    return 1.0 / (math.tan(_theta(selection)) * N)


def satisfied(margin: float, thresholds: Thresholds = Thresholds()) -> bool:
    return margin >= thresholds.margin_factor


def check_window_16(selection, eps_st_qx: float, N: int,
                    thresholds: Thresholds = Thresholds()) -> tuple[float, float, bool]:
    """(eps_st q_x sin 2theta, tan theta, window satisfied)."""
    theta = _theta(selection)
    lhs = eps_st_qx * math.sin(2 * theta)
    rhs = math.tan(theta)
    f = thresholds.margin_factor
    return lhs, rhs, bool(N >= f * lhs and rhs >= f * N)


def check_phase_condition(setup: MeasurementSetup, grid: TimeGrid) -> float:
    """|arg<ibar|U_s|ibar> - arg<i|U_s|i>| at t_end, wrapped to [0, pi]."""
    _, _, i, ibar = complement_basis(setup.pair)
    us = strong_evolution(setup, grid)
    a = matrix_element(i, us, i)
    b = matrix_element(ibar, us, ibar)
    if min(abs(a), abs(b)) < DEGENERATE_AMPLITUDE:
        raise DegeneratePhase("diagonal strong-evolution amplitude vanishes")
    d = math.remainder(np.angle(b) - np.angle(a), 2 * math.pi)
    return abs(d)


def approximation_error(setup: MeasurementSetup, grid: TimeGrid) -> float:
    """Relative deviation of the weak ensemble amplitude from the exact one.

    Both ensemble amplitudes carry the factor <f(T)|i>**N, which underflows
    for large N long before the relative error is ill-defined, so the ratio
    is formed per system: |1 - (w/r)**N| with r the normalized exact
    amplitude and w = exp(-i S_w).
    """
    r = exact_amplitude(setup, grid, normalized=True)
    if abs(r) < DEGENERATE_AMPLITUDE:
        raise NumericalFailure("exact amplitude vanishes")
    w = weak_exponential(setup, grid)
    return float(abs(1 - (w / r) ** setup.N))


@dataclass(frozen=True)
class Eq19Check:
    ratio: complex
    reference: float
    residual: float
    denominator: str = "weak_series_order_8"


def verify_eq19(setup: MeasurementSetup, grid: TimeGrid, order: int = 8) -> Eq19Check:
    """Transition probability as the ratio of two propagators.

    Numerator ``<i|P_f U|i>`` from the exact evolution (with the post-selection
    pulled back through the strong pulse); denominator the weak-evolution
    series resummed to ``order``.
    """
    fT = effective_post(setup, grid)
    ov = inner(fT, setup.pair.pre)
    numerator = np.conj(ov) * exact_amplitude(setup, grid)
    denominator = weak_evolution_series(setup, grid, order).value
    if abs(denominator) < DEGENERATE_AMPLITUDE:
        raise NumericalFailure("weak-evolution propagator vanishes")
    ratio = complex(numerator / denominator)
    reference = abs(ov) ** 2
    return Eq19Check(ratio, reference, abs(ratio - reference), f"weak_series_order_{order}")


# -- regime reports -------------------------------------------------------------

@dataclass(frozen=True)
class RegimeReport:
    N: int
    theta: float
    eps_a: float
    eps_st_qx: float
    lhs16: float
    rhs16: float
    margin11: float
    phase_mismatch: float
    approx_error: float
    regime: str
    # diagnostics, not serialized
    error: str = field(default="", compare=False, repr=False)

    @property
    def margin_null(self) -> float:
        return 1.0 / (self.N * self.N * self.margin11)

    def error_breakdown(self, thresholds: Thresholds = Thresholds()) -> bool:
        """Breakdown judged from the measured error instead of the margins."""
        return not (self.approx_error <= thresholds.error_breakdown)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("error")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RegimeReport":
        names = record_fields()
        if set(d) != set(names):
            raise ValueError(f"regime record fields {sorted(d)} != {names}")
        vals = {k: d[k] for k in names}
        vals["N"] = int(vals["N"])
        for k in names:
            if k not in ("N", "regime"):
                vals[k] = float(vals[k])
        return cls(**vals)


def record_fields() -> list[str]:
    return [f.name for f in fields(RegimeReport) if f.name != "error"]


def classify(N: int, margin11: float, lhs16: float, phase_mismatch: float,
             thresholds: Thresholds = Thresholds()) -> str:
    """Regime tag from the margins alone.

    weak_value       tan/N >= F, N >= F*lhs16 and the phase condition holds
    null_weak_value  cot/N >= F and the phase condition holds
    breakdown        N >= max(tan, cot), the phase condition fails, or N <= lhs16
    indeterminate    anything in between
    """
    f = thresholds.margin_factor
    margin_null = 1.0 / (N * N * margin11)
    phase_ok = phase_mismatch <= thresholds.phase_tol
    if margin11 >= f and N >= f * lhs16 and phase_ok:
        return "weak_value"
    if margin_null >= f and phase_ok:
        return "null_weak_value"
    if max(margin11, margin_null) <= 1.0 or not phase_ok or N <= lhs16:
        return "breakdown"
    return "indeterminate"


def rederive(report: RegimeReport, thresholds: Thresholds = Thresholds()) -> str:
    return classify(report.N, report.margin11, report.lhs16, report.phase_mismatch, thresholds)


# -- sweeps ---------------------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    N_values: Sequence[int] = ()
    thetas: Sequence[float] = ()
    eps_a_values: Sequence[float] = ()
    eps_st_qx_values: Sequence[float] = ()
    A: str = "sigma_z"
    B: str = "sigma_x"
    q_z: float = 1.0
    q_x: float = 1.0
    t_end: float = 1.0
    n_steps: int = 2000
    scale_strong: bool = True
    thresholds: Thresholds = Thresholds()
    threads: int | None = None

    def points(self):
        """Cartesian grid, lexicographic in (N, theta, eps_a, eps_st_qx)."""
        return list(product(self.N_values, self.thetas, self.eps_a_values, self.eps_st_qx_values))


STANDARD_SWEEP = SweepConfig(
    N_values=(1, 2, 4, 8, 16, 32),
    thetas=(0.3, 0.7854, 1.2, 1.4711),
    eps_a_values=(0.02, 0.1),
    eps_st_qx_values=(0.005, 0.05),
)


def build_setup(theta: float, eps_a: float, eps_st_qx: float, N: int = 1,
                A: str = "sigma_z", B: str = "sigma_x", q_z: float = 1.0, q_x: float = 1.0,
                t_end: float = 1.0, scale_strong: bool = True) -> MeasurementSetup:
    """theta-pair setup with both square pulses spanning [0, t_end].

    ``eps_a`` and ``eps_st_qx`` are the integrated couplings eps_A(T) q_z and
    eps_st(T) q_x.
    """
    window = (0.0, t_end)
    return MeasurementSetup(
        A=PAULI[A], B=PAULI[B], pair=theta_pair(theta),
        pulse_A=PulseProfile.square(eps_a / q_z, window),
        pulse_st=PulseProfile.square(eps_st_qx / q_x, window),
        q_z=q_z, q_x=q_x, N=N, scale_strong=scale_strong,
    )


def evaluate_point(N: int, theta: float, eps_a: float, eps_st_qx: float,
                   config: SweepConfig = SweepConfig()) -> RegimeReport:
    th = config.thresholds
    lhs, rhs, _ = check_window_16(theta, eps_st_qx, N, th)
    margin = check_restriction_11(theta, N)
    grid = TimeGrid(config.t_end, config.n_steps)
    phase, err, note = math.nan, math.nan, ""
    try:
        setup = build_setup(theta, eps_a, eps_st_qx, N, config.A, config.B,
                            config.q_z, config.q_x, config.t_end, config.scale_strong)
        phase = check_phase_condition(setup, grid)
        err = approximation_error(setup, grid)
    except WeakflowError as exc:
        note = f"{type(exc).__name__}: {exc}"
    regime = "breakdown" if note else classify(N, margin, lhs, phase, th)
    return RegimeReport(int(N), float(theta), float(eps_a), float(eps_st_qx), lhs, rhs,
                        margin, phase, err, regime, note)


def sweep_threads(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("WEAKFLOW_THREADS", "")
    return max(1, int(env)) if env.strip() else 1


def sweep(config: SweepConfig) -> list[RegimeReport]:
    """One report per grid point, in declared axis order; point failures are recorded."""
    pts = config.points()
    if not pts:
        return []
    n = sweep_threads(config.threads)
    if n == 1:
        return [evaluate_point(*p, config=config) for p in pts]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda p: evaluate_point(*p, config=config), pts))
