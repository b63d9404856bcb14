"""Spin-1/2 system coupled to a Gaussian pointer, with post-selection and readout.

The joint state is stored as two pointer wavefunctions (the |up> and |down>
spin components) sampled on a uniform coordinate grid. Coupling
``exp(-i eps q A)`` is applied exactly, pointwise in ``q``, in the eigenbasis
of ``A``. The pointer is read out in momentum space: an impulsive coupling
shifts the pointer momentum by ``-eps * Re(A_w)`` and, for complex weak values,
shifts the coordinate mean by ``2 eps Delta**2 Im(A_w)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyson import MeasurementSetup, PulseProfile, TimeGrid, effective_post
from .errors import PostselectionStarved, TailTruncation
from .linalg import SIGMA_X, Operator, StateVec
from .weak_values import DEFAULT_OVERLAP_FLOOR, PrePostPair, weak_value

TAIL_MASS = 1e-12
STARVED_PROB = 1e-14


@dataclass(frozen=True, eq=False)
class SpinSelection:
    """theta-parametrized selection; ``post`` defaults to |up>."""

    theta: float
    post: StateVec | None = None

    def __post_init__(self):
        if not (0.0 < self.theta < math.pi / 2):
            raise ValueError("theta must lie in the open interval (0, pi/2)")
        if self.post is None:
            object.__setattr__(self, "post", StateVec(np.array([1.0, 0.0]), normalized=True))
        elif self.post.dim != 2:
            raise ValueError("post-selected state must be two-dimensional")

    @property
    def pre(self) -> StateVec:
        return StateVec(np.array([math.cos(self.theta), math.sin(self.theta)]), normalized=True)

    @property
    def pre_bar(self) -> StateVec:
        return StateVec(np.array([math.sin(self.theta), -math.cos(self.theta)]), normalized=True)

    @property
    def post_bar(self) -> StateVec:
        f = self.post.amps
        return StateVec(np.array([-np.conj(f[1]), np.conj(f[0])]), normalized=True)

    def pair(self, overlap_floor: float = DEFAULT_OVERLAP_FLOOR) -> PrePostPair:
        return PrePostPair(self.pre, self.post, overlap_floor)


@dataclass(frozen=True)
class PointerGrid:
    q_min: float
    q_max: float
    n_points: int = 2048

    def __post_init__(self):
        n = self.n_points
        if n < 256 or n & (n - 1):
            raise ValueError("n_points must be a power of two >= 256")
        if not self.q_max > self.q_min:
            raise ValueError("q_max must exceed q_min")

    @classmethod
    def centered(cls, q0: float = 0.0, delta: float = 1.0, n_points: int = 2048,
                 half_width: float = 12.0) -> "PointerGrid":
        return cls(q0 - half_width * delta, q0 + half_width * delta, n_points)

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / self.n_points

    @property
    def dp(self) -> float:
        return 2 * math.pi / (self.n_points * self.dq)

    @property
    def q(self) -> np.ndarray:
        return self.q_min + self.dq * np.arange(self.n_points)

    @property
    def p(self) -> np.ndarray:
        """Conjugate momenta in fftshift order (p = 0 at index n/2)."""
        return np.fft.fftshift(np.fft.fftfreq(self.n_points, d=self.dq)) * 2 * math.pi


@dataclass(frozen=True, eq=False)
class PointerState:
    amps: np.ndarray
    grid: PointerGrid

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2) * self.grid.dq)


@dataclass(frozen=True, eq=False)
class JointState:
    """Spin-up and spin-down pointer branches."""

    up: np.ndarray
    down: np.ndarray
    grid: PointerGrid

    @property
    def branches(self) -> np.ndarray:
        return np.stack([self.up, self.down])

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.branches) ** 2) * self.grid.dq)


def gaussian_pointer(grid: PointerGrid, q0: float, delta: float) -> np.ndarray:
    """exp(-(q - q0)**2 / 4 delta**2), normalized on the grid."""
    phi = np.exp(-((grid.q - q0) ** 2) / (4 * delta**2)).astype(np.complex128)
    return phi / math.sqrt(np.sum(np.abs(phi) ** 2) * grid.dq)


def prepare(selection: SpinSelection, grid: PointerGrid, q0: float, delta: float) -> JointState:
    if not delta > 0:
        raise ValueError("pointer spread delta must be positive")
    if grid.q_min > q0 - 8 * delta or grid.q_max < q0 + 8 * delta:
        raise TailTruncation("pointer grid must cover q0 +/- 8 delta")
    # |phi0|^2 is normal with standard deviation delta
    outside = 0.5 * (math.erfc((q0 - grid.q_min) / (delta * math.sqrt(2)))
                     + math.erfc((grid.q_max - q0) / (delta * math.sqrt(2))))
    if outside > TAIL_MASS:
        raise TailTruncation(f"Gaussian mass {outside:.2e} falls outside the grid")
    phi = gaussian_pointer(grid, q0, delta)
    c = selection.pre.amps
    return JointState(c[0] * phi, c[1] * phi, grid)


def couple(state: JointState, A: Operator, eps: float) -> JointState:
    """Apply exp(-i eps q A) pointwise in q."""
    if A.dim != 2 or not A.is_hermitian:
        raise ValueError("coupling operator must be a Hermitian 2x2 matrix")
    if eps == 0:
        return state
    a, v = np.linalg.eigh(A.entries)
    coeffs = v.conj().T @ state.branches
    coeffs = coeffs * np.exp(-1j * eps * np.outer(a, state.grid.q))
    up, down = v @ coeffs
    return JointState(up, down, state.grid)


def postselect(state: JointState, f: StateVec) -> tuple[PointerState, float]:
    """Project the spin on |f>; returns the renormalized pointer and success probability."""
    if f.dim != 2 or abs(f.norm() - 1.0) > 1e-10:
        raise ValueError("post-selection state must be a normalized 2-vector")
    psi = np.conj(f.amps[0]) * state.up + np.conj(f.amps[1]) * state.down
    prob = float(np.sum(np.abs(psi) ** 2) * state.grid.dq)
    if prob < STARVED_PROB:
        raise PostselectionStarved(f"post-selection probability {prob:.2e}")
    return PointerState(psi / math.sqrt(prob), state.grid), prob


def momentum_amplitudes(p: PointerState) -> np.ndarray:
    """Unitary DFT of the pointer, fftshift-ordered like ``grid.p``."""
    return np.fft.fftshift(np.fft.fft(p.amps, norm="ortho"))


def pointer_means(p: PointerState) -> tuple[float, float]:
    grid = p.grid
    prob_q = np.abs(p.amps) ** 2
    mean_q = float(np.sum(grid.q * prob_q) / np.sum(prob_q))
    prob_p = np.abs(momentum_amplitudes(p)) ** 2
    mean_p = float(np.sum(grid.p * prob_p) / np.sum(prob_p))
    return mean_q, mean_p


@dataclass(frozen=True)
class AAVRecord:
    theta: float
    eps: float
    delta: float
    success_prob: float
    mean_q: float
    mean_p: float
    A_w_re_est: float
    A_w_im_est: float
    A_w_exact_re: float
    A_w_exact_im: float

    @property
    def estimate(self) -> complex:
        return complex(self.A_w_re_est, self.A_w_im_est)


def weak_readout(selection: SpinSelection, grid: PointerGrid, A: Operator, eps: float,
                 q0: float = 0.0, delta: float = 1.0) -> AAVRecord:
    """prepare -> couple -> postselect -> read the pointer shift as a weak value."""
    if eps == 0:
        raise ValueError("readout needs a non-zero coupling")
    joint = couple(prepare(selection, grid, q0, delta), A, eps)
    pointer, prob = postselect(joint, selection.post)
    mean_q, mean_p = pointer_means(pointer)
    exact = weak_value(A, selection.pair()).value
    return AAVRecord(
        theta=selection.theta,
        eps=eps,
        delta=delta,
        success_prob=prob,
        mean_q=mean_q,
        mean_p=mean_p,
        A_w_re_est=-mean_p / eps,
        A_w_im_est=(mean_q - q0) / (2 * eps * delta**2),
        A_w_exact_re=exact.real,
        A_w_exact_im=exact.imag,
    )


def strong_postselect_sequence(selection: SpinSelection, grid: TimeGrid, eps_st: float,
                               q_x: float = 1.0, N: int = 1, B: Operator = SIGMA_X,
                               scale_strong: bool = True) -> SpinSelection:
    """Selection whose post state is |f> pulled back through a square strong pulse.

    The returned ``post`` is U_s(T)^dag |f>, the state the pre-selected system
    must overlap for a later projection on |f> to succeed.
    """
    if eps_st < 0:
        raise ValueError("eps_st must be non-negative")
    setup = MeasurementSetup(
        A=B, B=B, pair=selection.pair(),
        pulse_A=PulseProfile.off((0.0, grid.t_end)),
        pulse_st=PulseProfile.square(eps_st, (0.0, grid.t_end)),
        q_x=q_x, N=N, scale_strong=scale_strong,
    )
    return SpinSelection(selection.theta, effective_post(setup, grid))
