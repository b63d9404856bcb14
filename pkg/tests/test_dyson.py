import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.linalg import expm

import oracles
from weakflow.dyson import (
    MAX_ORDER,
    MeasurementSetup,
    PulseProfile,
    TimeGrid,
    complement_basis,
    dyson_series_exact,
    effective_post,
    ensemble_amplitude_exact,
    ensemble_amplitude_weak,
    exact_amplitude,
    h_strong,
    h_weak,
    identity_resolution,
    identity_resolution_components,
    interaction_hamiltonian,
    strong_evolution,
    total_evolution,
    total_evolution_all,
    weak_action,
    weak_evolution_series,
    weak_exponential,
)
from weakflow.errors import DimensionMismatch
from weakflow.limits import build_setup
from weakflow.linalg import PAULI, SIGMA_X, SIGMA_Y, SIGMA_Z, identity, random_state
from weakflow.weak_values import PrePostPair, theta_pair

GRID = TimeGrid(1.0, 2000)


def setup_for(theta=1.2, eps_a=0.05, eps_st=0.005, N=1, A="sigma_z", B="sigma_x", **kw):
    return build_setup(theta, eps_a, eps_st, N, A, B, **kw)


# -- grid and pulses -------------------------------------------------------------

def test_time_grid():
    g = TimeGrid(2.0, 8)
    assert g.step == 0.25 and len(g.times()) == 9
    assert g.index(0.5) == 2 and g.index(2.0) == 8
    with pytest.raises(ValueError):
        g.index(0.3)
    with pytest.raises(ValueError):
        g.index(2.5)
    for bad in ((0.0, 10), (1.0, 0), (math.inf, 10)):
        with pytest.raises(ValueError):
            TimeGrid(*bad)


def test_square_pulse():
    p = PulseProfile.square(0.3, (0.25, 0.75))
    assert p.rate(0.1) == 0.0 and p.rate(0.5) == pytest.approx(0.6)
    assert p.integral(1.0) == pytest.approx(0.3)
    assert p.integral(0.5) == pytest.approx(0.15)
    rates = p.cell_rates(TimeGrid(1.0, 100))
    assert rates.sum() * 0.01 == pytest.approx(0.3, abs=1e-15)
    with pytest.raises(ValueError):
        PulseProfile(1.0, (0.5, 0.5))
    with pytest.raises(ValueError):
        PulseProfile.square(1.0, (0.0, 2.0)).cell_rates(TimeGrid(1.0, 10))


def test_custom_pulse_integral_matches_quadrature():
    p = PulseProfile(2.0, (0.1, 0.9), "custom", (0.0, 1.0, 0.5, 0.25))
    for t in (0.0, 0.3, 0.5, 0.77, 1.0):
        ref = quad(p.rate, 0, t, points=list(np.linspace(0.1, 0.9, 4)), limit=200)[0]
        assert abs(p.integral(t) - ref) < 1e-10


# -- Hamiltonians and propagators ------------------------------------------------

def test_h_weak_definition_and_scaling():
    s = MeasurementSetup(SIGMA_X, SIGMA_Z, theta_pair(0.5), PulseProfile(0.7, (0.2, 0.6)),
                         PulseProfile.off(), q_z=1.5, N=4)
    g = TimeGrid(1.0, 10)
    assert np.array_equal(h_weak(s, g, 0.8).entries, np.zeros((2, 2)))
    assert np.allclose(h_weak(s, g, 0.4, scaled=False).entries, 0.7 * 1.5 * SIGMA_X.entries)
    assert np.allclose(h_weak(s, g, 0.4).entries, 0.7 * 1.5 / 4 * SIGMA_X.entries)
    assert np.array_equal(h_strong(s, g, 0.4).entries, np.zeros((2, 2)))


def test_strong_evolution_closed_form():
    s = setup_for(eps_st=0.8, N=2)
    for t in (0.0, 0.25, 1.0):
        u = strong_evolution(s, GRID, t).entries
        ref = expm(-1j * 0.8 * t * SIGMA_X.entries / 2)
        assert np.abs(u - ref).max() < 1e-10
    off = setup_for(eps_st=0.0)
    assert np.abs(strong_evolution(off, GRID, 0.5).entries - np.eye(2)).max() < 1e-15


def test_total_evolution_unitary_everywhere():
    s = setup_for(eps_a=0.4, eps_st=0.3)
    us = total_evolution_all(s, TimeGrid(1.0, 200))
    dev = np.abs(np.swapaxes(us.conj(), 1, 2) @ us - np.eye(2)).max()
    assert dev < 1e-10
    assert total_evolution(s, TimeGrid(1.0, 200)).kind == "unitary"


def test_exact_amplitude_pulses_off():
    s = setup_for(eps_a=0.0, eps_st=0.0)
    assert abs(exact_amplitude(s, GRID) - math.cos(1.2)) < 1e-15


@pytest.mark.parametrize("A,B", [("sigma_z", "sigma_x"), ("sigma_x", "sigma_y"), ("sigma_x", "sigma_z")])
def test_exact_amplitude_constant_oracle(A, B):
    s = setup_for(theta=0.9, eps_a=0.3, eps_st=0.7, N=3, A=A, B=B)
    ref = oracles.constant_amplitude(PAULI[A].entries, PAULI[B].entries,
                                     oracles.theta_state(0.9), oracles.UP, 0.3, 0.7, N=3)
    assert abs(exact_amplitude(s, TimeGrid(1.0, 50)) - ref) < 1e-12
    # the factorized route carries only the symmetric splitting error
    assert abs(exact_amplitude(s, GRID, route="interaction") - ref) < 1e-9


def test_exact_amplitude_commuting_closed_form():
    s = setup_for(theta=0.6, eps_a=0.4, eps_st=0.0, N=2, A="sigma_x")
    ref = np.vdot(oracles.UP, expm(-1j * 0.4 * SIGMA_X.entries / 2) @ oracles.theta_state(0.6))
    assert abs(exact_amplitude(s, GRID) - ref) < 1e-10


def test_self_convergence_order():
    # time-dependent, non-commuting pulses: no closed form
    s = MeasurementSetup(SIGMA_Z, SIGMA_X, theta_pair(1.2),
                         PulseProfile(1.0, (0.0, 1.0), "custom", (0.0, 2.0, 0.5)),
                         PulseProfile(0.8, (0.0, 1.0), "custom", (1.0, 0.0, 1.5)))
    for route in ("direct", "interaction"):
        a = [exact_amplitude(s, TimeGrid(1.0, n), route=route) for n in (50, 100, 200, 400)]
        d = np.abs(np.diff(a))
        orders = np.log2(d[:-1] / d[1:])
        assert np.all(orders >= 1.0)


def test_interaction_hamiltonian():
    s = setup_for(eps_st=0.6)
    hi = interaction_hamiltonian(s, GRID, 0.5)
    assert np.abs(hi.entries - hi.entries.conj().T).max() < 1e-12
    off = setup_for(eps_st=0.0)
    assert np.allclose(interaction_hamiltonian(off, GRID, 0.5).entries, h_weak(off, GRID, 0.5).entries)
    comm = setup_for(eps_st=0.6, A="sigma_x", B="sigma_x")
    for t in (0.0, 0.3, 1.0):
        assert np.allclose(interaction_hamiltonian(comm, GRID, t).entries, h_weak(comm, GRID, t).entries)


# -- series ---------------------------------------------------------------------

def test_series_order_zero_and_one_shared():
    s = setup_for()
    ex = dyson_series_exact(s, GRID, 8)
    wk = weak_evolution_series(s, GRID, 8)
    assert len(ex.partial_sums) == 9
    assert ex.partial_sums[0] == 1.0
    assert ex.partial_sums[:2] == wk.partial_sums[:2]
    assert ex.terms[:2] == wk.terms[:2]


def test_series_convergence_targets():
    s = setup_for()
    ex = dyson_series_exact(s, GRID, 4)
    assert abs(ex.value - exact_amplitude(s, GRID, normalized=True)) <= 1e-6
    wk = weak_evolution_series(s, GRID, 8)
    assert abs(wk.value - weak_exponential(s, GRID)) <= 1e-8
    assert wk.projector_form_deviation <= 1e-12


def test_series_order_bounds():
    s = setup_for()
    with pytest.raises(ValueError):
        dyson_series_exact(s, GRID, MAX_ORDER + 1)
    with pytest.raises(ValueError):
        weak_evolution_series(s, GRID, -1)


@pytest.mark.parametrize("series", [dyson_series_exact, weak_evolution_series])
def test_series_homogeneity(series):
    full = series(setup_for(eps_a=0.1, eps_st=0.3), GRID, 5)
    half = series(setup_for(eps_a=0.05, eps_st=0.3), GRID, 5)
    for m in range(6):
        assert abs(half.terms[m] - 0.5**m * full.terms[m]) <= 1e-12 * max(1.0, abs(full.terms[m]))


def test_weak_series_factorizes_for_constant_integrand():
    s = setup_for(eps_st=0.0, A="sigma_x")
    t = weak_evolution_series(s, GRID, 3).terms
    assert abs(t[2] - 0.5 * t[1] ** 2) < 1e-15
    assert abs(t[3] - t[1] ** 3 / 6) < 1e-15


def test_weak_action_values():
    assert weak_action(setup_for(eps_a=0.0), GRID) == 0
    assert weak_exponential(setup_for(eps_a=0.0), GRID) == 1
    s = setup_for(theta=1.2, eps_a=0.05, eps_st=0.0, A="sigma_x")
    assert abs(weak_action(s, GRID) - 0.05 * math.tan(1.2)) < 1e-10
    assert abs(abs(weak_exponential(s, GRID)) - 1) < 1e-15


@pytest.mark.parametrize("A,B", [("sigma_z", "sigma_x"), ("sigma_x", "sigma_y"), ("sigma_y", "sigma_z")])
def test_weak_action_quadrature_oracle(A, B):
    s = setup_for(theta=1.1, eps_a=0.2, eps_st=0.9, N=2, A=A, B=B)
    ref = oracles.constant_weak_action(PAULI[A].entries, PAULI[B].entries,
                                       oracles.theta_state(1.1), oracles.UP, 0.2, 0.9, N=2)
    # midpoint quadrature of a smooth integrand: error O(step**2)
    coarse = abs(weak_action(s, TimeGrid(1.0, 1000)) - ref)
    fine = abs(weak_action(s, GRID) - ref)
    assert fine < 1e-7
    assert 3.5 < coarse / fine < 4.5


def test_weak_action_additive_over_windows():
    def with_pulse(p):
        return MeasurementSetup(SIGMA_Z, SIGMA_X, theta_pair(1.0), p, PulseProfile.square(0.4))
    a = weak_action(with_pulse(PulseProfile.square(0.03, (0.0, 0.4))), GRID)
    b = weak_action(with_pulse(PulseProfile.square(0.05, (0.4, 1.0))), GRID)
    both = MeasurementSetup(SIGMA_Z, SIGMA_X, theta_pair(1.0),
                            PulseProfile(1.0, (0.0, 1.0), "custom",
                                         tuple([0.075] * 400 + [0.05 / 0.6] * 600)),
                            PulseProfile.square(0.4))
    # the two-level custom pulse differs from the sum only inside one grid cell
    assert abs(weak_action(both, GRID) - (a + b)) < 1e-4 * abs(a + b)
    assert abs(a + b) > 0


def test_weak_exponential_not_clamped():
    s = setup_for(theta=1.2, eps_a=-0.05, eps_st=0.0, A="sigma_y")
    assert abs(weak_exponential(s, GRID)) > 1.1


# -- identity resolution ------------------------------------------------------------

def test_complement_basis_phases():
    f, fbar, i, ibar = complement_basis(theta_pair(1.2))
    assert np.allclose(fbar.amps, [0, 1])
    assert np.allclose(ibar.amps, [math.sin(1.2), -math.cos(1.2)])
    rng = np.random.default_rng(3)
    pair = PrePostPair(random_state(2, rng), random_state(2, rng))
    f, fbar, i, ibar = complement_basis(pair)
    ov = np.vdot(f.amps, i.amps)
    assert abs(ov.imag) < 1e-15 and ov.real > 0
    assert abs(np.vdot(i.amps, ibar.amps)) < 1e-15
    assert abs(np.vdot(f.amps, ibar.amps) - np.vdot(fbar.amps, i.amps)) < 1e-15
    with pytest.raises(DimensionMismatch):
        complement_basis(PrePostPair(random_state(3, rng), random_state(3, rng)))


@pytest.mark.parametrize("t", [0.0, 0.37, 1.0])
def test_identity_resolution(t):
    s = setup_for(eps_st=0.7)
    one = identity_resolution(s, TimeGrid(1.0, 100), t).entries
    assert np.abs(one - np.eye(2)).max() < 1e-12
    ft = effective_post(s, TimeGrid(1.0, 100), t).amps
    assert np.abs(one @ ft - ft).max() < 1e-12


def test_identity_resolution_reassembles_post():
    # |f> = <i|f>|i> + <ibar|f>|ibar>, the exact form of the pre-selection split
    for theta in (0.3, 0.7854, 1.2):
        f, _, i, ibar = complement_basis(theta_pair(theta))
        re = np.vdot(i.amps, f.amps) * i.amps + np.vdot(ibar.amps, f.amps) * ibar.amps
        assert np.abs(re - f.amps).max() < 1e-12
    parts = identity_resolution_components(setup_for(eps_st=0.7), TimeGrid(1.0, 100), 0.5)
    assert set(parts) == {("i", "f"), ("i", "fbar"), ("ibar", "f"), ("ibar", "fbar")}
    assert np.abs(sum(parts.values()) - np.eye(2)).max() < 1e-12


def test_literal_half_sum_form_only_at_quarter_pi():
    # (|i> + |ibar>) / (2 <f|i>) reproduces |f> only when cos = sin
    def lit(theta):
        f, _, i, ibar = complement_basis(theta_pair(theta))
        return np.abs((i.amps + ibar.amps) / (2 * np.vdot(f.amps, i.amps)) - f.amps).max()
    assert lit(math.pi / 4) < 1e-12
    assert lit(1.2) > 0.1


# -- ensembles -----------------------------------------------------------------------

@pytest.mark.parametrize("N", [2, 3])
def test_ensemble_bruteforce(N):
    s = setup_for(theta=1.2, eps_a=0.3, eps_st=0.4, N=N)
    ref = oracles.ensemble_bruteforce(oracles.SZ, oracles.SX, oracles.theta_state(1.2),
                                      oracles.UP, 0.3, 0.4, N)
    assert abs(ensemble_amplitude_exact(s, GRID) - ref) < 1e-10


def test_ensemble_reductions():
    s = setup_for()
    assert ensemble_amplitude_exact(s, GRID) == exact_amplitude(s, GRID)
    ov = np.vdot(effective_post(s, GRID).amps, s.pair.pre.amps)
    assert abs(ensemble_amplitude_weak(s, GRID) - ov * weak_exponential(s, GRID)) < 1e-15
    off = setup_for(eps_a=0.0, eps_st=0.0, N=5)
    for f in (ensemble_amplitude_exact, ensemble_amplitude_weak):
        assert abs(f(off, GRID) - math.cos(1.2) ** 5) < 1e-14


def test_ensemble_deviation_grows_toward_right_angle():
    # measured direction: the weak ensemble amplitude degrades as tan(theta) grows
    errs = []
    for theta in (1.0, 1.3, 1.47):
        s = setup_for(theta=theta, N=4)
        ex, wk = ensemble_amplitude_exact(s, GRID), ensemble_amplitude_weak(s, GRID)
        ref = oracles.ensemble_bruteforce(oracles.SZ, oracles.SX, oracles.theta_state(theta),
                                          oracles.UP, 0.05, 0.005, 4)
        assert abs(ex - ref) < 1e-12
        errs.append(abs(ex - wk) / abs(ex))
    assert errs[0] < errs[1] < errs[2]
