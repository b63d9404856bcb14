import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from weakflow import _kernels_py, kernels
from weakflow.linalg import expm_hermitian

try:
    from weakflow import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])
seeds = st.integers(0, 2**32 - 1)


def _hams(rng, n, d, scale=0.3):
    h = rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))
    return scale * 0.5 * (h + np.swapaxes(h.conj(), 1, 2))


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")
    if _kernels_c is not None:
        assert kernels.BACKEND == "cython"


def test_env_forces_fallback():
    env = dict(os.environ, WEAKFLOW_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import weakflow; print(weakflow.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_cumulative_products(impl, rng):
    u = expm_hermitian(_hams(rng, 7, 3), 0.1)
    p = impl.cumulative_products(u)
    assert p.shape == (8, 3, 3)
    assert np.array_equal(p[0], np.eye(3))
    ref = np.eye(3)
    for k in range(7):
        ref = u[k] @ ref
        assert np.abs(p[k + 1] - ref).max() < 1e-14
    psi = np.array([1, 1j, 0]) / math.sqrt(2)
    assert np.abs(impl.apply_ordered(u, psi) - ref @ psi).max() < 1e-14


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_series_scalar_is_power_series(impl, rng):
    g = -1j * 0.01 * rng.normal(size=50) + 0.002 * rng.normal(size=50)
    c = impl.series_scalar(g, 6)
    s = g.sum()
    for m in range(7):
        assert abs(c[m] - s**m / math.factorial(m)) < 1e-15


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_series_vector_sums_to_product(impl, rng):
    h = _hams(rng, 40, 2, 0.2)
    dt = 0.025
    psi = np.array([math.cos(0.4), math.sin(0.4)], dtype=complex)
    rows = impl.series_vector(-1j * dt * h, psi, 8)
    exact = psi
    for k in range(40):
        exact = expm(-1j * dt * h[k]) @ exact
    assert np.abs(rows.sum(axis=0) - exact).max() < 1e-10
    # homogeneity: scaling the generators by c scales row m by c**m
    rows2 = impl.series_vector(-1j * dt * 0.5 * h, psi, 8)
    for m in range(9):
        assert np.abs(rows2[m] - 0.5**m * rows[m]).max() < 1e-15


@pytest.mark.skipif(_kernels_c is None, reason="compiled extension not built")
@given(seeds, st.integers(1, 60), st.sampled_from([2, 3]), st.integers(0, 8))
def test_backends_agree(seed, n, d, order):
    rng = np.random.default_rng(seed)
    h = _hams(rng, n, d)
    u = expm_hermitian(h, 0.05)
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    g = rng.normal(size=n) * 0.05j
    assert np.abs(_kernels_c.cumulative_products(u) - _kernels_py.cumulative_products(u)).max() < 1e-13
    assert np.abs(_kernels_c.apply_ordered(u, psi) - _kernels_py.apply_ordered(u, psi)).max() < 1e-13
    a = _kernels_c.series_vector(-0.05j * h, psi, order)
    b = _kernels_py.series_vector(-0.05j * h, psi, order)
    assert np.abs(a - b).max() < 1e-13
    assert np.abs(_kernels_c.series_scalar(g, order) - _kernels_py.series_scalar(g, order)).max() < 1e-13


def test_fallback_end_to_end():
    cmd = [sys.executable, "-m", "weakflow.cli", "series-compare", "--steps", "500"]
    outs = []
    for flag in ("1", "0"):
        env = dict(os.environ, WEAKFLOW_PURE_PYTHON=flag)
        outs.append(subprocess.run(cmd, env=env, capture_output=True, text=True, check=True).stdout)
    a, b = (np.loadtxt(o.splitlines(), delimiter=",", skiprows=1) for o in outs)
    assert a.shape == (9, 8)
    assert np.abs(a - b).max() < 1e-13
