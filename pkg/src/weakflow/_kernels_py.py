"""Pure-numpy implementations of the sequential kernels.

Reference path and fallback for :mod:`weakflow._kernels`. Signatures and
semantics are identical; see :mod:`weakflow.kernels` for the contract.
"""

import numpy as np

BACKEND = "python"


def cumulative_products(steps):
    steps = np.ascontiguousarray(steps, dtype=np.complex128)
    n, d, _ = steps.shape
    out = np.empty((n + 1, d, d), dtype=np.complex128)
    out[0] = np.eye(d)
    for k in range(n):
        out[k + 1] = steps[k] @ out[k]
    return out


def apply_ordered(steps, psi):
    steps = np.ascontiguousarray(steps, dtype=np.complex128)
    v = np.array(psi, dtype=np.complex128)
    for k in range(steps.shape[0]):
        v = steps[k] @ v
    return v


def series_vector(gens, psi, order):
    gens = np.ascontiguousarray(gens, dtype=np.complex128)
    d = gens.shape[1]
    v = np.zeros((order + 1, d), dtype=np.complex128)
    v[0] = psi
    for k in range(gens.shape[0]):
        g = gens[k]
        # descending m keeps lower orders at their pre-step values
        for m in range(order, 0, -1):
            acc = v[0].copy()
            for l in range(1, m + 1):
                acc = v[l] + (g @ acc) / (m - l + 1)
            v[m] = acc
    return v


def series_scalar(gens, order):
    gens = np.ascontiguousarray(gens, dtype=np.complex128)
    c = [0j] * (order + 1)
    c[0] = 1.0 + 0j
    for g in gens.tolist():
        for m in range(order, 0, -1):
            acc = c[0]
            for l in range(1, m + 1):
                acc = c[l] + g * acc / (m - l + 1)
            c[m] = acc
    return np.array(c, dtype=np.complex128)
