"""Backend selection for the sequential hot loops.

The compiled extension :mod:`weakflow._kernels` is used when it imports;
otherwise the numpy implementation in :mod:`weakflow._kernels_py` is used.
Set ``WEAKFLOW_PURE_PYTHON=1`` to force the fallback.

Kernels
-------
cumulative_products(steps)
    ``steps[n, d, d]`` -> ``P[n+1, d, d]`` with ``P[0] = 1`` and
    ``P[k+1] = steps[k] @ P[k]``.
apply_ordered(steps, psi)
    ``steps[n-1] @ ... @ steps[0] @ psi``.
series_vector(gens, psi, order)
    Coupling-order expansion of ``prod_k exp(gens[k]) psi``: row ``m`` holds
    the part homogeneous of degree ``m`` in the generators. Rows sum to the
    full product as ``order`` grows.
series_scalar(gens, order)
    Same for commuting scalar generators; row ``m`` equals ``(sum gens)**m / m!``.
"""

import os

from . import _kernels_py

if os.environ.get("WEAKFLOW_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = _impl.BACKEND
cumulative_products = _impl.cumulative_products
apply_ordered = _impl.apply_ordered
series_vector = _impl.series_vector
series_scalar = _impl.series_scalar

__all__ = [
    "BACKEND",
    "cumulative_products",
    "apply_ordered",
    "series_vector",
    "series_scalar",
]
