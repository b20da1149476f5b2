"""Distance kernels with a compiled core and a pure-Python fallback.

The Cython extension is used when it built successfully; otherwise (or when
WSBOOST_PURE=1 is set) the numpy/scipy fallback is selected. Both expose the
same three functions and produce identical results up to float rounding.
"""

import os

import numpy as np

from . import _fallback

if os.environ.get("WSBOOST_PURE") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

__all__ = [
    "BACKEND",
    "mean_pairwise_distance",
    "mean_indexed_distance",
    "point_distances",
]


def _as_c_float64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def mean_pairwise_distance(x):
    """Mean Euclidean distance over all unordered pairs of rows of x."""
    return float(_impl.mean_pairwise_distance(_as_c_float64(x)))


def mean_indexed_distance(x, ii, jj):
    """Mean Euclidean distance over the row pairs (ii[m], jj[m])."""
    ii = np.ascontiguousarray(ii, dtype=np.int64)
    jj = np.ascontiguousarray(jj, dtype=np.int64)
    return float(_impl.mean_indexed_distance(_as_c_float64(x), ii, jj))


def point_distances(x, center):
    """Euclidean distances from every row of x to a single point."""
    return np.asarray(
        _impl.point_distances(_as_c_float64(x), _as_c_float64(center))
    )
