"""Hot numeric kernels: sweeping statistics over the whole sign group.

Each kernel exists twice: an ``*_numpy`` reference implementation and a
numba ``@njit`` version compiled at import time.  The public names
(:func:`group_means`, :func:`group_wald_quadratic`,
:func:`interval_bounds`) point at the jit path when numba imported
cleanly, and at the numpy path otherwise.  Setting the environment
variable ``ARTCLUSTER_NO_NUMBA=1`` before import forces the numpy path.

Both paths accumulate in the same element order (columns left to right,
then the quadratic form row by row), so they return bitwise-identical
arrays; ``benchmarks/bench_kernels.py`` compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "backend_name",
    "group_means",
    "group_means_numpy",
    "group_wald_quadratic",
    "group_wald_quadratic_numpy",
    "interval_bounds",
    "interval_bounds_numpy",
]


def _numba_disabled_by_env() -> bool:
    return os.environ.get("ARTCLUSTER_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}


try:
    if _numba_disabled_by_env():
        raise ImportError("numba disabled via ARTCLUSTER_NO_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


# ------------------------------------------------------------------ #
# Signed means:  out[i] = (1/q) * sum_j signs[i, j] * values[j]
# ------------------------------------------------------------------ #


def group_means_numpy(signs: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Mean of sign-flipped values for every group row (numpy path)."""
    m, q = signs.shape
    acc = np.zeros(m, dtype=np.float64)
    for j in range(q):
        acc += signs[:, j] * values[j]
    return acc / q


def _group_means_loop(signs, values, out):
    m, q = signs.shape
    for i in range(m):
        acc = 0.0
        for j in range(q):
            acc += signs[i, j] * values[j]
        out[i] = acc / q


# ------------------------------------------------------------------ #
# Wald quadratic form:  out[i] = q * mean_i' sigma_inv mean_i
# where mean_i = (1/q) * sum_j signs[i, j] * scores[j, :]
# ------------------------------------------------------------------ #


def group_wald_quadratic_numpy(
    signs: np.ndarray, scores: np.ndarray, sigma_inv: np.ndarray
) -> np.ndarray:
    m, q = signs.shape
    p = scores.shape[1]
    means = np.zeros((m, p), dtype=np.float64)
    for j in range(q):
        means += signs[:, j, None] * scores[j][None, :]
    means /= q
    out = np.zeros(m, dtype=np.float64)
    for r in range(p):
        acc = np.zeros(m, dtype=np.float64)
        for c in range(p):
            acc += means[:, c] * sigma_inv[c, r]
        out += acc * means[:, r]
    return out * q


def _group_wald_loop(signs, scores, sigma_inv, out):
    m, q = signs.shape
    p = scores.shape[1]
    mean = np.empty(p, dtype=np.float64)
    for i in range(m):
        for c in range(p):
            mean[c] = 0.0
        for j in range(q):
            s = signs[i, j]
            for c in range(p):
                mean[c] += s * scores[j, c]
        for c in range(p):
            mean[c] /= q
        val = 0.0
        for r in range(p):
            acc = 0.0
            for c in range(p):
                acc += mean[c] * sigma_inv[c, r]
            val += acc * mean[r]
        out[i] = val * q


# ------------------------------------------------------------------ #
# Per-group interval bounds (crossing points of the V-shaped maps)
# ------------------------------------------------------------------ #
#
# a, b are the slope/offset summaries of each group element; a0 = a[0]
# and b0 = b[0] belong to the identity vector.  ``pm_iota`` flags rows
# equal to +-identity, whose bounds are (-inf, +inf) by definition --
# checking it first keeps the a0 - |a| denominator away from zero.
# The two finite crossings are evaluated in the cross-multiplied form
#     (b0 + b*sgn(a)) / (a0 + |a|)   and   (b0 - b*sgn(a)) / (a0 - |a|)
# which avoids dividing by a itself; the branch test b/a <= b0/a0 is
# likewise cross-multiplied to b*sgn(a)*a0 <= b0*|a|.


def interval_bounds_numpy(
    a: np.ndarray, b: np.ndarray, a0: float, b0: float, pm_iota: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    sgn = np.where(a >= 0.0, 1.0, -1.0)
    aabs = np.abs(a)
    babs = b * sgn
    with np.errstate(divide="ignore", invalid="ignore"):
        plus_val = (b0 + babs) / (a0 + aabs)
        minus_val = (b0 - babs) / (a0 - aabs)
    ratio_le = babs * a0 <= b0 * aabs
    ratio_ge = babs * a0 >= b0 * aabs
    zero_a = a == 0.0
    center_lo = (b0 - np.abs(b)) / a0
    center_hi = (b0 + np.abs(b)) / a0
    lo = np.where(ratio_le, plus_val, minus_val)
    hi = np.where(ratio_ge, plus_val, minus_val)
    lo = np.where(zero_a, center_lo, lo)
    hi = np.where(zero_a, center_hi, hi)
    lo = np.where(pm_iota, -np.inf, lo)
    hi = np.where(pm_iota, np.inf, hi)
    return lo, hi


def _interval_bounds_loop(a, b, a0, b0, pm_iota, lo, hi):
    m = a.shape[0]
    for i in range(m):
        if pm_iota[i]:
            lo[i] = -np.inf
            hi[i] = np.inf
        elif a[i] == 0.0:
            lo[i] = (b0 - abs(b[i])) / a0
            hi[i] = (b0 + abs(b[i])) / a0
        else:
            sgn = 1.0 if a[i] >= 0.0 else -1.0
            aabs = abs(a[i])
            babs = b[i] * sgn
            plus_val = (b0 + babs) / (a0 + aabs)
            minus_val = (b0 - babs) / (a0 - aabs)
            lo[i] = plus_val if babs * a0 <= b0 * aabs else minus_val
            hi[i] = plus_val if babs * a0 >= b0 * aabs else minus_val


# ------------------------------------------------------------------ #
# Backend selection
# ------------------------------------------------------------------ #

if NUMBA_ENABLED:
    _group_means_jit = njit(cache=True)(_group_means_loop)
    _group_wald_jit = njit(cache=True)(_group_wald_loop)
    _interval_bounds_jit = njit(cache=True)(_interval_bounds_loop)

    def group_means_numba(signs: np.ndarray, values: np.ndarray) -> np.ndarray:
        out = np.empty(signs.shape[0], dtype=np.float64)
        _group_means_jit(signs, np.ascontiguousarray(values, dtype=np.float64), out)
        return out

    def group_wald_quadratic_numba(signs, scores, sigma_inv):
        out = np.empty(signs.shape[0], dtype=np.float64)
        _group_wald_jit(
            signs,
            np.ascontiguousarray(scores, dtype=np.float64),
            np.ascontiguousarray(sigma_inv, dtype=np.float64),
            out,
        )
        return out

    def interval_bounds_numba(a, b, a0, b0, pm_iota):
        lo = np.empty(a.shape[0], dtype=np.float64)
        hi = np.empty(a.shape[0], dtype=np.float64)
        _interval_bounds_jit(
            np.ascontiguousarray(a, dtype=np.float64),
            np.ascontiguousarray(b, dtype=np.float64),
            float(a0),
            float(b0),
            np.ascontiguousarray(pm_iota, dtype=np.bool_),
            lo,
            hi,
        )
        return lo, hi

    group_means = group_means_numba
    group_wald_quadratic = group_wald_quadratic_numba
    interval_bounds = interval_bounds_numba
else:
    group_means = group_means_numpy
    group_wald_quadratic = group_wald_quadratic_numpy
    interval_bounds = interval_bounds_numpy
