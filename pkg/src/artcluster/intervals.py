"""Closed-form confidence intervals for a scalar contrast, plus oracles.

The non-rejected values of the null form a closed interval.  Its
endpoints are quantiles of per-group crossing points of V-shaped maps:
for each sign pattern g the statistic as a function of the null value is
|b(g) - value * a(g)|, and the bounds are where that V crosses the
identity pattern's V.  ``interval_by_inversion`` is the brute-force
grid-scan oracle used to cross-check the closed form in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from artcluster import kernels
from artcluster.errors import ArtClusterError, GridTooCoarse
from artcluster.estimation import ClusterEstimates, fit_per_cluster
from artcluster.groups import SignGroup, as_sign_vector
from artcluster.model import ClusteredDataset, ExtendedReal, _frozen
from artcluster.randtest import (
    ScoreVector,
    order_statistic_index,
    run_test_from_scores,
    snap_tolerance,
)

__all__ = [
    "ConfidenceInterval",
    "IntervalInputs",
    "interval",
    "interval_by_inversion",
    "interval_inputs",
    "inversion_scan",
    "default_inversion_grid",
    "per_g_bounds",
    "per_group_bounds",
    "pvalue_profile",
]

GRID_POINTS_DEFAULT = 4001
GRID_HALF_WIDTHS = 10.0


# ------------------------------------------------------------------ #
# Inputs
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class IntervalInputs:
    """Slope/offset summaries a(g), b(g) for every group element.

    a(g) = mean_j sqrt(n_j) g_j and b(g) = mean_j sqrt(n_j) g_j c'beta_j,
    stored aligned with ``group.signs``; row 0 is the identity, so
    ``a[0] > 0`` and the p-value-1 center is ``lambda0 = b[0] / a[0]``.
    ``weights``/``weighted`` keep the per-cluster ingredients so bounds
    can be evaluated for arbitrary sign vectors.
    """

    weights: np.ndarray  # (q,) sqrt(n_j)
    weighted: np.ndarray  # (q,) sqrt(n_j) * c'beta_j
    a: np.ndarray  # (m,)
    b: np.ndarray  # (m,)
    group: SignGroup

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        wb = np.asarray(self.weighted, dtype=np.float64).reshape(-1)
        a = np.asarray(self.a, dtype=np.float64).reshape(-1)
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if w.shape != wb.shape or w.shape[0] != self.group.q:
            raise ValueError("weights must have one entry per cluster")
        if a.shape != b.shape or a.shape[0] != self.group.size:
            raise ValueError("a and b must have one entry per group element")
        if not (a[0] > 0.0):
            raise ValueError("identity row must have positive weight mean")
        if np.any(np.abs(a) > a[0] * (1.0 + 1e-12)):
            raise ValueError("|a(g)| cannot exceed a(identity)")
        for name, arr in (("weights", w), ("weighted", wb), ("a", a), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "weighted", _frozen(wb))
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", _frozen(b))

    @property
    def a_iota(self) -> float:
        return float(self.a[0])

    @property
    def b_iota(self) -> float:
        return float(self.b[0])

    @property
    def lambda0(self) -> float:
        return self.b_iota / self.a_iota


def interval_inputs(
    estimates: ClusterEstimates, contrast: np.ndarray, group: SignGroup
) -> IntervalInputs:
    """Compute a(g), b(g) for every group element from per-cluster fits."""
    c = np.asarray(contrast, dtype=np.float64).reshape(-1)
    if c.shape[0] != estimates.d_z:
        raise ValueError("contrast length must equal the covariate count")
    if group.q != estimates.q:
        raise ValueError("group and estimates disagree on the number of clusters")
    w = np.sqrt(estimates.sizes.astype(np.float64))
    wb = w * (estimates.betas @ c)
    a = kernels.group_means(group.signs, w)
    b = kernels.group_means(group.signs, wb)
    return IntervalInputs(weights=w, weighted=wb, a=a, b=b, group=group)


# ------------------------------------------------------------------ #
# Per-group bounds
# ------------------------------------------------------------------ #


def _pm_iota_mask(signs: np.ndarray) -> np.ndarray:
    """Rows equal to +-identity, i.e. with all entries equal."""
    return np.all(signs == signs[:, :1], axis=1)


def per_group_bounds(inputs: IntervalInputs) -> tuple[np.ndarray, np.ndarray]:
    """Lower/upper crossing points for every group row (floats, +-inf)."""
    pm = _pm_iota_mask(inputs.group.signs)
    return kernels.interval_bounds(
        inputs.a, inputs.b, inputs.a_iota, inputs.b_iota, pm
    )


def per_g_bounds(inputs: IntervalInputs, g) -> tuple[ExtendedReal, ExtendedReal]:
    """Bounds contributed by a single sign vector, as extended reals.

    The +-identity vectors contribute (-inf, +inf); a vector with zero
    weight mean contributes a symmetric band around the center; the
    generic case is the pair of V-crossing points.
    """
    signs = as_sign_vector(g, inputs.group.q).reshape(1, -1)
    a = kernels.group_means(signs, inputs.weights)
    b = kernels.group_means(signs, inputs.weighted)
    pm = _pm_iota_mask(signs)
    lo, hi = kernels.interval_bounds(a, b, inputs.a_iota, inputs.b_iota, pm)
    return ExtendedReal.from_float(float(lo[0])), ExtendedReal.from_float(float(hi[0]))


# ------------------------------------------------------------------ #
# The interval
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class ConfidenceInterval:
    """A closed interval [lower, upper] over the extended reals.

    ``lower_per_g``/``upper_per_g`` hold the per-group crossing points
    (aligned with the group) when the interval came from the closed
    form; the grid-inversion oracle leaves them ``None``.
    """

    lower: ExtendedReal
    upper: ExtendedReal
    alpha: float
    lambda0: float
    lower_per_g: np.ndarray | None = None
    upper_per_g: np.ndarray | None = None
    group_size: int | None = None
    group_mode: str | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        # degenerate instances (all cluster estimates equal) can leave the
        # endpoints an ulp out of order; tolerate rounding-scale noise only
        tol = 4e-16 * max(1.0, abs(self.lambda0))
        if self.upper.as_float() < self.lower.as_float() - tol:
            raise ValueError("interval endpoints out of order")
        if self.lower_per_g is not None:
            lo = _frozen(np.asarray(self.lower_per_g, dtype=np.float64))
            hi = _frozen(np.asarray(self.upper_per_g, dtype=np.float64))
            object.__setattr__(self, "lower_per_g", lo)
            object.__setattr__(self, "upper_per_g", hi)
            if not (lo[0] == -math.inf and hi[0] == math.inf):
                raise ValueError("identity row must contribute (-inf, +inf)")
            if (
                self.lower.as_float() > self.lambda0 + tol
                or self.upper.as_float() < self.lambda0 - tol
            ):
                raise ValueError("the center point must lie inside the interval")

    @property
    def is_bounded(self) -> bool:
        return self.lower.is_finite and self.upper.is_finite


def interval(inputs: IntervalInputs, alpha: float) -> ConfidenceInterval:
    """Closed-form interval: alpha-quantiles of the per-group bounds.

    The lower endpoint is the alpha-quantile of the lower bounds; the
    upper endpoint is minus the alpha-quantile of the negated upper
    bounds (i.e. their ceil(m*alpha)-th largest).  Infinite entries
    participate, so an unbounded interval is a legal return -- forced
    whenever alpha <= 2/m, since +-identity always contribute infinities.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    lo_all, hi_all = per_group_bounds(inputs)
    m = inputs.group.size
    k = order_statistic_index(m, alpha)
    lower = float(np.sort(lo_all)[k - 1])
    upper = float(np.sort(hi_all)[m - k])
    if lower > upper:  # ulp inversion on degenerate (point) intervals
        lower, upper = upper, lower
    return ConfidenceInterval(
        lower=ExtendedReal.from_float(lower),
        upper=ExtendedReal.from_float(upper),
        alpha=float(alpha),
        lambda0=inputs.lambda0,
        lower_per_g=lo_all,
        upper_per_g=hi_all,
        group_size=m,
        group_mode=inputs.group.mode,
    )


# ------------------------------------------------------------------ #
# P-value profile
# ------------------------------------------------------------------ #


def _profile_direct(inputs: IntervalInputs, value: float) -> float:
    """p-value at ``value`` straight from |b - value*a| comparisons.

    Uses the engine's tie-snapping rule, so at the center point (where
    the reference statistic is a rounding residue of order 1e-16) every
    group element still counts and the profile equals 1 exactly.
    """
    t = np.abs(inputs.b - value * inputs.a)
    ref = abs(inputs.b_iota - value * inputs.a_iota)
    thresh = ref - snap_tolerance(ref)
    return float(np.count_nonzero(t >= thresh)) / inputs.group.size


def pvalue_profile(inputs: IntervalInputs, value: float) -> float:
    """The randomization p-value as a function of the null value.

    Evaluates both the direct form (statistic comparisons) and the
    piecewise form (counting per-group bounds on the relevant side of
    the center); the two must agree, and the piecewise value is
    returned.  Equals 1 at the center, is non-decreasing below it and
    non-increasing above it.
    """
    value = float(value)
    direct = _profile_direct(inputs, value)
    lam0 = inputs.lambda0
    if value < lam0:
        lo_all, _ = per_group_bounds(inputs)
        piecewise = float(np.count_nonzero(value >= lo_all)) / inputs.group.size
    elif value > lam0:
        _, hi_all = per_group_bounds(inputs)
        piecewise = float(np.count_nonzero(value <= hi_all)) / inputs.group.size
    else:
        piecewise = 1.0
    if piecewise != direct:
        raise ArtClusterError(
            f"p-value profile self-check failed at {value!r}: "
            f"direct {direct} vs piecewise {piecewise}"
        )
    return piecewise


# ------------------------------------------------------------------ #
# Test-inversion oracle
# ------------------------------------------------------------------ #


def default_inversion_grid(
    estimates: ClusterEstimates,
    contrast: np.ndarray,
    points: int = GRID_POINTS_DEFAULT,
) -> np.ndarray:
    """Symmetric grid around the center, wide enough to bracket the interval."""
    c = np.asarray(contrast, dtype=np.float64).reshape(-1)
    w = np.sqrt(estimates.sizes.astype(np.float64))
    cbeta = estimates.betas @ c
    lam0 = float(w @ cbeta) / float(w.sum())
    span = float(np.max(np.abs(cbeta - lam0)))
    span = max(span, 1e-8 * max(1.0, abs(lam0)))
    half = GRID_HALF_WIDTHS * span
    return np.linspace(lam0 - half, lam0 + half, points)


def inversion_scan(
    estimates: ClusterEstimates,
    contrast: np.ndarray,
    alpha: float,
    group: SignGroup,
    grid: np.ndarray,
) -> np.ndarray:
    """Run the full test at every grid value; True where not rejected.

    The per-cluster fits do not depend on the null value, so they are
    reused; everything downstream (scores, sweep, quantile) is the real
    test engine.
    """
    c = np.asarray(contrast, dtype=np.float64).reshape(-1)
    w = np.sqrt(estimates.sizes.astype(np.float64))
    cbeta = estimates.betas @ c
    keep = np.empty(grid.shape[0], dtype=bool)
    for i, value in enumerate(grid):
        scores = ScoreVector(values=w * (cbeta - value), sizes=estimates.sizes)
        keep[i] = not run_test_from_scores(scores, alpha, group).reject
    return keep


def interval_by_inversion(
    data: ClusteredDataset | ClusterEstimates,
    contrast: np.ndarray,
    alpha: float,
    group: SignGroup,
    grid: np.ndarray | None = None,
) -> ConfidenceInterval:
    """Brute-force oracle: smallest and largest non-rejected grid value.

    A test-support tool for cross-checking :func:`interval`; endpoints
    are only grid-step accurate and an unbounded true interval shows up
    as the grid edges.

    Raises
    ------
    GridTooCoarse
        When every grid value is rejected.
    """
    estimates = data if isinstance(data, ClusterEstimates) else fit_per_cluster(data)
    if grid is None:
        grid = default_inversion_grid(estimates, contrast)
    grid = np.asarray(grid, dtype=np.float64).reshape(-1)
    if grid.size < 2 or not np.all(np.isfinite(grid)):
        raise ValueError("grid must contain at least two finite values")
    c = np.asarray(contrast, dtype=np.float64).reshape(-1)
    w = np.sqrt(estimates.sizes.astype(np.float64))
    lam0 = float(w @ (estimates.betas @ c)) / float(w.sum())
    if not grid[0] <= lam0 <= grid[-1]:
        raise ValueError("grid must contain the center point")
    keep = inversion_scan(estimates, contrast, alpha, group, grid)
    if not keep.any():
        raise GridTooCoarse("no grid value survived test inversion")
    kept = grid[keep]
    return ConfidenceInterval(
        lower=ExtendedReal.finite(float(kept[0])),
        upper=ExtendedReal.finite(float(kept[-1])),
        alpha=float(alpha),
        lambda0=lam0,
        group_size=group.size,
        group_mode=group.mode,
    )
