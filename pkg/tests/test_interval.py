"""Confidence intervals: hand cases, profile behavior, oracle agreement."""

import numpy as np
import pytest

from artcluster import (
    ArtClusterError,
    GridTooCoarse,
    LinearHypothesis,
    fit_per_cluster,
    interval,
    interval_by_inversion,
    interval_inputs,
    per_g_bounds,
    pvalue_profile,
    run_test,
)
from artcluster.estimation import ClusterEstimates
from artcluster.intervals import (
    default_inversion_grid,
    inversion_scan,
    per_group_bounds,
)
from tests.conftest import random_contrast, random_dataset


def shift_contrast_estimates(est, contrast, delta):
    """Estimates whose c'beta_j values are shifted by delta."""
    c = np.asarray(contrast, dtype=float)
    bump = delta * c / float(c @ c)
    return ClusterEstimates(
        betas=est.betas + bump, sizes=est.sizes, grams=est.grams, labels=est.labels
    )


class TestIntervalInputs:
    def test_hand_example(self, micro_estimates, group_cache):
        inputs = interval_inputs(micro_estimates, [1.0], group_cache(2))
        assert inputs.a_iota == 2.0
        assert inputs.b_iota == 4.0
        assert inputs.lambda0 == 2.0

    def test_balanced_flip_zeroes_slope(self, group_cache):
        # equal sizes, half the signs positive: the slope term vanishes
        est = ClusterEstimates(
            betas=np.array([[1.0], [2.0], [3.0], [4.0]]),
            sizes=np.full(4, 9),
            grams=np.ones((4, 1, 1)),
            labels=("a", "b", "c", "d"),
        )
        inputs = interval_inputs(est, [1.0], group_cache(4))
        half = np.array([1, 1, -1, -1], dtype=np.int8)
        idx = next(
            i for i, row in enumerate(group_cache(4).signs) if np.array_equal(row, half)
        )
        assert inputs.a[idx] == 0.0

    def test_matches_summation_oracle(self, rng, group_cache):
        data = random_dataset(rng, q=6, d=2)
        est = fit_per_cluster(data)
        c = random_contrast(rng, 2)
        group = group_cache(6)
        inputs = interval_inputs(est, c, group)
        w = np.sqrt(est.sizes.astype(float))
        cb = est.betas @ c
        for i in range(0, group.size, 7):
            g = group.signs[i]
            assert inputs.a[i] == pytest.approx(np.sum(g * w) / 6, rel=1e-12, abs=1e-14)
            assert inputs.b[i] == pytest.approx(np.sum(g * w * cb) / 6, rel=1e-12, abs=1e-14)


class TestPerGBounds:
    def test_hand_example_zero_slope_case(self, micro_estimates, group_cache):
        inputs = interval_inputs(micro_estimates, [1.0], group_cache(2))
        lo, hi = per_g_bounds(inputs, [1, -1])
        assert lo.as_float() == 1.0
        assert hi.as_float() == 3.0

    def test_negated_identity_unbounded(self, micro_estimates, group_cache):
        inputs = interval_inputs(micro_estimates, [1.0], group_cache(2))
        lo, hi = per_g_bounds(inputs, [-1, -1])
        assert not lo.is_finite and lo.as_float() == -np.inf
        assert not hi.is_finite and hi.as_float() == np.inf

    def test_crossing_behavior(self, rng, group_cache):
        # just below the upper bound the flipped statistic dominates,
        # just above it the identity dominates (checked on |b - v a|)
        data = random_dataset(rng, q=6, d=2)
        est = fit_per_cluster(data)
        c = random_contrast(rng, 2)
        group = group_cache(6)
        inputs = interval_inputs(est, c, group)
        lo_all, hi_all = per_group_bounds(inputs)
        eps = 1e-7

        def t(i, value):
            return abs(inputs.b[i] - value * inputs.a[i])

        def t_ref(value):
            return abs(inputs.b_iota - value * inputs.a_iota)

        checked = 0
        for i in range(group.size):
            a_abs = abs(inputs.a[i])
            if a_abs == 0.0 or a_abs >= inputs.a_iota * (1 - 1e-12):
                continue
            hi = hi_all[i]
            scale = max(1.0, abs(hi))
            assert t(i, hi - eps * scale) >= t_ref(hi - eps * scale)
            assert t(i, hi + eps * scale) < t_ref(hi + eps * scale)
            lo = lo_all[i]
            scale = max(1.0, abs(lo))
            assert t(i, lo + eps * scale) >= t_ref(lo + eps * scale)
            assert t(i, lo - eps * scale) < t_ref(lo - eps * scale)
            checked += 1
        assert checked > 10

    def test_antisymmetry(self, rng, group_cache):
        data = random_dataset(rng, q=7, d=2)
        inputs = interval_inputs(fit_per_cluster(data), random_contrast(rng, 2), group_cache(7))
        lo_all, hi_all = per_group_bounds(inputs)
        # lexicographic order pairs g with -g by reversal
        assert np.array_equal(lo_all, lo_all[::-1])
        assert np.array_equal(hi_all, hi_all[::-1])


class TestInterval:
    def test_hand_example_alpha_06(self, micro_estimates, group_cache):
        inputs = interval_inputs(micro_estimates, [1.0], group_cache(2))
        ci = interval(inputs, 0.6)
        assert ci.lower.as_float() == 1.0
        assert ci.upper.as_float() == 3.0

    def test_hand_example_alpha_03_unbounded(self, micro_estimates, group_cache):
        inputs = interval_inputs(micro_estimates, [1.0], group_cache(2))
        ci = interval(inputs, 0.3)
        assert not ci.lower.is_finite
        assert not ci.upper.is_finite
        assert not ci.is_bounded

    def test_center_always_covered(self, rng, group_cache):
        for _ in range(10):
            q = int(rng.integers(4, 9))
            data = random_dataset(rng, q=q, d=2)
            inputs = interval_inputs(
                fit_per_cluster(data), random_contrast(rng, 2), group_cache(q)
            )
            for alpha in (0.05, 0.3, 0.9):
                ci = interval(inputs, alpha)
                assert ci.lower.as_float() <= inputs.lambda0 <= ci.upper.as_float()

    def test_shift_equivariance(self, rng, group_cache):
        data = random_dataset(rng, q=6, d=3)
        est = fit_per_cluster(data)
        c = random_contrast(rng, 3)
        group = group_cache(6)
        base = interval(interval_inputs(est, c, group), 0.1)
        delta = 2.75
        shifted = interval(
            interval_inputs(shift_contrast_estimates(est, c, delta), c, group), 0.1
        )
        assert shifted.lambda0 == pytest.approx(base.lambda0 + delta, rel=1e-9)
        assert shifted.lower.as_float() == pytest.approx(
            base.lower.as_float() + delta, rel=1e-9
        )
        assert shifted.upper.as_float() == pytest.approx(
            base.upper.as_float() + delta, rel=1e-9
        )

    def test_scale_equivariance(self, rng, group_cache):
        data = random_dataset(rng, q=6, d=2)
        est = fit_per_cluster(data)
        c = random_contrast(rng, 2)
        group = group_cache(6)
        base = interval(interval_inputs(est, c, group), 0.1)
        kappa = 3.5
        scaled_est = ClusterEstimates(
            betas=kappa * est.betas, sizes=est.sizes, grams=est.grams, labels=est.labels
        )
        scaled = interval(interval_inputs(scaled_est, c, group), 0.1)
        assert scaled.lambda0 == pytest.approx(kappa * base.lambda0, rel=1e-9)
        assert scaled.lower.as_float() == pytest.approx(
            kappa * base.lower.as_float(), rel=1e-9
        )
        assert scaled.upper.as_float() == pytest.approx(
            kappa * base.upper.as_float(), rel=1e-9
        )

    def test_degenerate_equal_estimates_collapse_to_point(self, group_cache):
        # identical rows in every cluster but unequal sizes: the interval
        # collapses to the center up to rounding, and must still validate
        y_pat = np.array([1.3, 2.7, 0.4, -0.9, 1.1])
        z_pat = np.array([[1.0, 0.2], [1.0, -1.4], [1.0, 0.9], [1.0, 2.2], [1.0, -0.6]])
        ys, zs, labels = [], [], []
        for j, reps in enumerate([1, 2, 3, 5]):
            ys.append(np.tile(y_pat, reps))
            zs.append(np.tile(z_pat, (reps, 1)))
            labels.extend([j] * 5 * reps)
        from artcluster import canonicalize

        data = canonicalize(labels, np.concatenate(ys), np.vstack(zs))
        inputs = interval_inputs(fit_per_cluster(data), [0.0, 1.0], group_cache(4))
        ci = interval(inputs, 0.4)
        scale = max(1.0, abs(inputs.lambda0))
        assert abs(ci.lower.as_float() - inputs.lambda0) < 1e-12 * scale
        assert abs(ci.upper.as_float() - inputs.lambda0) < 1e-12 * scale
        assert ci.lower <= ci.upper

    def test_duality_with_test(self, rng, group_cache):
        data = random_dataset(rng, q=7, d=2)
        c = random_contrast(rng, 2)
        group = group_cache(7)
        alpha = 0.1
        ci = interval(interval_inputs(fit_per_cluster(data), c, group), alpha)
        lo, hi = ci.lower.as_float(), ci.upper.as_float()
        width = hi - lo
        inside = [lo + 0.25 * width, ci.lambda0, hi - 0.25 * width]
        outside = [lo - 0.05 * width, hi + 0.05 * width]
        for value in inside:
            res = run_test(data, LinearHypothesis(contrast=c, value=value), alpha, group)
            assert res.p_value >= alpha
        for value in outside:
            res = run_test(data, LinearHypothesis(contrast=c, value=value), alpha, group)
            assert res.p_value < alpha


class TestProfile:
    def test_center_value_is_one(self, rng, group_cache):
        data = random_dataset(rng, q=6, d=2)
        inputs = interval_inputs(fit_per_cluster(data), random_contrast(rng, 2), group_cache(6))
        assert pvalue_profile(inputs, inputs.lambda0) == 1.0

    def test_tail_limit(self, rng, group_cache):
        data = random_dataset(rng, q=6, d=2)
        group = group_cache(6)
        inputs = interval_inputs(fit_per_cluster(data), random_contrast(rng, 2), group)
        # far enough out only +-identity survive
        span = float(np.max(np.abs(inputs.weighted))) + 1.0
        for value in (inputs.lambda0 - 1e6 * span, inputs.lambda0 + 1e6 * span):
            assert pvalue_profile(inputs, value) == 2.0 / group.size

    def test_unimodal_on_grid(self, rng, group_cache):
        for _ in range(5):
            q = int(rng.integers(5, 9))
            data = random_dataset(rng, q=q, d=2)
            inputs = interval_inputs(
                fit_per_cluster(data), random_contrast(rng, 2), group_cache(q)
            )
            grid = np.linspace(inputs.lambda0 - 5.0, inputs.lambda0 + 5.0, 401)
            values = np.array([pvalue_profile(inputs, v) for v in grid])
            below = grid < inputs.lambda0
            above = grid > inputs.lambda0
            assert np.all(np.diff(values[below]) >= 0.0)
            assert np.all(np.diff(values[above]) <= 0.0)

    def test_self_check_is_active(self, rng, group_cache, monkeypatch):
        from artcluster import intervals as mod

        data = random_dataset(rng, q=5, d=2)
        inputs = interval_inputs(fit_per_cluster(data), random_contrast(rng, 2), group_cache(5))
        monkeypatch.setattr(mod, "_profile_direct", lambda *_: -1.0)
        with pytest.raises(ArtClusterError):
            pvalue_profile(inputs, inputs.lambda0 + 0.5)


class TestInversionOracle:
    def test_agrees_with_closed_form(self, rng, group_cache):
        for _ in range(4):
            q = int(rng.integers(5, 9))
            data = random_dataset(rng, q=q, d=2)
            est = fit_per_cluster(data)
            c = random_contrast(rng, 2)
            group = group_cache(q)
            ci = interval(interval_inputs(est, c, group), 0.1)
            grid = default_inversion_grid(est, c, points=2001)
            inv = interval_by_inversion(est, c, 0.1, group, grid)
            step = grid[1] - grid[0]
            assert abs(ci.lower.as_float() - inv.lower.as_float()) <= step
            assert abs(ci.upper.as_float() - inv.upper.as_float()) <= step

    def test_nested_grid_containment(self, rng, group_cache):
        data = random_dataset(rng, q=6, d=2)
        est = fit_per_cluster(data)
        c = random_contrast(rng, 2)
        group = group_cache(6)
        coarse_grid = default_inversion_grid(est, c, points=501)
        fine_grid = default_inversion_grid(est, c, points=4001)
        coarse = interval_by_inversion(est, c, 0.1, group, coarse_grid)
        fine = interval_by_inversion(est, c, 0.1, group, fine_grid)
        coarse_step = coarse_grid[1] - coarse_grid[0]
        assert fine.lower.as_float() >= coarse.lower.as_float() - coarse_step
        assert fine.upper.as_float() <= coarse.upper.as_float() + coarse_step

    def test_reasonable_alpha_bounded(self, rng, group_cache):
        data = random_dataset(rng, q=7, d=2)
        est = fit_per_cluster(data)
        c = random_contrast(rng, 2)
        inv = interval_by_inversion(est, c, 0.2, group_cache(7))
        assert inv.lower.is_finite and inv.upper.is_finite

    def test_grid_too_coarse(self, rng, group_cache):
        data = random_dataset(rng, q=6, d=2)
        est = fit_per_cluster(data)
        c = random_contrast(rng, 2)
        inputs = interval_inputs(est, c, group_cache(6))
        ci = interval(inputs, 0.2)
        lo, hi = ci.lower.as_float(), ci.upper.as_float()
        # two points bracketing the center but far outside the interval
        width = hi - lo
        grid = np.array([lo - 60 * width, hi + 60 * width])
        with pytest.raises(GridTooCoarse):
            interval_by_inversion(est, c, 0.2, group_cache(6), grid)

    def test_grid_must_contain_center(self, rng, group_cache):
        data = random_dataset(rng, q=5, d=2)
        est = fit_per_cluster(data)
        c = random_contrast(rng, 2)
        inputs = interval_inputs(est, c, group_cache(5))
        grid = np.linspace(inputs.lambda0 + 1.0, inputs.lambda0 + 2.0, 50)
        with pytest.raises(ValueError):
            interval_by_inversion(est, c, 0.1, group_cache(5), grid)

    def test_nonrejection_region_contiguous(self, rng, group_cache):
        data = random_dataset(rng, q=6, d=2)
        est = fit_per_cluster(data)
        c = random_contrast(rng, 2)
        group = group_cache(6)
        grid = default_inversion_grid(est, c, points=801)
        for alpha in (0.01, 0.05, 0.10, 0.32):
            keep = inversion_scan(est, c, alpha, group, grid)
            idx = np.flatnonzero(keep)
            assert idx.size > 0
            assert np.array_equal(idx, np.arange(idx[0], idx[-1] + 1))
