"""Kernel correctness: numba and numpy paths must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest

from artcluster import kernels
from artcluster.groups import exhaustive_group


@pytest.fixture(scope="module")
def payload():
    rng = np.random.default_rng(5150)
    group = exhaustive_group(9)
    values = rng.standard_normal(9)
    weights = np.sqrt(rng.integers(2, 60, size=9).astype(float))
    scores = rng.standard_normal((9, 3))
    sigma_inv = np.linalg.inv(scores.T @ scores / 9)
    return group, values, weights, scores, sigma_inv


class TestGroupMeans:
    def test_paths_bitwise_identical(self, payload):
        group, values, _, _, _ = payload
        assert np.array_equal(
            kernels.group_means(group.signs, values),
            kernels.group_means_numpy(group.signs, values),
        )

    def test_matches_dense_oracle(self, payload):
        group, values, _, _, _ = payload
        oracle = (group.signs.astype(float) @ values) / group.q
        got = kernels.group_means(group.signs, values)
        assert np.allclose(got, oracle, rtol=1e-13, atol=1e-15)

    def test_identity_row_is_plain_mean(self, payload):
        group, values, _, _, _ = payload
        assert kernels.group_means(group.signs, values)[0] == pytest.approx(
            values.mean(), rel=1e-13
        )


class TestWaldQuadratic:
    def test_paths_bitwise_identical(self, payload):
        group, _, _, scores, sigma_inv = payload
        assert np.array_equal(
            kernels.group_wald_quadratic(group.signs, scores, sigma_inv),
            kernels.group_wald_quadratic_numpy(group.signs, scores, sigma_inv),
        )

    def test_matches_dense_oracle(self, payload):
        group, _, _, scores, sigma_inv = payload
        q = group.q
        means = group.signs.astype(float) @ scores / q
        oracle = q * np.einsum("ij,jk,ik->i", means, sigma_inv, means)
        got = kernels.group_wald_quadratic(group.signs, scores, sigma_inv)
        assert np.allclose(got, oracle, rtol=1e-11, atol=1e-13)


def _literal_bounds(a, b, a0, b0, pm):
    """The crossing-point formulas exactly as displayed, divisions and all."""
    lam0 = b0 / a0
    lo = np.empty_like(a)
    hi = np.empty_like(a)
    for i in range(a.shape[0]):
        if pm[i]:
            lo[i], hi[i] = -np.inf, np.inf
        elif a[i] == 0.0:
            lo[i] = lam0 - abs(b[i]) / a0
            hi[i] = lam0 + abs(b[i]) / a0
        else:
            ratio = b[i] / a[i]
            plus = lam0 * a0 / (a0 + abs(a[i])) + ratio * abs(a[i]) / (a0 + abs(a[i]))
            minus = lam0 * a0 / (a0 - abs(a[i])) - ratio * abs(a[i]) / (a0 - abs(a[i]))
            lo[i] = plus if ratio <= lam0 else minus
            hi[i] = plus if ratio >= lam0 else minus
    return lo, hi


class TestIntervalBounds:
    def test_paths_bitwise_identical(self, payload):
        group, _, weights, _, _ = payload
        rng = np.random.default_rng(11)
        wb = weights * rng.standard_normal(group.q)
        a = kernels.group_means_numpy(group.signs, weights)
        b = kernels.group_means_numpy(group.signs, wb)
        pm = np.all(group.signs == group.signs[:, :1], axis=1)
        got = kernels.interval_bounds(a, b, a[0], b[0], pm)
        ref = kernels.interval_bounds_numpy(a, b, a[0], b[0], pm)
        assert np.array_equal(got[0], ref[0]) and np.array_equal(got[1], ref[1])

    def test_matches_literal_formulas(self, payload):
        group, _, weights, _, _ = payload
        rng = np.random.default_rng(12)
        wb = weights * rng.standard_normal(group.q)
        a = kernels.group_means_numpy(group.signs, weights)
        b = kernels.group_means_numpy(group.signs, wb)
        pm = np.all(group.signs == group.signs[:, :1], axis=1)
        lo, hi = kernels.interval_bounds(a, b, a[0], b[0], pm)
        lo_ref, hi_ref = _literal_bounds(a, b, float(a[0]), float(b[0]), pm)
        assert np.allclose(lo, lo_ref, rtol=1e-10, atol=1e-12)
        assert np.allclose(hi, hi_ref, rtol=1e-10, atol=1e-12)

    def test_zero_slope_rows(self):
        # equal weights, half the signs flipped: a(g) is exactly zero
        group = exhaustive_group(4)
        w = np.full(4, 2.0)
        wb = w * np.array([1.0, 3.0, -2.0, 0.5])
        a = kernels.group_means_numpy(group.signs, w)
        b = kernels.group_means_numpy(group.signs, wb)
        pm = np.all(group.signs == group.signs[:, :1], axis=1)
        lo, hi = kernels.interval_bounds(a, b, a[0], b[0], pm)
        zero_rows = (a == 0.0) & ~pm
        assert zero_rows.any()
        lam0 = b[0] / a[0]
        assert np.allclose(lo[zero_rows], lam0 - np.abs(b[zero_rows]) / a[0])
        assert np.allclose(hi[zero_rows], lam0 + np.abs(b[zero_rows]) / a[0])


@pytest.mark.skipif(not kernels.NUMBA_ENABLED, reason="numba path already disabled")
def test_env_flag_selects_numpy_backend():
    code = (
        "from artcluster import kernels\n"
        "import numpy as np\n"
        "assert kernels.backend_name() == 'numpy'\n"
        "signs = np.array([[1, 1], [1, -1]], dtype=np.int8)\n"
        "print(kernels.group_means(signs, np.array([2.0, 4.0])).tolist())\n"
    )
    env = dict(os.environ, ARTCLUSTER_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "[3.0, -1.0]"
