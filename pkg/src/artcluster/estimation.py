"""The regression layer: per-cluster and restricted least squares.

Solvers go through numpy's orthogonal-decomposition routines (``lstsq``,
``solve``); explicit matrix inversion appears only in test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from artcluster.errors import IdentificationFailure, SingularFullGram
from artcluster.model import ClusteredDataset, LinearHypothesis, _frozen

__all__ = [
    "RCOND_THRESHOLD",
    "ClusterEstimates",
    "RestrictedFit",
    "cluster_scores",
    "fit_per_cluster",
    "fit_restricted",
    "reciprocal_condition",
]

# Below this reciprocal condition number a second-moment matrix is
# treated as singular (the full-rank requirement needs a numeric proxy).
RCOND_THRESHOLD = 1e-10


def reciprocal_condition(matrix: np.ndarray) -> float:
    """sigma_min / sigma_max of ``matrix`` (0.0 for the zero matrix)."""
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv[0] == 0.0:
        return 0.0
    return float(sv[-1] / sv[0])


@dataclass(frozen=True)
class ClusterEstimates:
    """Per-cluster coefficient vectors, sizes and second-moment matrices.

    ``grams[j]`` holds (1/n_j) * Z_j' Z_j, guaranteed symmetric positive
    definite by the conditioning check in :func:`fit_per_cluster`.
    """

    betas: np.ndarray  # (q, d_z)
    sizes: np.ndarray  # (q,)
    grams: np.ndarray  # (q, d_z, d_z)
    labels: tuple

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        sizes = np.asarray(self.sizes, dtype=np.int64)
        grams = np.asarray(self.grams, dtype=np.float64)
        if betas.ndim != 2 or grams.ndim != 3:
            raise ValueError("betas must be (q, d_z) and grams (q, d_z, d_z)")
        if not (betas.shape[0] == sizes.shape[0] == grams.shape[0] == len(self.labels)):
            raise ValueError("per-cluster arrays must align")
        if not np.all(np.isfinite(betas)):
            raise ValueError("cluster coefficient estimates must be finite")
        object.__setattr__(self, "betas", _frozen(betas))
        object.__setattr__(self, "sizes", _frozen(sizes))
        object.__setattr__(self, "grams", _frozen(grams))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def q(self) -> int:
        return self.betas.shape[0]

    @property
    def d_z(self) -> int:
        return self.betas.shape[1]

    @property
    def n(self) -> int:
        return int(self.sizes.sum())


@dataclass(frozen=True)
class RestrictedFit:
    """Full-sample least squares under the null restriction."""

    beta_r: np.ndarray  # (d_z,)
    residuals: np.ndarray  # (n,)

    def __post_init__(self):
        beta = np.asarray(self.beta_r, dtype=np.float64).reshape(-1)
        resid = np.asarray(self.residuals, dtype=np.float64).reshape(-1)
        if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(resid))):
            raise ValueError("restricted fit must be finite")
        object.__setattr__(self, "beta_r", _frozen(beta))
        object.__setattr__(self, "residuals", _frozen(resid))


def fit_per_cluster(
    data: ClusteredDataset, *, rcond_threshold: float = RCOND_THRESHOLD
) -> ClusterEstimates:
    """Run one least squares regression inside every cluster.

    Returns the stacked coefficient vectors together with each cluster's
    second-moment matrix (1/n_j) * Z_j' Z_j.

    Raises
    ------
    IdentificationFailure
        When a cluster's second-moment matrix is singular below
        ``rcond_threshold`` -- e.g. a covariate constant within the
        cluster, or n_j < d_z.  The exception names the cluster and its
        reciprocal condition number.
    """
    q, d = data.q, data.d_z
    betas = np.empty((q, d), dtype=np.float64)
    grams = np.empty((q, d, d), dtype=np.float64)
    for j in range(q):
        y_j, Z_j = data.cluster_rows(j)
        gram = Z_j.T @ Z_j / Z_j.shape[0]
        rc = reciprocal_condition(gram)
        if not np.isfinite(rc) or rc < rcond_threshold:
            raise IdentificationFailure(data.labels[j], rc)
        betas[j], _, _, _ = np.linalg.lstsq(Z_j, y_j, rcond=None)
        grams[j] = gram
    return ClusterEstimates(betas=betas, sizes=data.sizes, grams=grams, labels=data.labels)


def fit_restricted(
    data: ClusteredDataset,
    hypothesis: LinearHypothesis,
    *,
    rcond_threshold: float = RCOND_THRESHOLD,
) -> RestrictedFit:
    """Full-sample least squares subject to contrast'beta = value.

    Computed in closed form by projecting the unrestricted solution:
    beta_r = beta - A^{-1} c (c'beta - value) / (c' A^{-1} c) with A the
    full-sample Gram matrix.

    Raises
    ------
    SingularFullGram
        When the full-sample Gram matrix is numerically singular.
    """
    Z, y = data.covariates, data.outcomes
    c = hypothesis.contrast
    if c.shape[0] != data.d_z:
        raise ValueError("contrast length must equal the covariate count")
    A = Z.T @ Z
    rc = reciprocal_condition(A)
    if not np.isfinite(rc) or rc < rcond_threshold:
        raise SingularFullGram(
            f"full-sample Gram matrix is numerically singular (rcond {rc:.3e})"
        )
    beta, _, _, _ = np.linalg.lstsq(Z, y, rcond=None)
    u = np.linalg.solve(A, c)
    gap = float(c @ beta) - hypothesis.value
    beta_r = beta - u * (gap / float(c @ u))

    achieved = float(c @ beta_r)
    scale = max(1.0, abs(hypothesis.value))
    if abs(achieved - hypothesis.value) > 1e-10 * scale:
        raise SingularFullGram(
            "restricted solution failed to satisfy the constraint "
            f"(reached {achieved!r}, wanted {hypothesis.value!r})"
        )
    return RestrictedFit(beta_r=beta_r, residuals=y - Z @ beta_r)


def cluster_scores(
    data: ClusteredDataset,
    fit: RestrictedFit,
    estimates: ClusterEstimates,
    hypothesis: LinearHypothesis,
) -> np.ndarray:
    """Within-cluster weighted scores of the restricted residuals.

    For each cluster j returns
        c' Gram_j^{-1} (1/sqrt(n_j)) * sum_i Z_ij * resid_ij,
    which equals sqrt(n_j) * (c'beta_j - value) computed from the
    per-cluster estimates (the two routes agree numerically).
    """
    c = hypothesis.contrast
    out = np.empty(data.q, dtype=np.float64)
    for j in range(data.q):
        s = data.cluster_slice(j)
        Z_j = data.covariates[s]
        v = Z_j.T @ fit.residuals[s] / np.sqrt(Z_j.shape[0])
        out[j] = float(c @ np.linalg.solve(estimates.grams[j], v))
    return out
