"""Monte Carlo harness: size and power of the randomization test.

Data are drawn from a clustered linear model with heterogeneous noise
scales and tunable within-cluster correlation.  Replication r of a study
uses the Philox stream ``Philox(key=seed).jumped(r + 1)``, so every
replication is reproducible in isolation, results do not depend on
execution order, and no replication shares the base stream that
sign-group sampling draws from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from artcluster.groups import SignGroup, enumerate_group
from artcluster.model import ClusteredDataset, LinearHypothesis, _frozen, canonicalize
from artcluster.randtest import run_test

__all__ = ["DgpSpec", "MonteCarloReport", "generate", "power_study", "size_study"]

COVARIATE_LAWS = ("normal", "lognormal")


@dataclass(frozen=True)
class DgpSpec:
    """A clustered linear data-generating process.

    Covariates are an intercept column followed by ``d_z - 1`` columns of
    i.i.d. draws from ``covariate_law`` ("normal" or "lognormal", the
    latter to stress conditioning).  Noise for observation i in cluster j
    is ``sigma[j] * (sqrt(rho) * f_j + sqrt(1 - rho) * e_ij)`` with
    standard normal cluster factor f_j and idiosyncratic e_ij, giving
    within-cluster correlation ``rho`` and cluster scale ``sigma[j]``.
    """

    sizes: tuple
    beta: tuple
    sigma: tuple
    rho: float = 0.0
    covariate_law: str = "normal"
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        beta = tuple(float(x) for x in self.beta)
        sigma = tuple(float(x) for x in self.sigma)
        if len(sizes) < 2:
            raise ValueError("need at least 2 clusters")
        if len(sigma) != len(sizes):
            raise ValueError("need one noise scale per cluster")
        if min(sizes) < len(beta) + 1:
            raise ValueError("every cluster needs at least d_z + 1 observations")
        if any(s <= 0.0 or not math.isfinite(s) for s in sigma):
            raise ValueError("noise scales must be positive and finite")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("within-cluster correlation must lie in [0, 1)")
        if self.covariate_law not in COVARIATE_LAWS:
            raise ValueError(f"covariate_law must be one of {COVARIATE_LAWS}")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def q(self) -> int:
        return len(self.sizes)

    @property
    def d_z(self) -> int:
        return len(self.beta)

    @property
    def n(self) -> int:
        return sum(self.sizes)


def generate(spec: DgpSpec, replication: int) -> ClusteredDataset:
    """Draw one dataset; fully determined by (spec.seed, replication)."""
    if replication < 0:
        raise ValueError("replication index must be >= 0")
    rng = np.random.Generator(np.random.Philox(key=spec.seed).jumped(replication + 1))
    n, d = spec.n, spec.d_z
    Z = np.ones((n, d), dtype=np.float64)
    if d > 1:
        if spec.covariate_law == "normal":
            Z[:, 1:] = rng.standard_normal((n, d - 1))
        else:
            Z[:, 1:] = np.exp(rng.standard_normal((n, d - 1)))
    factors = rng.standard_normal(spec.q)
    noise = rng.standard_normal(n)
    sigma_rows = np.repeat(np.asarray(spec.sigma), spec.sizes)
    factor_rows = np.repeat(factors, spec.sizes)
    eps = sigma_rows * (
        math.sqrt(spec.rho) * factor_rows + math.sqrt(1.0 - spec.rho) * noise
    )
    y = Z @ np.asarray(spec.beta) + eps
    labels = np.repeat(np.arange(1, spec.q + 1), spec.sizes)
    return canonicalize(labels, y, Z)


@dataclass(frozen=True)
class MonteCarloReport:
    """Rejection rate of a study, with its Monte Carlo standard error."""

    replications: int
    rejections: int
    rate: float
    mc_stderr: float
    p_values: np.ndarray
    alpha: float
    null_value: float
    seed: int

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("rejection rate must lie in [0, 1]")
        object.__setattr__(
            self, "p_values", _frozen(np.asarray(self.p_values, dtype=np.float64))
        )


def _study(
    spec: DgpSpec,
    contrast,
    null_value: float,
    alpha: float,
    replications: int,
    group: SignGroup | None,
    variant: str,
) -> MonteCarloReport:
    if group is None:
        group = enumerate_group(spec.q, mode="auto", seed=spec.seed)
    hypothesis = LinearHypothesis(contrast=contrast, value=null_value)
    p_values = np.empty(replications, dtype=np.float64)
    rejections = 0
    for r in range(replications):
        result = run_test(generate(spec, r), hypothesis, alpha, group, variant)
        p_values[r] = result.p_value
        rejections += result.reject
    rate = rejections / replications
    return MonteCarloReport(
        replications=replications,
        rejections=rejections,
        rate=rate,
        mc_stderr=math.sqrt(rate * (1.0 - rate) / replications),
        p_values=p_values,
        alpha=float(alpha),
        null_value=float(null_value),
        seed=spec.seed,
    )


def size_study(
    spec: DgpSpec,
    contrast,
    alpha: float,
    replications: int,
    *,
    group: SignGroup | None = None,
    variant: str = "unstudentized",
) -> MonteCarloReport:
    """Rejection rate when the tested value is the truth (null imposed)."""
    c = np.asarray(contrast, dtype=np.float64).reshape(-1)
    true_value = float(c @ np.asarray(spec.beta))
    return _study(spec, c, true_value, alpha, replications, group, variant)


def power_study(
    spec: DgpSpec,
    contrast,
    null_value: float,
    alpha: float,
    replications: int,
    *,
    group: SignGroup | None = None,
    variant: str = "unstudentized",
) -> MonteCarloReport:
    """Rejection rate when testing ``null_value`` against the spec's truth.

    With ``null_value`` equal to the true contrast this reduces to
    :func:`size_study`.
    """
    return _study(spec, contrast, float(null_value), alpha, replications, group, variant)
