"""Core domain types: clustered datasets, linear hypotheses, extended reals.

Everything here is immutable after construction (frozen dataclasses over
read-only arrays), so instances can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from artcluster.errors import (
    EmptyCluster,
    NonFiniteValue,
    TooFewClusters,
    WidthMismatch,
)

__all__ = [
    "ClusteredDataset",
    "ExtendedReal",
    "LinearHypothesis",
    "MultiHypothesis",
    "NEG_INF",
    "POS_INF",
    "canonicalize",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    """Return a C-contiguous copy with the writeable flag cleared."""
    out = np.array(a, copy=True, order="C")
    out.flags.writeable = False
    return out


# ------------------------------------------------------------------ #
# Clustered dataset
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class ClusteredDataset:
    """Outcomes, covariate rows and cluster sizes in canonical order.

    Rows belonging to the same cluster are contiguous; clusters are
    ordered by first appearance of their label in the source rows.
    Construct via :func:`canonicalize` rather than directly.

    Attributes
    ----------
    outcomes : (n,) float64
    covariates : (n, d_z) float64
    sizes : (q,) int64
        Observations per cluster, in canonical cluster order.
    labels : tuple
        Original cluster labels; position in the tuple is the canonical
        cluster index.
    """

    outcomes: np.ndarray
    covariates: np.ndarray
    sizes: np.ndarray
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "outcomes", _frozen(np.asarray(self.outcomes, dtype=np.float64)))
        object.__setattr__(self, "covariates", _frozen(np.asarray(self.covariates, dtype=np.float64)))
        object.__setattr__(self, "sizes", _frozen(np.asarray(self.sizes, dtype=np.int64)))
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.covariates.ndim != 2 or self.covariates.shape[1] < 1:
            raise WidthMismatch("covariates must be a 2-D array with at least one column")
        if self.outcomes.ndim != 1 or self.outcomes.shape[0] != self.covariates.shape[0]:
            raise WidthMismatch("outcomes and covariate rows must align")
        if len(self.labels) != self.sizes.shape[0]:
            raise ValueError("labels and sizes must have one entry per cluster")
        if len(self.labels) < 2:
            raise TooFewClusters("need at least 2 clusters")
        if np.any(self.sizes < 1):
            raise EmptyCluster("every cluster needs at least one observation")
        if int(self.sizes.sum()) != self.outcomes.shape[0]:
            raise ValueError("cluster sizes must sum to the number of rows")
        if not np.all(np.isfinite(self.outcomes)):
            raise NonFiniteValue("outcomes contain non-finite values")
        if not np.all(np.isfinite(self.covariates)):
            raise NonFiniteValue("covariates contain non-finite values")

    # -- shape helpers -------------------------------------------------

    @property
    def n(self) -> int:
        return self.outcomes.shape[0]

    @property
    def q(self) -> int:
        return len(self.labels)

    @property
    def d_z(self) -> int:
        return self.covariates.shape[1]

    @property
    def offsets(self) -> np.ndarray:
        """Row offset of each cluster's first observation, plus the end."""
        return np.concatenate([[0], np.cumsum(self.sizes)])

    def cluster_slice(self, j: int) -> slice:
        off = self.offsets
        return slice(int(off[j]), int(off[j + 1]))

    def cluster_rows(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (outcomes, covariates) for canonical cluster ``j``."""
        s = self.cluster_slice(j)
        return self.outcomes[s], self.covariates[s]

    def row_labels(self) -> np.ndarray:
        """Per-row original labels, in canonical row order."""
        return np.repeat(np.array(self.labels, dtype=object), self.sizes)


def canonicalize(
    labels: Sequence[Hashable],
    outcomes: Sequence[float],
    covariates,
) -> ClusteredDataset:
    """Build a :class:`ClusteredDataset` from labeled observation rows.

    Rows are stable-sorted so that all rows sharing a label become
    contiguous, with clusters ordered by first appearance of their label.
    Canonicalizing an already-canonical dataset is a no-op (idempotence).

    Raises
    ------
    WidthMismatch
        Ragged covariate rows, or misaligned lengths.
    TooFewClusters
        Fewer than two distinct labels.
    NonFiniteValue
        Any NaN/inf among outcomes or covariates.
    """
    y = np.asarray(outcomes, dtype=np.float64)
    try:
        Z = np.asarray(covariates, dtype=np.float64)
    except ValueError as exc:
        raise WidthMismatch("covariate rows have inconsistent widths") from exc
    if Z.ndim == 1:
        Z = Z.reshape(-1, 1)
    if Z.ndim != 2:
        raise WidthMismatch("covariates must be rows of equal width")
    labels = list(labels)
    if not (len(labels) == y.shape[0] == Z.shape[0]):
        raise WidthMismatch("labels, outcomes and covariates must have equal length")

    order: dict[Hashable, int] = {}
    for lab in labels:
        if lab not in order:
            order[lab] = len(order)
    if len(order) < 2:
        raise TooFewClusters(f"need at least 2 clusters, found {len(order)}")

    idx = np.array([order[lab] for lab in labels], dtype=np.int64)
    perm = np.argsort(idx, kind="stable")
    sizes = np.bincount(idx, minlength=len(order))
    return ClusteredDataset(
        outcomes=y[perm],
        covariates=Z[perm],
        sizes=sizes,
        labels=tuple(order.keys()),
    )


# ------------------------------------------------------------------ #
# Hypotheses
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class LinearHypothesis:
    """A scalar restriction: contrast'beta = value."""

    contrast: np.ndarray
    value: float

    def __post_init__(self):
        c = np.asarray(self.contrast, dtype=np.float64).reshape(-1)
        if c.size < 1 or not np.all(np.isfinite(c)):
            raise ValueError("contrast must be a finite vector")
        if not np.any(c != 0.0):
            raise ValueError("contrast must not be the zero vector")
        if not math.isfinite(self.value):
            raise ValueError("hypothesized value must be finite")
        object.__setattr__(self, "contrast", _frozen(c))
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class MultiHypothesis:
    """A multi-row restriction: restriction @ beta = values."""

    restriction: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.restriction, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if R.ndim != 2 or R.shape[0] != v.shape[0]:
            raise ValueError("restriction rows must match the number of values")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(v))):
            raise ValueError("restriction and values must be finite")
        p, d = R.shape
        if p > d or np.linalg.matrix_rank(R) < p:
            raise ValueError("restriction must have full row rank with p <= d_z")
        object.__setattr__(self, "restriction", _frozen(R))
        object.__setattr__(self, "values", _frozen(v))

    @property
    def p(self) -> int:
        return self.restriction.shape[0]


# ------------------------------------------------------------------ #
# Extended reals
# ------------------------------------------------------------------ #


@dataclass(frozen=True, order=False)
class ExtendedReal:
    """A real number extended with explicit -inf / +inf tags.

    Kept as a tagged value (not an IEEE infinity) so that the total
    order -inf < finite < +inf and the quantile conventions built on it
    are unambiguous.  ``kind`` is -1, 0 or +1; ``value`` is only
    meaningful when ``kind == 0``.
    """

    kind: int
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in (-1, 0, 1):
            raise ValueError("kind must be -1, 0 or +1")
        if self.kind == 0:
            if not math.isfinite(self.value):
                raise ValueError("finite ExtendedReal needs a finite value")
            object.__setattr__(self, "value", float(self.value))
        else:
            object.__setattr__(self, "value", 0.0)

    # -- constructors ---------------------------------------------------

    @classmethod
    def finite(cls, x: float) -> "ExtendedReal":
        return cls(0, float(x))

    @classmethod
    def from_float(cls, x: float) -> "ExtendedReal":
        """Map an IEEE float (possibly +-inf) onto the tagged form."""
        if math.isnan(x):
            raise ValueError("NaN has no extended-real counterpart")
        if x == math.inf:
            return POS_INF
        if x == -math.inf:
            return NEG_INF
        return cls(0, float(x))

    # -- queries ---------------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.kind == 0

    def as_float(self) -> float:
        if self.kind < 0:
            return -math.inf
        if self.kind > 0:
            return math.inf
        return self.value

    # -- total order -----------------------------------------------------

    def _key(self) -> tuple[int, float]:
        return (self.kind, self.value if self.kind == 0 else 0.0)

    def __lt__(self, other: "ExtendedReal") -> bool:
        return self._key() < other._key()

    def __le__(self, other: "ExtendedReal") -> bool:
        return self._key() <= other._key()

    def __gt__(self, other: "ExtendedReal") -> bool:
        return other < self

    def __ge__(self, other: "ExtendedReal") -> bool:
        return other <= self

    def __str__(self) -> str:
        if self.kind < 0:
            return "-inf"
        if self.kind > 0:
            return "+inf"
        return repr(self.value)


NEG_INF = ExtendedReal(-1)
POS_INF = ExtendedReal(1)
