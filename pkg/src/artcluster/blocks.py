"""Pseudo-clusters for time series, and cluster merging.

Temporally dependent data has no natural clusters; under weak
dependence, consecutive blocks of observations can stand in for them.
The first q-1 blocks have floor(n/q) observations and the final block
absorbs the remainder.  ``merge_clusters`` is the coarsening remedy for
within-cluster identification failures.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from artcluster.errors import (
    DegenerateGrouping,
    DuplicateTimeKeyWarning,
    TooFewObservations,
)
from artcluster.model import ClusteredDataset, canonicalize

__all__ = ["BlockPlan", "blockify", "merge_clusters", "plan_blocks"]


@dataclass(frozen=True)
class BlockPlan:
    """How n consecutive observations split into q blocks."""

    q: int
    base_size: int
    last_size: int
    boundaries: tuple  # q (start, stop) half-open row ranges

    def __post_init__(self):
        sizes = [stop - start for start, stop in self.boundaries]
        if len(sizes) != self.q:
            raise ValueError("need one boundary pair per block")
        if sizes[:-1] != [self.base_size] * (self.q - 1) or sizes[-1] != self.last_size:
            raise ValueError("boundaries disagree with the stated block sizes")
        if self.last_size < self.base_size:
            raise ValueError("the final block must absorb the remainder")

    @property
    def n(self) -> int:
        return self.boundaries[-1][1]

    def labels(self) -> np.ndarray:
        """Block index (1..q) for each of the n rows."""
        out = np.empty(self.n, dtype=np.int64)
        for j, (start, stop) in enumerate(self.boundaries):
            out[start:stop] = j + 1
        return out


def plan_blocks(n: int, q: int) -> BlockPlan:
    """Split n observations into q consecutive blocks.

    Blocks 1..q-1 have floor(n/q) observations; the last block holds the
    remaining n - floor(n/q)*(q-1).
    """
    if q < 2:
        raise ValueError("need q >= 2")
    if n < q:
        raise TooFewObservations(f"cannot form {q} blocks from {n} observations")
    base = n // q
    last = n - base * (q - 1)
    starts = [j * base for j in range(q)]
    stops = starts[1:] + [n]
    return BlockPlan(
        q=q,
        base_size=base,
        last_size=last,
        boundaries=tuple(zip(starts, stops)),
    )


def blockify(time_keys, outcomes, covariates, q: int) -> ClusteredDataset:
    """Sort rows by time key and label them by consecutive blocks.

    The sort is stable, so duplicate time keys keep their input order (a
    :class:`DuplicateTimeKeyWarning` is emitted).
    """
    keys = np.asarray(time_keys)
    if keys.ndim != 1:
        raise ValueError("time keys must be 1-D")
    plan = plan_blocks(keys.shape[0], q)
    if np.unique(keys).shape[0] != keys.shape[0]:
        warnings.warn(
            "duplicate time keys; stable input order breaks the ties",
            DuplicateTimeKeyWarning,
            stacklevel=2,
        )
    order = np.argsort(keys, kind="stable")
    y = np.asarray(outcomes, dtype=np.float64)[order]
    Z = np.asarray(covariates, dtype=np.float64)[order]
    return canonicalize(plan.labels(), y, Z)


def merge_clusters(data: ClusteredDataset, grouping: dict) -> ClusteredDataset:
    """Relabel clusters according to ``grouping`` (old label -> new label).

    Row content and within-group row order are untouched; only labels
    change, and sizes of merged clusters add up.  The grouping must
    cover every existing label and leave at least two clusters.
    """
    missing = [lab for lab in data.labels if lab not in grouping]
    if missing:
        raise KeyError(f"grouping must cover every cluster label; missing {missing!r}")
    if len(set(grouping[lab] for lab in data.labels)) < 2:
        raise DegenerateGrouping("merging must leave at least 2 clusters")
    old_rows = data.row_labels()
    new_rows = [grouping[lab] for lab in old_rows]
    return canonicalize(new_rows, data.outcomes, data.covariates)
