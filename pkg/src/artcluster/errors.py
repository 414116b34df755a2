"""Exception hierarchy shared across the package.

Every error raised on a documented failure path derives from
:class:`ArtClusterError` so callers can catch package failures with a
single ``except`` clause while still distinguishing the specific cause.
"""

from __future__ import annotations


class ArtClusterError(Exception):
    """Base class for all artcluster errors."""


# ------------------------------------------------------------------ #
# Data construction / validation
# ------------------------------------------------------------------ #


class WidthMismatch(ArtClusterError):
    """Observation rows do not share a common covariate width."""


class NonFiniteValue(ArtClusterError):
    """An outcome or covariate entry is NaN or infinite."""


class EmptyCluster(ArtClusterError):
    """A cluster ended up with zero observations.

    Unreachable through :func:`artcluster.model.canonicalize` (labels are
    taken from the rows themselves); kept for defensive validation of
    hand-built datasets.
    """


class TooFewClusters(ArtClusterError):
    """Fewer than two distinct cluster labels were supplied."""


# ------------------------------------------------------------------ #
# Estimation
# ------------------------------------------------------------------ #


class IdentificationFailure(ArtClusterError):
    """A within-cluster second-moment matrix is (numerically) singular.

    Carries the offending cluster label and the reciprocal condition
    number that triggered the failure.  Typical causes: a covariate that
    is constant inside the cluster (e.g. collinear with the intercept),
    or fewer observations than covariates.  Remedies: merge clusters so
    the covariate varies within the merged groups, or drop/respecify the
    offending column.
    """

    def __init__(self, label, rcond: float, message: str | None = None):
        self.label = label
        self.rcond = float(rcond)
        if message is None:
            message = (
                f"cluster {label!r}: within-cluster covariate matrix is "
                f"numerically singular (reciprocal condition number "
                f"{self.rcond:.3e}); combine clusters or respecify the model"
            )
        super().__init__(message)


class SingularFullGram(ArtClusterError):
    """The full-sample covariate second-moment matrix is singular."""


class DegenerateVariance(ArtClusterError):
    """The randomized standard deviation of the signed scores is zero."""


class SingularSigma(ArtClusterError):
    """The score outer-product matrix of the multi-row statistic is singular."""


# ------------------------------------------------------------------ #
# Sign groups / intervals / blocks
# ------------------------------------------------------------------ #


class GroupTooLarge(ArtClusterError):
    """Exhaustive enumeration was requested beyond the supported size."""


class GridTooCoarse(ArtClusterError):
    """No grid point survived test inversion; refine or widen the grid."""


class TooFewObservations(ArtClusterError):
    """Not enough observations to form the requested number of blocks."""


class DegenerateGrouping(ArtClusterError):
    """A cluster merge would leave fewer than two clusters."""


# ------------------------------------------------------------------ #
# I/O
# ------------------------------------------------------------------ #


class MissingColumn(ArtClusterError):
    """A configured column name is absent from the input header."""


class ParseError(ArtClusterError):
    """A cell could not be parsed; carries 1-based line and column name."""

    def __init__(self, line: int, column: str, message: str | None = None):
        self.line = int(line)
        self.column = column
        if message is None:
            message = f"line {line}, column {column!r}: cannot parse value"
        super().__init__(message)


class DuplicateTimeKeyWarning(UserWarning):
    """Duplicate time keys found; stable sort order resolves them."""
