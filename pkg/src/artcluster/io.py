"""Delimited-text ingestion, canonical export, and report rendering.

The dialect is deliberately rigid: comma-separated, UTF-8, header row
required, '.' decimal point, no locale inference.  Floats are written
with ``repr`` (shortest round-trip form), so export -> ingest reproduces
a dataset bit for bit.  Reports are JSON documents with sorted keys and
no timestamps, so identical runs produce identical bytes; infinite
endpoints are rendered as the literal tokens "-inf" / "+inf".
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np

from artcluster.blocks import blockify
from artcluster.errors import MissingColumn, ParseError
from artcluster.model import ClusteredDataset, ExtendedReal, canonicalize

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "RunConfig",
    "export_csv",
    "ingest",
    "render_report",
    "resolve_contrast",
]

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    """Resolved command configuration (everything a report must echo)."""

    input_path: str | None = None
    cluster_col: str | None = None
    outcome_col: str | None = None
    covariate_cols: tuple = ()
    intercept: bool = False
    contrast: tuple | None = None
    coefficient: str | None = None
    null_value: float = 0.0
    alpha: float = 0.05
    group_mode: str = "auto"
    draws: int = 1000
    seed: int = 0
    variant: str = "unstudentized"
    scaling: str = "root_nj"
    blocks_q: int | tuple | None = None  # tuple when sweeping block counts
    time_col: str | None = None

    def covariate_names(self) -> list[str]:
        names = list(self.covariate_cols)
        if self.intercept:
            names = ["intercept"] + names
        return names


def resolve_contrast(config: RunConfig, names: list[str]) -> np.ndarray:
    """Turn the configured contrast (vector or coefficient name) into c."""
    if config.contrast is not None and config.coefficient is not None:
        raise ValueError("give either a contrast vector or a coefficient name, not both")
    if config.contrast is not None:
        c = np.asarray(config.contrast, dtype=np.float64)
        if c.shape[0] != len(names):
            raise ValueError(
                f"contrast has {c.shape[0]} entries but the model has "
                f"{len(names)} covariates ({', '.join(names)})"
            )
        return c
    if config.coefficient is not None:
        if config.coefficient not in names:
            raise ValueError(
                f"coefficient {config.coefficient!r} is not among the model "
                f"covariates ({', '.join(names)})"
            )
        c = np.zeros(len(names), dtype=np.float64)
        c[names.index(config.coefficient)] = 1.0
        return c
    raise ValueError("a contrast vector or a coefficient name is required")


# ------------------------------------------------------------------ #
# CSV
# ------------------------------------------------------------------ #


def _read_table(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, "<header>", f"{path}: empty file, header required")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue  # tolerate a trailing blank line
            if len(row) != len(header):
                raise ParseError(
                    lineno,
                    "<row>",
                    f"line {lineno}: expected {len(header)} fields, found {len(row)}",
                )
            rows.append(row)
    return header, rows


def _column(header: list[str], name: str) -> int:
    try:
        return header.index(name)
    except ValueError:
        raise MissingColumn(
            f"column {name!r} not found in header ({', '.join(header)})"
        ) from None


def _parse_float(cell: str, lineno: int, column: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(
            lineno, column, f"line {lineno}, column {column!r}: not a number: {cell!r}"
        ) from None


def ingest(path: str, config: RunConfig) -> tuple[ClusteredDataset, list[str]]:
    """Read a delimited file into a canonical dataset.

    Regular mode groups rows by the cluster column; blocks mode
    (``config.blocks_q`` set) sorts rows by the time column and labels
    them by consecutive blocks instead.  Returns the dataset together
    with the covariate names (intercept included when configured).
    """
    header, rows = _read_table(path)
    if config.outcome_col is None:
        raise ValueError("an outcome column is required")
    if not config.covariate_cols:
        raise ValueError("at least one covariate column is required")
    y_idx = _column(header, config.outcome_col)
    z_idx = [_column(header, name) for name in config.covariate_cols]

    n = len(rows)
    y = np.empty(n, dtype=np.float64)
    Z = np.empty((n, len(z_idx)), dtype=np.float64)
    for i, row in enumerate(rows):
        lineno = i + 2
        y[i] = _parse_float(row[y_idx], lineno, config.outcome_col)
        for k, idx in enumerate(z_idx):
            Z[i, k] = _parse_float(row[idx], lineno, config.covariate_cols[k])
    if config.intercept:
        Z = np.column_stack([np.ones(n), Z])

    if config.blocks_q is not None:
        if config.time_col is None:
            raise ValueError("blocks mode requires a time column")
        t_idx = _column(header, config.time_col)
        keys = np.array(
            [_parse_float(row[t_idx], i + 2, config.time_col) for i, row in enumerate(rows)]
        )
        data = blockify(keys, y, Z, config.blocks_q)
    else:
        if config.cluster_col is None:
            raise ValueError("a cluster column is required (or use blocks mode)")
        c_idx = _column(header, config.cluster_col)
        labels = [row[c_idx] for row in rows]
        data = canonicalize(labels, y, Z)
    return data, config.covariate_names()


def export_csv(
    data: ClusteredDataset,
    names: list[str],
    path: str,
    *,
    cluster_name: str = "cluster",
    outcome_name: str = "outcome",
) -> None:
    """Write a dataset in canonical row order; floats round-trip exactly."""
    if len(names) != data.d_z:
        raise ValueError("need one name per covariate column")
    labels = data.row_labels()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([cluster_name, outcome_name, *names])
        for i in range(data.n):
            writer.writerow(
                [str(labels[i]), repr(float(data.outcomes[i]))]
                + [repr(float(v)) for v in data.covariates[i]]
            )


# ------------------------------------------------------------------ #
# Reports
# ------------------------------------------------------------------ #


def _jsonable(obj):
    """Convert numpy/domain values into plain JSON types.

    Infinities (tagged or IEEE) become the tokens "-inf" / "+inf".
    """
    if isinstance(obj, ExtendedReal):
        return _jsonable(obj.as_float())
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if x == float("inf"):
            return "+inf"
        if x == float("-inf"):
            return "-inf"
        return x
    return obj


def render_report(command: str, config: RunConfig | dict, result: dict) -> str:
    """Serialize one run as a stable JSON document (sorted keys, LF)."""
    cfg = asdict(config) if isinstance(config, RunConfig) else dict(config)
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": command,
        "config": _jsonable(cfg),
        "result": _jsonable(result),
    }
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
