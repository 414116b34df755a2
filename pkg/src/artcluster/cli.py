"""Command-line interface.

Subcommands: ``test`` (randomization test of a scalar restriction),
``ci`` (closed-form confidence interval), ``simulate`` (Monte Carlo
size/power study from a JSON spec), ``blocks`` (pseudo-cluster block
plans), ``export`` (canonical CSV).  Each run emits one JSON document on
stdout (or ``--output``); identical configurations produce identical
bytes.

Exit codes: 0 success, 1 usage error, 2 identification or estimation
failure, 3 I/O failure.  ``ARTCLUSTER_SEED`` supplies the default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from artcluster.blocks import plan_blocks
from artcluster.errors import (
    ArtClusterError,
    DegenerateGrouping,
    DegenerateVariance,
    EmptyCluster,
    GroupTooLarge,
    IdentificationFailure,
    MissingColumn,
    NonFiniteValue,
    ParseError,
    SingularFullGram,
    SingularSigma,
    TooFewClusters,
    TooFewObservations,
    WidthMismatch,
)
from artcluster.estimation import fit_per_cluster
from artcluster.groups import enumerate_group
from artcluster.intervals import interval, interval_inputs
from artcluster.io import (
    RunConfig,
    export_csv,
    ingest,
    render_report,
    resolve_contrast,
)
from artcluster.model import LinearHypothesis
from artcluster.randtest import run_test_from_scores, scores_from_estimates
from artcluster.simulation import DgpSpec, power_study, size_study

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ESTIMATION = 2
EXIT_IO = 3

_IO_ERRORS = (
    OSError,
    json.JSONDecodeError,
    MissingColumn,
    ParseError,
    NonFiniteValue,
    WidthMismatch,
    TooFewClusters,
    EmptyCluster,
)
_ESTIMATION_ERRORS = (SingularFullGram, DegenerateVariance, SingularSigma)
_USAGE_ERRORS = (
    ValueError,
    KeyError,
    GroupTooLarge,
    TooFewObservations,
    DegenerateGrouping,
)


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with code 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get("ARTCLUSTER_SEED", "").strip()
    if not raw:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"ARTCLUSTER_SEED must be an integer, got {raw!r}") from None


def _floats(text: str) -> tuple:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ValueError(f"expected a comma-separated list of numbers, got {text!r}")


def _ints(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ValueError(f"expected a comma-separated list of integers, got {text!r}")


def _names(text: str) -> tuple:
    names = tuple(part.strip() for part in text.split(",") if part.strip())
    if not names:
        raise ValueError(f"expected a comma-separated list of names, got {text!r}")
    return names


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _scaling(flag: str) -> str:
    return {"root-nj": "root_nj", "root-n": "root_n"}[flag]


# ------------------------------------------------------------------ #
# Parser construction
# ------------------------------------------------------------------ #


def _add_data_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="CSV file with a header row")
    parser.add_argument("--cluster", help="cluster label column")
    parser.add_argument("--outcome", required=True, help="outcome column")
    parser.add_argument(
        "--covariates", required=True, help="comma-separated covariate columns"
    )
    parser.add_argument(
        "--intercept",
        action="store_true",
        help="prepend a column of ones named 'intercept'",
    )
    parser.add_argument(
        "--blocks",
        metavar="Q[,Q...]",
        help="time-series mode: form Q pseudo-clusters of consecutive rows; "
        "a comma-separated list runs the analysis once per Q",
    )
    parser.add_argument("--time", help="sortable time column (blocks mode)")


def _add_group_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--group-mode",
        choices=["auto", "exhaustive", "sampled"],
        default="auto",
        help="sign-group construction (auto: exhaustive for q <= 14)",
    )
    parser.add_argument("--draws", type=int, default=1000, help="sampled-mode size B")
    parser.add_argument(
        "--seed", type=int, default=None, help="sampling seed (default: ARTCLUSTER_SEED or 0)"
    )
    parser.add_argument(
        "--allow-large-group",
        action="store_true",
        help="permit exhaustive enumeration beyond q = 20",
    )


def _add_contrast_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--contrast", help="comma-separated contrast vector c")
    parser.add_argument("--coef", help="covariate name (unit-vector contrast)")


def build_parser() -> _Parser:
    parser = _Parser(prog="artcluster", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_test = sub.add_parser("test", help="randomization test of contrast'beta = null")
    _add_data_options(p_test)
    _add_contrast_options(p_test)
    p_test.add_argument("--null", type=float, default=0.0, help="hypothesized value")
    p_test.add_argument("--alpha", type=float, default=0.05)
    _add_group_options(p_test)
    p_test.add_argument(
        "--variant", choices=["unstudentized", "studentized"], default="unstudentized"
    )
    p_test.add_argument(
        "--scaling",
        choices=["root-nj", "root-n"],
        default="root-nj",
        help="per-cluster score scale factor",
    )
    p_test.add_argument(
        "--table", action="store_true", help="aligned text summary instead of JSON"
    )
    p_test.add_argument("--output", help="write the report here instead of stdout")
    p_test.set_defaults(handler=cmd_test)

    p_ci = sub.add_parser("ci", help="confidence interval for contrast'beta")
    _add_data_options(p_ci)
    _add_contrast_options(p_ci)
    p_ci.add_argument("--alpha", type=float, default=0.05)
    _add_group_options(p_ci)
    p_ci.add_argument(
        "--table", action="store_true", help="aligned text summary instead of JSON"
    )
    p_ci.add_argument("--output", help="write the report here instead of stdout")
    p_ci.set_defaults(handler=cmd_ci)

    p_sim = sub.add_parser("simulate", help="Monte Carlo size/power study")
    p_sim.add_argument("--spec", required=True, help="JSON study specification")
    p_sim.add_argument("--output", help="write the report here instead of stdout")
    p_sim.set_defaults(handler=cmd_simulate)

    p_blocks = sub.add_parser("blocks", help="pseudo-cluster block plans")
    p_blocks.add_argument("--n", type=int, required=True, help="observation count")
    p_blocks.add_argument("--q", required=True, help="comma-separated block counts")
    p_blocks.add_argument(
        "--table", action="store_true", help="aligned text table instead of JSON"
    )
    p_blocks.add_argument("--output", help="write the report here instead of stdout")
    p_blocks.set_defaults(handler=cmd_blocks)

    p_export = sub.add_parser("export", help="write the canonicalized dataset")
    _add_data_options(p_export)
    p_export.add_argument("--output", required=True, help="destination CSV")
    p_export.set_defaults(handler=cmd_export)

    return parser


# ------------------------------------------------------------------ #
# Commands
# ------------------------------------------------------------------ #


def _blocks_list(args) -> tuple:
    """Block counts to sweep; (None,) when not in blocks mode."""
    if args.blocks is None:
        return (None,)
    return _ints(args.blocks)


def _config_from_args(args, **overrides) -> RunConfig:
    seed = args.seed if getattr(args, "seed", None) is not None else _default_seed()
    blocks = _blocks_list(args)
    fields = dict(
        input_path=args.input,
        cluster_col=args.cluster,
        outcome_col=args.outcome,
        covariate_cols=_names(args.covariates),
        intercept=args.intercept,
        contrast=_floats(args.contrast) if getattr(args, "contrast", None) else None,
        coefficient=getattr(args, "coef", None),
        alpha=getattr(args, "alpha", 0.05),
        group_mode=getattr(args, "group_mode", "auto"),
        draws=getattr(args, "draws", 1000),
        seed=seed,
        blocks_q=blocks[0] if len(blocks) == 1 else blocks,
        time_col=args.time,
    )
    fields.update(overrides)
    return RunConfig(**fields)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError("--alpha must lie strictly between 0 and 1")


def _run_single_test(config: RunConfig, allow_large: bool) -> dict:
    data, names = ingest(config.input_path, config)
    contrast = resolve_contrast(config, names)
    group = enumerate_group(
        data.q, config.group_mode, config.draws, config.seed, allow_large=allow_large
    )
    estimates = fit_per_cluster(data)
    hypothesis = LinearHypothesis(contrast=contrast, value=config.null_value)
    scores = scores_from_estimates(estimates, hypothesis, config.scaling)
    result = run_test_from_scores(
        scores, config.alpha, group, config.variant, config.scaling
    )

    notes = []
    if group.mode == "exhaustive" and 2.0 / group.size > config.alpha:
        notes.append(
            f"trivial power: the smallest attainable p-value 2/{group.size} "
            f"exceeds alpha={config.alpha}; the test can never reject"
        )
    return {
        "statistic": result.statistic,
        "critical_value": result.critical_value,
        "p_value": result.p_value,
        "reject": result.reject,
        "alpha": result.alpha,
        "variant": result.variant,
        "scaling": result.scaling,
        "group": {
            "mode": group.mode,
            "size": group.size,
            "draws": group.draws,
            "seed": group.seed,
        },
        "per_cluster": [
            {
                "label": str(estimates.labels[j]),
                "size": int(estimates.sizes[j]),
                "beta": estimates.betas[j],
                "score": float(scores.values[j]),
            }
            for j in range(estimates.q)
        ],
        "covariates": names,
        "warnings": notes,
    }


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _test_table(result: dict) -> str:
    runs = result.get("by_blocks") or [result]
    lines = [f"{'blocks':>8} {'statistic':>12} {'crit':>12} {'p-value':>10} {'reject':>7}"]
    for run in runs:
        lines.append(
            f"{_fmt(run.get('blocks', '-')):>8} {_fmt(run['statistic']):>12} "
            f"{_fmt(run['critical_value']):>12} {_fmt(run['p_value']):>10} "
            f"{_fmt(run['reject']):>7}"
        )
    return "\n".join(lines) + "\n"


def _ci_table(result: dict) -> str:
    runs = result.get("by_blocks") or [result]
    lines = [f"{'blocks':>8} {'center':>12} {'lower':>12} {'upper':>12}"]
    for run in runs:
        lo, hi = run["lower"], run["upper"]
        lines.append(
            f"{_fmt(run.get('blocks', '-')):>8} {_fmt(run['lambda0']):>12} "
            f"{_fmt(lo.as_float() if hasattr(lo, 'as_float') else lo):>12} "
            f"{_fmt(hi.as_float() if hasattr(hi, 'as_float') else hi):>12}"
        )
    return "\n".join(lines) + "\n"


def cmd_test(args) -> int:
    _check_alpha(args.alpha)
    config = _config_from_args(
        args,
        null_value=args.null,
        variant=args.variant,
        scaling=_scaling(args.scaling),
    )
    blocks = _blocks_list(args)
    if len(blocks) == 1:
        result = _run_single_test(config, args.allow_large_group)
    else:
        result = {
            "by_blocks": [
                {"blocks": q, **_run_single_test(replace(config, blocks_q=q), args.allow_large_group)}
                for q in blocks
            ]
        }
    text = _test_table(result) if args.table else render_report("test", config, result)
    _emit(text, args.output)
    return EXIT_OK


def _run_single_ci(config: RunConfig, allow_large: bool) -> dict:
    data, names = ingest(config.input_path, config)
    contrast = resolve_contrast(config, names)
    group = enumerate_group(
        data.q, config.group_mode, config.draws, config.seed, allow_large=allow_large
    )
    estimates = fit_per_cluster(data)
    inputs = interval_inputs(estimates, contrast, group)
    ci = interval(inputs, config.alpha)

    notes = []
    if not ci.is_bounded:
        notes.append(
            "unbounded interval: alpha is at or below the smallest attainable "
            f"p-value 2/{group.size}, so infinite endpoints are forced"
        )
    return {
        "lambda0": ci.lambda0,
        "lower": ci.lower,
        "upper": ci.upper,
        "alpha": ci.alpha,
        "bounded": ci.is_bounded,
        "group": {
            "mode": group.mode,
            "size": group.size,
            "draws": group.draws,
            "seed": group.seed,
        },
        "covariates": names,
        "warnings": notes,
    }


def cmd_ci(args) -> int:
    _check_alpha(args.alpha)
    config = _config_from_args(args)
    blocks = _blocks_list(args)
    if len(blocks) == 1:
        result = _run_single_ci(config, args.allow_large_group)
    else:
        result = {
            "by_blocks": [
                {"blocks": q, **_run_single_ci(replace(config, blocks_q=q), args.allow_large_group)}
                for q in blocks
            ]
        }
    text = _ci_table(result) if args.table else render_report("ci", config, result)
    _emit(text, args.output)
    return EXIT_OK


def _require(spec: dict, key: str):
    if key not in spec:
        raise ValueError(f"simulation spec is missing the {key!r} field")
    return spec[key]


def cmd_simulate(args) -> int:
    with open(args.spec, "r", encoding="utf-8") as fh:
        spec_doc = json.load(fh)

    dgp_doc = dict(_require(spec_doc, "dgp"))
    dgp = DgpSpec(
        sizes=tuple(_require(dgp_doc, "sizes")),
        beta=tuple(_require(dgp_doc, "beta")),
        sigma=tuple(_require(dgp_doc, "sigma")),
        rho=float(dgp_doc.get("rho", 0.0)),
        covariate_law=dgp_doc.get("covariate_law", "normal"),
        seed=int(dgp_doc.get("seed", _default_seed())),
    )
    study = _require(spec_doc, "study")
    contrast = np.asarray(_require(spec_doc, "contrast"), dtype=np.float64)
    alpha = float(_require(spec_doc, "alpha"))
    _check_alpha(alpha)
    replications = int(_require(spec_doc, "replications"))
    variant = spec_doc.get("variant", "unstudentized")

    group = None
    group_doc = spec_doc.get("group")
    if group_doc is not None:
        group = enumerate_group(
            dgp.q,
            group_doc.get("mode", "auto"),
            int(group_doc.get("draws", 1000)),
            int(group_doc.get("seed", dgp.seed)),
        )

    if study == "size":
        report = size_study(dgp, contrast, alpha, replications, group=group, variant=variant)
    elif study == "power":
        null_value = float(_require(spec_doc, "null_value"))
        report = power_study(
            dgp, contrast, null_value, alpha, replications, group=group, variant=variant
        )
    else:
        raise ValueError(f"study must be 'size' or 'power', got {study!r}")

    resolved = {
        "spec_path": args.spec,
        "study": study,
        "alpha": alpha,
        "replications": replications,
        "contrast": contrast,
        "null_value": report.null_value,
        "variant": variant,
        "dgp": {
            "sizes": dgp.sizes,
            "beta": dgp.beta,
            "sigma": dgp.sigma,
            "rho": dgp.rho,
            "covariate_law": dgp.covariate_law,
            "seed": dgp.seed,
        },
        "group": None
        if group is None
        else {
            "mode": group.mode,
            "size": group.size,
            "draws": group.draws,
            "seed": group.seed,
        },
    }
    payload = {
        "rate": report.rate,
        "mc_stderr": report.mc_stderr,
        "replications": report.replications,
        "rejections": report.rejections,
        "p_values": report.p_values,
    }
    _emit(render_report("simulate", resolved, payload), args.output)
    return EXIT_OK


def cmd_blocks(args) -> int:
    plans = [plan_blocks(args.n, q) for q in _ints(args.q)]
    if args.table:
        lines = [f"{'q':>6} {'base':>8} {'last':>8}"]
        for plan in plans:
            lines.append(f"{plan.q:>6} {plan.base_size:>8} {plan.last_size:>8}")
        _emit("\n".join(lines) + "\n", args.output)
        return EXIT_OK
    payload = {
        "n": args.n,
        "plans": [
            {
                "q": plan.q,
                "base_size": plan.base_size,
                "last_size": plan.last_size,
                "boundaries": [list(pair) for pair in plan.boundaries],
            }
            for plan in plans
        ],
    }
    _emit(render_report("blocks", {"n": args.n, "q": list(_ints(args.q))}, payload), args.output)
    return EXIT_OK


def cmd_export(args) -> int:
    if len(_blocks_list(args)) != 1:
        raise ValueError("export accepts a single --blocks value")
    config = _config_from_args(args)
    data, names = ingest(config.input_path, config)
    export_csv(
        data,
        names,
        args.output,
        cluster_name=config.cluster_col or "cluster",
        outcome_name=config.outcome_col,
    )
    payload = {
        "rows": data.n,
        "clusters": data.q,
        "covariates": names,
        "output": args.output,
    }
    _emit(render_report("export", config, payload), None)
    return EXIT_OK


# ------------------------------------------------------------------ #
# Entry point
# ------------------------------------------------------------------ #


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.handler(args)
    except IdentificationFailure as exc:
        print(f"artcluster: error: {exc}", file=sys.stderr)
        print(
            "artcluster: remedies: merge clusters so the covariate varies within "
            "the combined groups (clustering more coarsely), or respecify the model",
            file=sys.stderr,
        )
        return EXIT_ESTIMATION
    except _IO_ERRORS as exc:
        print(f"artcluster: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except _ESTIMATION_ERRORS as exc:
        print(f"artcluster: error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except _USAGE_ERRORS as exc:
        message = exc.args[0] if exc.args else exc
        print(f"artcluster: error: {message}", file=sys.stderr)
        return EXIT_USAGE
    except ArtClusterError as exc:
        print(f"artcluster: error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
