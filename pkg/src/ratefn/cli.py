"""Command-line interface.

Each analysis is a subcommand. Results go to ``--output`` (written
atomically), in which case stdout carries a one-line summary; without
``--output`` the payload itself is printed to stdout. Progress and errors go
to stderr. Exit codes: 0 success, 2 validation problem (the message names
the offending flag or input), 1 computation failure.

Seeded subcommands are bit-reproducible: rerunning with the same flags and
seed writes byte-identical files. ``--threads`` is accepted for interface
stability; evaluation is vectorized in-process and results never depend on
it. A ``--config`` JSON file, when given, overrides the corresponding flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, oracle, serialize
from .cumulant import LambdaGrid, cumulant_curve
from .errors import (
    DimensionMismatch,
    EmptyDataset,
    InternalConsistencyError,
    InvalidA,
    InvalidLambda,
    InvalidMeta,
    InvalidS,
    MissingGradients,
    MissingGradNorms,
    MissingGroupId,
    NonRationalProbs,
    ParseError,
    RatefnError,
    SolverFailure,
    UnknownSampleId,
    ValidationError,
    ZeroVariance,
)
from .loss_data import ModelMeta, dump_dataset, load_dataset, reduce_augmented
from .rate import grid_inverse_rate, inverse_rate, rate_curve

_VALIDATION_ERRORS = (
    ParseError,
    ValidationError,
    EmptyDataset,
    MissingGroupId,
    UnknownSampleId,
    InvalidLambda,
    InvalidA,
    InvalidS,
    InvalidMeta,
    MissingGradients,
    MissingGradNorms,
    DimensionMismatch,
    NonRationalProbs,
    ZeroVariance,
)
_COMPUTE_ERRORS = (SolverFailure, InternalConsistencyError, OSError)


def parse_grid_spec(spec: str) -> LambdaGrid:
    """Parse a 'start:stop:count:linear|log' grid description."""
    parts = spec.split(":")
    if len(parts) != 4:
        raise ValidationError(f"grid spec must be start:stop:count:linear|log, got {spec!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValidationError(f"grid spec has non-numeric fields: {spec!r}") from None
    if parts[3] == "linear":
        return LambdaGrid.linear(lo, hi, count)
    if parts[3] == "log":
        return LambdaGrid.log_spaced(lo, hi, count)
    raise ValidationError(f"grid spacing must be 'linear' or 'log', got {parts[3]!r}")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text!r}")
    return value


def _row_csv(columns: list[str], values: list) -> str:
    rendered = [
        serialize.fmt17(v) if isinstance(v, float) else str(v).lower() if isinstance(v, bool) else str(v)
        for v in values
    ]
    return (
        f"# columns: {','.join(columns)}\n"
        + ",".join(columns)
        + "\n"
        + ",".join(rendered)
        + "\n"
    )


def _add_io_args(sub, dataset_input=True):
    if dataset_input:
        sub.add_argument("--input", required=True, help="loss dataset file")
        sub.add_argument("--input-format", choices=("csv", "jsonl"), default=None)
    sub.add_argument("--output", default=None, help="write the result here (atomic)")
    sub.add_argument("--format", choices=("csv", "json"), default="json")
    sub.add_argument("--config", default=None, help="JSON file whose keys override flags")
    sub.add_argument("--threads", type=_positive_int, default=None, help="accepted; results never depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratefn",
        description="Deviation analysis of per-sample loss data: cumulant and rate functions, "
        "generalization bounds, augmentation checks, and Monte Carlo oracles.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("cumulant", help="evaluate the cumulant curve over a tilt grid")
    _add_io_args(sub)
    sub.add_argument("--grid", default="1e-3:1e3:64:log", help="start:stop:count:linear|log")

    sub = commands.add_parser("rate", help="rate of one or more deviations")
    _add_io_args(sub)
    sub.add_argument("--a", type=float, action="append", default=None, help="deviation (repeatable)")
    sub.add_argument("--a-grid", default=None, help="start:stop:count:linear|log")
    sub.add_argument("--tol", type=float, default=1e-10)

    sub = commands.add_parser("inverse-rate", help="inverse rate at one or more budgets")
    _add_io_args(sub)
    sub.add_argument("--s", type=float, action="append", default=None, help="budget (repeatable)")
    sub.add_argument("--tol", type=float, default=1e-10)

    sub = commands.add_parser("grid-inverse-rate", help="inverse rate restricted to a tilt grid")
    _add_io_args(sub)
    sub.add_argument("--s", type=float, required=True)
    sub.add_argument("--grid", default="1e-3:1e3:64:log")

    sub = commands.add_parser("bound", help="high-probability population-loss bound")
    _add_io_args(sub)
    sub.add_argument("--p", type=_positive_int, required=True, help="parameter count")
    sub.add_argument("--n", type=_positive_int, required=True, help="training-set size")
    sub.add_argument("--delta", type=float, required=True)
    sub.add_argument("--epsilon", type=float, default=0.0)
    sub.add_argument("--train-loss", type=float, default=None)

    sub = commands.add_parser("compare", help="smoothness comparison of two models")
    _add_io_args(sub, dataset_input=False)
    sub.add_argument("--input-a", required=True)
    sub.add_argument("--input-b", required=True)
    sub.add_argument("--input-format", choices=("csv", "jsonl"), default=None)
    sub.add_argument("--grid", default="1e-3:1e3:64:log")
    sub.add_argument("--a-grid", default=None)
    sub.add_argument("--beta", type=float, default=None)

    sub = commands.add_parser("interpolator-check", help="interpolator ordering premises and evidence")
    _add_io_args(sub, dataset_input=False)
    sub.add_argument("--input-a", required=True)
    sub.add_argument("--input-b", required=True)
    sub.add_argument("--input-format", choices=("csv", "jsonl"), default=None)
    sub.add_argument("--train-loss-a", type=float, required=True)
    sub.add_argument("--p", type=_positive_int, required=True)
    sub.add_argument("--n", type=_positive_int, required=True)
    sub.add_argument("--delta", type=float, required=True)
    sub.add_argument("--epsilon", type=float, default=0.0)

    sub = commands.add_parser("augment", help="reduce a grouped dataset to per-group mean losses")
    sub.add_argument("--input", required=True)
    sub.add_argument("--input-format", choices=("csv", "jsonl"), default=None)
    sub.add_argument("--output", default=None)
    sub.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    sub.add_argument("--config", default=None)
    sub.add_argument("--threads", type=_positive_int, default=None)

    sub = commands.add_parser("da-check", help="per-tilt augmentation inequality gaps")
    _add_io_args(sub)
    sub.add_argument("--grid", default="1e-3:1e3:64:log")

    sub = commands.add_parser("taylor", help="quadratic approximations of cumulant or rate")
    _add_io_args(sub)
    sub.add_argument("--mode", choices=("j", "rate", "inverse-rate", "covariance"), required=True)
    sub.add_argument("--x", type=float, required=True, help="tilt, deviation, or budget")
    sub.add_argument("--theta-delta", default=None, help="comma-separated displacement (covariance mode)")
    sub.add_argument("--s-budget", type=float, default=None, help="budget for the covariance inverse-rate form")

    sub = commands.add_parser("grad-bound", help="bounds from squared input-gradient norms")
    _add_io_args(sub)
    sub.add_argument("--m-const", type=float, required=True)
    sub.add_argument("--s", type=float, required=True)
    sub.add_argument("--lambda", dest="lam", type=float, default=None)

    sub = commands.add_parser("oracle-exact", help="exact cumulant/rate of a discrete distribution")
    _add_io_args(sub, dataset_input=False)
    sub.add_argument("--dist", required=True, help="JSON file with values/probs")
    sub.add_argument("--lambda", dest="lam", type=float, default=None)
    sub.add_argument("--a", type=float, default=None)
    sub.add_argument("--resolution", type=_positive_int, default=2048)

    sub = commands.add_parser("simulate-cramer", help="Monte Carlo tail probability vs exact rate")
    _add_io_args(sub, dataset_input=False)
    sub.add_argument("--dist", required=True)
    sub.add_argument("--n", type=_positive_int, required=True)
    sub.add_argument("--a", type=float, required=True)
    sub.add_argument("--trials", type=_positive_int, required=True)
    sub.add_argument("--seed", type=_positive_int, required=True)

    sub = commands.add_parser("bias-probe", help="replicate the cumulant estimator against the oracle")
    _add_io_args(sub, dataset_input=False)
    sub.add_argument("--dist", required=True)
    sub.add_argument("--n", type=_positive_int, required=True)
    sub.add_argument("--lambda", dest="lam", type=float, required=True)
    sub.add_argument("--replicates", type=_positive_int, required=True)
    sub.add_argument("--seed", type=_positive_int, required=True)

    return parser


def _load_input(args):
    return load_dataset(args.input, args.input_format)


def _require_json(args):
    if args.format != "json":
        raise ValidationError("--format: this report only serializes to json")


def _cmd_cumulant(args):
    ds = _load_input(args)
    curve = cumulant_curve(ds, parse_grid_spec(args.grid))
    text = serialize.cumulant_curve_to_csv(curve) if args.format == "csv" else serialize.cumulant_curve_to_json(curve)
    summary = (
        f"cumulant: {len(curve.grid)} tilts, J(max)={serialize.fmt17(curve.j_values[-1])}, "
        f"mean={serialize.fmt17(curve.summary.empirical_loss)}"
    )
    return summary, text


def _cmd_rate(args):
    ds = _load_input(args)
    a_values = list(args.a or [])
    if args.a_grid:
        a_values.extend(parse_grid_spec(args.a_grid).values)
    if not a_values:
        raise InvalidA("--a or --a-grid is required")
    a_values = sorted(set(a_values))
    evals = rate_curve(ds, a_values, tol=args.tol)
    if len(evals) == 1:
        ev = evals[0]
        text = (
            _row_csv(["a", "value", "lambda_star", "saturated"], [ev.a, ev.value, ev.lambda_star, ev.saturated])
            if args.format == "csv"
            else serialize.to_json_text(ev, kind="rate")
        )
        summary = f"rate: a={ev.a:g} value={serialize.fmt17(ev.value)} saturated={str(ev.saturated).lower()}"
    else:
        text = serialize.rate_curve_to_csv(evals) if args.format == "csv" else serialize.rate_curve_to_json(evals)
        n_sat = sum(e.saturated for e in evals)
        summary = f"rate: {len(evals)} deviations, {n_sat} saturated"
    return summary, text


def _cmd_inverse_rate(args):
    ds = _load_input(args)
    s_values = list(args.s or [])
    if not s_values:
        raise InvalidS("--s is required")
    evals = [inverse_rate(ds, s, tol=args.tol) for s in sorted(set(s_values))]
    if len(evals) == 1:
        ev = evals[0]
        text = (
            _row_csv(
                ["s", "value", "lambda_star", "saturated", "b_max"],
                [ev.s, ev.value, ev.lambda_star, ev.saturated, ev.b_max],
            )
            if args.format == "csv"
            else serialize.inverse_rate_to_json(ev)
        )
        summary = f"inverse-rate: s={ev.s:g} value={serialize.fmt17(ev.value)} saturated={str(ev.saturated).lower()}"
    else:
        if args.format == "csv":
            lines = ["# columns: s,value,lambda_star,saturated,b_max", "s,value,lambda_star,saturated,b_max"]
            for ev in evals:
                lines.append(
                    f"{serialize.fmt17(ev.s)},{serialize.fmt17(ev.value)},"
                    f"{serialize.fmt17(ev.lambda_star)},{str(ev.saturated).lower()},{serialize.fmt17(ev.b_max)}"
                )
            text = "\n".join(lines) + "\n"
        else:
            text = serialize.to_json_text({"evaluations": evals}, kind="inverse_rate_curve")
        summary = f"inverse-rate: {len(evals)} budgets"
    return summary, text


def _cmd_grid_inverse_rate(args):
    ds = _load_input(args)
    ev = grid_inverse_rate(ds, args.s, parse_grid_spec(args.grid))
    text = (
        _row_csv(
            ["s", "value", "lambda_star", "saturated", "b_max"],
            [ev.s, ev.value, ev.lambda_star, ev.saturated, ev.b_max],
        )
        if args.format == "csv"
        else serialize.to_json_text(ev, kind="grid_inverse_rate")
    )
    return f"grid-inverse-rate: s={ev.s:g} value={serialize.fmt17(ev.value)} at lambda={ev.lambda_star:g}", text


def _cmd_bound(args):
    _require_json(args)
    ds = _load_input(args)
    meta = ModelMeta(args.p, args.n, args.delta, args.epsilon)
    report = analysis.generalization_bound(ds, meta, train_loss=args.train_loss)
    text = serialize.to_json_text(report, kind="bound")
    return (
        f"bound: s={serialize.fmt17(report.s)} inverse_rate={serialize.fmt17(report.inverse_rate.value)} "
        f"upper_bound={serialize.fmt17(report.upper_bound)}"
    ), text


def _cmd_compare(args):
    _require_json(args)
    ds_a = load_dataset(args.input_a, args.input_format)
    ds_b = load_dataset(args.input_b, args.input_format)
    a_values = parse_grid_spec(args.a_grid).values if args.a_grid else None
    verdict = analysis.compare_smoothness(
        ds_a, ds_b, grid=parse_grid_spec(args.grid), a_values=a_values, beta=args.beta
    )
    text = serialize.to_json_text(verdict, kind="smoothness")
    return f"compare: verdict={verdict.verdict} cumulant_dominance={str(verdict.cumulant_dominance).lower()}", text


def _cmd_interpolator_check(args):
    _require_json(args)
    ds_a = load_dataset(args.input_a, args.input_format)
    ds_b = load_dataset(args.input_b, args.input_format)
    meta = ModelMeta(args.p, args.n, args.delta, args.epsilon)
    claim = analysis.interpolator_ordering(args.train_loss_a, ds_a, ds_b, meta, epsilon=args.epsilon)
    text = serialize.to_json_text(claim, kind="interpolator_ordering")
    return (
        f"interpolator-check: premise_ok={str(claim.premise_ok).lower()} "
        f"beta={serialize.fmt17(claim.beta)} beta_smooth_ok={str(claim.beta_smooth_ok).lower()}"
    ), text


def _cmd_augment(args):
    ds = _load_input(args)
    reduced = reduce_augmented(ds)
    if args.output is None:
        raise ValidationError("--output: augment writes a dataset file; an output path is required")
    dump_dataset(reduced, args.output, format=args.format)
    return f"augment: {len(ds)} records reduced to {len(reduced)} groups -> {args.output}", None


def _cmd_da_check(args):
    ds = _load_input(args)
    report = analysis.da_inequality_check(ds, parse_grid_spec(args.grid))
    if args.format == "csv":
        lines = ["# columns: lambda,j_flat,j_reduced,gap", "lambda,j_flat,j_reduced,gap"]
        for lam, jf, jr, gap in zip(report.lambdas, report.j_flat, report.j_reduced, report.gaps):
            lines.append(
                f"{serialize.fmt17(lam)},{serialize.fmt17(jf)},{serialize.fmt17(jr)},{serialize.fmt17(gap)}"
            )
        text = "\n".join(lines) + "\n"
    else:
        text = serialize.to_json_text(report, kind="da_check")
    return (
        f"da-check: min_gap={serialize.fmt17(min(report.gaps))} "
        f"equal_groups={str(report.equal_group_sizes).lower()}"
    ), text


def _cmd_taylor(args):
    _require_json(args)
    ds = _load_input(args)
    if args.mode == "j":
        report = analysis.variance_taylor(ds, args.x)
        text = serialize.to_json_text(report, kind="taylor")
    elif args.mode in ("rate", "inverse-rate"):
        report = analysis.variance_rate_approx(ds, args.mode.replace("-", "_"), args.x)
        text = serialize.to_json_text(report, kind="taylor")
    else:
        if not args.theta_delta:
            raise ValidationError("--theta-delta: required for covariance mode")
        delta = [float(part) for part in args.theta_delta.split(",")]
        cov = analysis.covariance_taylor(ds, delta, args.x, s=args.s_budget)
        report = cov.report
        text = serialize.to_json_text(cov, kind="taylor_covariance")
    return (
        f"taylor: mode={args.mode} exact={serialize.fmt17(report.exact)} "
        f"approx={serialize.fmt17(report.approx)} abs_error={serialize.fmt17(report.abs_error)}"
    ), text


def _cmd_grad_bound(args):
    _require_json(args)
    ds = _load_input(args)
    report = analysis.gradient_norm_bound(ds, args.m_const, args.s, lam=args.lam)
    text = serialize.to_json_text(report, kind="grad_bound")
    return f"grad-bound: bound_iinv={serialize.fmt17(report.bound_iinv)}", text


def _cmd_oracle_exact(args):
    dist = oracle.load_distribution(args.dist)
    fields: dict = {"mean": dist.mean, "min_value": dist.min_value}
    parts = []
    if args.lam is not None:
        fields["lam"] = args.lam
        fields["exact_cumulant"] = oracle.exact_cumulant(dist, args.lam)
        parts.append(f"J({args.lam:g})={serialize.fmt17(fields['exact_cumulant'])}")
    if args.a is not None:
        fields["a"] = args.a
        fields["exact_rate"] = oracle.exact_rate(dist, args.a, args.resolution)
        parts.append(f"I({args.a:g})={serialize.fmt17(fields['exact_rate'])}")
    if args.lam is None and args.a is None:
        raise ValidationError("--lambda or --a: at least one is required")
    if args.format == "csv":
        columns = sorted(fields)
        text = _row_csv(columns, [fields[c] for c in columns])
    else:
        text = serialize.to_json_text(fields, kind="oracle_exact")
    return "oracle-exact: " + " ".join(parts), text


def _cmd_simulate_cramer(args):
    dist = oracle.load_distribution(args.dist)
    print(
        f"simulate-cramer: running {args.trials} trials of n={args.n} draws (seed {args.seed})",
        file=sys.stderr,
    )
    report = oracle.cramer_tail(dist, args.n, args.a, args.trials, args.seed)
    if args.format == "csv":
        text = _row_csv(
            ["n", "a", "trials", "hit_count", "p_hat", "neg_log_rate", "exact_rate", "seed"],
            [report.n, report.a, report.trials, report.hit_count, report.p_hat,
             report.neg_log_rate, report.exact_rate, report.seed],
        )
    else:
        text = serialize.to_json_text(report, kind="cramer_tail")
    return (
        f"simulate-cramer: p_hat={serialize.fmt17(report.p_hat)} "
        f"neg_log_rate={serialize.fmt17(report.neg_log_rate)} exact_rate={serialize.fmt17(report.exact_rate)}"
    ), text


def _cmd_bias_probe(args):
    dist = oracle.load_distribution(args.dist)
    report = oracle.estimator_bias_probe(dist, args.n, args.lam, args.replicates, args.seed)
    if args.format == "csv":
        text = _row_csv(
            ["n", "lam", "replicates", "mean_estimate", "stderr", "exact_value", "underestimates", "seed"],
            [report.n, report.lam, report.replicates, report.mean_estimate, report.stderr,
             report.exact_value, report.underestimates, report.seed],
        )
    else:
        text = serialize.to_json_text(report, kind="bias_probe")
    return (
        f"bias-probe: mean={serialize.fmt17(report.mean_estimate)} "
        f"exact={serialize.fmt17(report.exact_value)} underestimates={str(report.underestimates).lower()}"
    ), text


_HANDLERS = {
    "cumulant": _cmd_cumulant,
    "rate": _cmd_rate,
    "inverse-rate": _cmd_inverse_rate,
    "grid-inverse-rate": _cmd_grid_inverse_rate,
    "bound": _cmd_bound,
    "compare": _cmd_compare,
    "interpolator-check": _cmd_interpolator_check,
    "augment": _cmd_augment,
    "da-check": _cmd_da_check,
    "taylor": _cmd_taylor,
    "grad-bound": _cmd_grad_bound,
    "oracle-exact": _cmd_oracle_exact,
    "simulate-cramer": _cmd_simulate_cramer,
    "bias-probe": _cmd_bias_probe,
}


def _apply_config(args):
    if getattr(args, "config", None) is None:
        return
    path = Path(args.config)
    if not path.exists():
        raise ParseError(f"--config: {path}: no such file")
    try:
        overrides = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"--config: {path}: invalid JSON: {exc.msg}") from None
    if not isinstance(overrides, dict):
        raise ParseError("--config: expected a JSON object of flag overrides")
    for key, value in overrides.items():
        setattr(args, key.replace("-", "_"), value)


def run(argv=None) -> int:
    """Parse arguments, dispatch, and map errors to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = args.command
    try:
        _apply_config(args)
        summary, text = _HANDLERS[command](args)
        if getattr(args, "output", None) and text is not None:
            serialize.atomic_write_text(args.output, text)
            print(summary)
        elif text is not None:
            sys.stdout.write(text)
        else:
            print(summary)
        return 0
    except _VALIDATION_ERRORS as exc:
        print(f"{command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except _COMPUTE_ERRORS as exc:
        print(f"{command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except RatefnError as exc:
        print(f"{command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
