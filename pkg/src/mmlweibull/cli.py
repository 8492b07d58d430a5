"""Command-line interface: ``estimate``, ``select``, ``simulate`` and ``kl``.

Results go to stdout in csv, markdown or json, always preceded by an echo
of the run configuration.  Any failure writes one JSON error record to
stderr and exits nonzero (2 for bad input, 1 for a failed computation,
3 when ``--method all`` ran but some methods failed).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Sequence

from . import __version__
from .codelength import Model
from .dataio import SCHEMES, read_dataset
from .divergence import kl_weibull
from .errors import EstimationError, ParseError
from .estimators import (
    Method,
    SolverConfig,
    applicable_methods,
    estimate_weibull,
    mle_lognormal,
    mml87_lognormal,
)
from .models import LognormalParams, RandomCensorParams, WeibullParams
from .selection import Criterion, select_model
from .simbench import BenchTable, SimPlan, run_bench

EXIT_COMPUTE = 1
EXIT_INPUT = 2
EXIT_PARTIAL = 3


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int, line: int | None = None):
        super().__init__(message)
        self.kind, self.code, self.line = kind, code, line


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("UsageError", message, EXIT_INPUT)


# ---------------------------------------------------------------------------
# rendering


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else format(v, ".10g")
    return str(v)


def _json_value(v: Any):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render(rows: list[dict], config: dict, fmt: str) -> str:
    if fmt == "json":
        doc = {
            "config": config,
            "rows": [{k: _json_value(v) for k, v in r.items()} for r in rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    columns = list(rows[0]) if rows else []
    echo = [f"{k}={_cell(v) if not isinstance(v, list) else ' '.join(map(_cell, v))}"
            for k, v in config.items()]
    if fmt == "csv":
        buf = io.StringIO()
        for line in echo:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r[c]) for c in columns])
        return buf.getvalue()
    out = [f"<!-- {line} -->" for line in echo]
    out.append("| " + " | ".join(columns) + " |")
    out.append("|" + "|".join("---" for _ in columns) + "|")
    for r in rows:
        out.append("| " + " | ".join(_cell(r[c]) for c in columns) + " |")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def _param_columns(model: str, scheme: str) -> tuple[str, ...]:
    if model == "lognormal":
        return ("mu", "sigma")
    if scheme == "random":
        return ("theta", "alpha", "beta")
    return ("k", "lam")


def _param_values(params) -> dict:
    if isinstance(params, WeibullParams):
        return {"k": params.k, "lam": params.lam}
    if isinstance(params, LognormalParams):
        return {"mu": params.mu, "sigma": params.sigma}
    if isinstance(params, RandomCensorParams):
        return {"theta": params.theta, "alpha": params.alpha, "beta": params.beta}
    return {}


def _load_sample(args):
    try:
        data = read_dataset(args.data)
    except OSError as exc:
        raise CliError("IOError", str(exc), EXIT_INPUT) from None
    return data.to_sample(args.scheme, args.censor_time)


def _solver(args) -> SolverConfig:
    return SolverConfig(max_iter=args.max_iter)


def cmd_estimate(args) -> tuple[list[dict], int]:
    sample = _load_sample(args)
    cfg = _solver(args)
    if args.model == "lognormal":
        table = {Method.MLE: mle_lognormal, Method.MML87: mml87_lognormal}
        if args.method == "all":
            methods = list(table)
        elif Method(args.method) in table:
            methods = [Method(args.method)]
        else:
            raise CliError(
                "IncompatibleScheme",
                f"method {args.method} is not available for the lognormal model",
                EXIT_INPUT,
            )
        run = lambda m: table[m](sample, cfg)  # noqa: E731
    else:
        methods = applicable_methods(sample.scheme) if args.method == "all" else [Method(args.method)]
        run = lambda m: estimate_weibull(sample, m, cfg)  # noqa: E731
    pcols = _param_columns(args.model, args.scheme)
    rows, failures = [], []
    for m in methods:
        row = {"method": m.value, "status": "ok"}
        row.update({c: None for c in pcols})
        row.update(converged=None, iterations=None, grad_norm=None,
                   assertion=None, detail=None, total=None)
        try:
            rep = run(m)
        except EstimationError as exc:
            if args.method != "all":
                raise
            row["status"] = type(exc).__name__
            failures.append(f"{m.value}: {type(exc).__name__}: {exc}")
        else:
            row.update(_param_values(rep.params))
            if rep.shape_only is not None:
                row[pcols[0]] = rep.shape_only
            row.update(converged=rep.converged, iterations=rep.iterations,
                       grad_norm=rep.final_grad_norm)
            if rep.codelength is not None:
                cl = rep.codelength
                row.update(assertion=cl.assertion, detail=cl.detail, total=cl.total)
        rows.append(row)
    if failures and len(failures) == len(methods):
        raise CliError("EstimationError", "; ".join(failures), EXIT_COMPUTE)
    if failures:
        _error_record("PartialFailure", "; ".join(failures))
        return rows, EXIT_PARTIAL
    return rows, 0


def cmd_select(args) -> tuple[list[dict], int]:
    sample = _load_sample(args)
    cfg = _solver(args)
    crits = list(Criterion) if args.criterion == "all" else [Criterion(args.criterion)]
    rows = []
    for crit in crits:
        v = select_model(sample, crit, cfg)
        rows.append({
            "criterion": crit.value,
            "winner": v.winner.value,
            "weibull": v.codelength_weibull,
            "lognormal": v.codelength_lognormal,
            "tie": v.tie,
            "degenerate_weibull": v.degenerate_weibull,
            "degenerate_lognormal": v.degenerate_lognormal,
            "warnings": "; ".join(v.warnings),
        })
    return rows, 0


def cmd_simulate(args) -> tuple[list[dict], int]:
    plan = SimPlan(
        table=BenchTable(args.table),
        n_grid=tuple(args.n),
        k_grid=tuple(args.k or ()),
        p_grid=tuple(args.p or ()),
        replicates=args.reps,
        seed=args.seed,
        methods=tuple(args.methods or ()),
        solver=_solver(args),
    )
    rows = []
    for r in run_bench(plan):
        rows.append({
            "n": r.n, "p": r.p, "k": r.k, "generator": r.generator, "method": r.method,
            "metric": r.metric.value, "value": r.value, "mc_stderr": r.mc_stderr,
            "n_used": r.n_used, "n_excluded": r.n_excluded,
        })
    return rows, 0


def cmd_kl(args) -> tuple[list[dict], int]:
    res = kl_weibull(WeibullParams(args.k0, args.l0), WeibullParams(args.k1, args.l1), args.c)
    return [{"value": res.value, "regime": res.regime.value}], 0


# ---------------------------------------------------------------------------
# argument parsing


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("csv", "markdown", "json"), default="csv")
    common.add_argument("--seed", type=_seed, default=0, help="RNG seed (simulate only)")
    common.add_argument("--max-iter", type=int, default=200, help="solver iteration cap")

    parser = _Parser(prog="mmlweibull", description="MML87 inference for Weibull lifetime data.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    data = _Parser(add_help=False)
    data.add_argument("data", help="CSV file with header 'y,delta'")
    data.add_argument("--scheme", choices=SCHEMES, default="complete")
    data.add_argument("--censor-time", type=_positive, default=None,
                      help="type I censoring time (overrides '#censor_time=' in the file)")

    p = sub.add_parser("estimate", parents=[common, data], help="fit Weibull or lognormal parameters")
    p.add_argument("--method", choices=[m.value for m in Method] + ["all"], default="mml87")
    p.add_argument("--model", choices=[m.value for m in Model], default="weibull")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("select", parents=[common, data], help="Weibull versus lognormal")
    p.add_argument("--criterion", choices=[c.value for c in Criterion] + ["all"], default="all")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo benchmark tables")
    p.add_argument("--table", choices=[t.value for t in BenchTable], required=True)
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--k", type=_positive, nargs="+", help="true shapes (estimator tables)")
    p.add_argument("--p", type=float, nargs="+",
                   help="uncensored probability (est-type1) or censoring probability (select-type1)")
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--methods", nargs="+",
                   help="estimators (mle, yang-xie, mml87, ...) or criteria (mml87, bic)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("kl", parents=[common], help="KL divergence between two Weibull models")
    for name in ("k0", "l0", "k1", "l1"):
        p.add_argument(f"--{name}", type=_positive, required=True)
    p.add_argument("--c", type=_positive, default=None, help="type I censoring time")
    p.set_defaults(func=cmd_kl)
    return parser


def _config_echo(args) -> dict:
    cfg = {"version": __version__}
    for k, v in vars(args).items():
        if k != "func":
            cfg[k] = v
    return cfg


def _error_record(kind: str, message: str, line: int | None = None):
    rec = {"error": kind, "message": message}
    if line is not None:
        rec["line"] = line
    sys.stderr.write(json.dumps(rec) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        rows, code = args.func(args)
    except CliError as exc:
        _error_record(exc.kind, str(exc), exc.line)
        return exc.code
    except ParseError as exc:
        _error_record("ParseError", str(exc), exc.line)
        return EXIT_INPUT
    except (EstimationError, ArithmeticError) as exc:
        _error_record(type(exc).__name__, str(exc))
        return EXIT_COMPUTE
    except ValueError as exc:
        _error_record(type(exc).__name__, str(exc))
        return EXIT_INPUT
    sys.stdout.write(render(rows, _config_echo(args), args.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
