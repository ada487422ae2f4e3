"""Command line front end.

Subcommands:

  run          integrate one (model, scheme, dt) case, write the error
               series CSV and print a one-line report
  convergence  step-size sweep, print a dt/max_error/order table
  figure       write the CSV data and gnuplot script for a named figure
  exact        sample the exact solution of a model into a CSV

Exit codes: 0 success, 2 usage error (unknown ids, bad flags), 3 numerical
failure (blow-up or a solver that did not converge); on blow-up the partial
report is still written.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import bench, schemes
from .models import make_model
from .schemes import SchemeSpec


def _add_model_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", required=True, help="oscillator, biomass, trees or seasonal")
    parser.add_argument("--x0", type=float, default=0.25, help="oscillator initial value (0, 1/2)")
    parser.add_argument("--z0", type=float, default=1.0, help="biomass family initial stock")
    parser.add_argument("--zf", type=float, default=0.5, help="plantation forcing amplitude")
    parser.add_argument(
        "--omega", type=float, default=2.0 * math.pi, help="seasonal forcing frequency"
    )


def _add_scheme_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scheme", required=True, help=", ".join(schemes.SCHEME_KINDS))
    parser.add_argument(
        "--forcing-approx",
        default=schemes.FORCING_HALF,
        choices=schemes.FORCING_APPROXES,
        help="treatment of time-dependent forcing (ignored by the Euler schemes)",
    )
    parser.add_argument(
        "--nonlocal-b",
        default=schemes.NONLOCAL_SEMI_IMPLICIT,
        choices=schemes.NONLOCAL_KINDS,
        help="treatment of state-dependent forcing",
    )
    parser.add_argument(
        "--coeffs",
        default="exact",
        choices=("exact", "gamma"),
        help="scalar-nsfd coefficient kind (gamma selects the order-n truncation)",
    )


def _build_model(args):
    params = {
        "oscillator": {"x0": args.x0},
        "biomass": {"z0": args.z0},
        "trees": {"z0": args.z0, "zf": args.zf},
        "seasonal": {"z0": args.z0, "zf": args.zf, "omega": args.omega},
    }.get(args.model)
    if params is None:
        raise ValueError(
            f"unknown model {args.model!r}; valid: oscillator, biomass, trees, seasonal"
        )
    return make_model(args.model, **params)


def _build_scheme(args) -> SchemeSpec:
    kind = args.scheme
    if args.coeffs == "gamma":
        if kind != schemes.SCALAR_NSFD:
            raise ValueError("--coeffs gamma applies only to --scheme scalar-nsfd")
        kind = schemes.GAMMA_NSFD
    return SchemeSpec(
        kind, forcing_approx=args.forcing_approx, nonlocal_b=args.nonlocal_b
    )


def _cmd_run(args) -> int:
    model = _build_model(args)
    scheme = _build_scheme(args)
    _, series, report = bench.run_experiment(model, scheme, args.dt, args.tend, norm=args.norm)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bench._write_rows(out, "t,rel_error", zip(series.times, series.errors))
    print("model,scheme,dt,t_end,norm,max_error,final_error,blow_up_step")
    blow = "" if report.blow_up_step is None else report.blow_up_step
    print(
        f"{report.model},{report.scheme},{bench._dt_label(report.dt)},{report.t_end},"
        f"{report.norm},{report.max_error:.16e},{report.final_error:.16e},{blow}"
    )
    return 0 if report.blow_up_step is None else 3


def _cmd_convergence(args) -> int:
    model = _build_model(args)
    scheme = _build_scheme(args)
    dts = [float(tok) for tok in args.dts.split(",") if tok]
    study = bench.convergence_study(model, scheme, dts, args.tend, norm=args.norm)
    print("dt,max_error,order")
    for i, (dt, err) in enumerate(zip(study.dts, study.max_errors)):
        order = "" if i == 0 else study.orders[i - 1]
        if isinstance(order, float):
            order = f"{order:.3f}"
        print(f"{bench._dt_label(dt)},{err:.16e},{order}")
    return 0


def _cmd_figure(args) -> int:
    paths = bench.run_figure(args.id, args.out_dir)
    for p in paths:
        print(p)
    return 0


def _cmd_exact(args) -> int:
    model = _build_model(args)
    n_steps = int(math.floor(args.tend / args.dt + 1e-9))
    times = np.arange(n_steps + 1) * args.dt
    rows = [np.concatenate(([t], model.exact(t))) for t in times]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bench._write_rows(out, bench._STATE_HEADERS[model.n], rows)
    print(out)
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsfdlab",
        description="Exact and nonstandard finite-difference schemes on benchmark models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one case and write its error series")
    _add_model_options(p_run)
    _add_scheme_options(p_run)
    p_run.add_argument("--dt", type=float, required=True)
    p_run.add_argument("--tend", type=float, required=True)
    p_run.add_argument("--norm", default=bench.COMPONENT_X, choices=bench.NORM_KINDS)
    p_run.add_argument("--out", required=True, help="error series CSV path")
    p_run.set_defaults(handler=_cmd_run)

    p_conv = sub.add_parser("convergence", help="order table over a step-size sweep")
    _add_model_options(p_conv)
    _add_scheme_options(p_conv)
    p_conv.add_argument("--dts", required=True, help="comma-separated step sizes")
    p_conv.add_argument("--tend", type=float, required=True)
    p_conv.add_argument("--norm", default=bench.COMPONENT_X, choices=bench.NORM_KINDS)
    p_conv.set_defaults(handler=_cmd_convergence)

    p_fig = sub.add_parser("figure", help="write CSV data and gnuplot script for a figure")
    p_fig.add_argument("--id", required=True, help=", ".join(sorted(bench.FIGURES)))
    p_fig.add_argument("--out-dir", default="figures")
    p_fig.set_defaults(handler=_cmd_figure)

    p_exact = sub.add_parser("exact", help="sample a model's exact solution")
    _add_model_options(p_exact)
    p_exact.add_argument("--dt", type=float, required=True)
    p_exact.add_argument("--tend", type=float, required=True)
    p_exact.add_argument("--out", required=True)
    p_exact.set_defaults(handler=_cmd_exact)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.handler(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OverflowError, ZeroDivisionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
