"""Command-line front end: ``resolvent-lab {eval,radii,orders,verify,trajectory}``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import sys
from typing import Optional, Sequence

from . import geometry as geo
from . import semigroup as sg
from . import verifier
from .errors import ResolventLabError
from .grid import Grid
from .herglotz import Generator, generator_from_dict, generator_from_json, linear_generator
from .resolvent import DEFAULT_TOL, ResolventMap, solve_resolvent

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_INFRA = 0, 1, 2, 3


def fmt(value) -> str:
    """Shortest decimal that round-trips the float (at most 17 significant digits)."""
    if value is None:
        return ""
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def fmt_complex(z: complex) -> str:
    return f"{fmt(z.real)},{fmt(z.imag)}"


# -- argument types -----------------------------------------------------------------


def complex_arg(text: str) -> complex:
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}") from None
    if len(parts) == 1:
        return complex(parts[0], 0.0)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")
    return complex(*parts)


def sweep_arg(text: str) -> list:
    try:
        a, b, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a:b:step', got {text!r}") from None
    if not step > 0 or b < a:
        raise argparse.ArgumentTypeError("sweep needs step > 0 and b >= a")
    n = int(math.floor((b - a) / step + 1e-9))
    return [a + k * step for k in range(n + 1)]


def grid_arg(text: str) -> Grid:
    try:
        return Grid.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def int_list_arg(text: str) -> list:
    out = []
    try:
        for part in text.split(","):
            if "-" in part.strip("-"):
                lo, hi = part.split("-")
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list like '1-20' or '1,2,5', got {text!r}") from None
    return out


def float_list_arg(text: str) -> list:
    try:
        return [float(p) for p in text.split(",") if p]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def str_list_arg(text: str) -> list:
    return [p.strip() for p in text.split(",") if p.strip()]


# -- parser -------------------------------------------------------------------------


def _add_generator(p, required_hint: str = ""):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gen", help="generator as inline JSON")
    g.add_argument("--gen-file", help="path to a generator JSON file")
    g.add_argument("--q", type=complex_arg, help="use f(z) = qz (or only q, where that suffices), as 're,im'")


def _add_r(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--r", type=float, help="resolvent parameter")
    g.add_argument("--r-sweep", type=sweep_arg, help="inclusive sweep a:b:step")


def _add_output(p, default_format="csv"):
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resolvent-lab", description="Nonlinear resolvents of disk generators.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="resolvent G_r(z), or the flow u(t, z) with --t")
    _add_generator(p)
    p.add_argument("--r", type=float)
    p.add_argument("--z", type=complex_arg, action="append", required=True, help="point 're,im' (repeatable)")
    p.add_argument("--t", type=complex_arg, help="flow time 're,im' instead of a resolvent")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    _add_output(p)

    p = sub.add_parser("radii", help="extension, distortion and covering radii over r")
    _add_generator(p)
    _add_r(p)
    _add_output(p)

    p = sub.add_parser("orders", help="estimated against theoretical orders over r")
    _add_generator(p)
    _add_r(p)
    p.add_argument("--grid", type=grid_arg, default=Grid())
    p.add_argument("--theta", type=float, default=0.0)
    _add_output(p)

    p = sub.add_parser("verify", help="run the theorem-check suite")
    p.add_argument("--checks", type=str_list_arg, help=f"check ids (default: all of {len(verifier.DEFAULT_CHECKS)})")
    p.add_argument("--seeds", type=int_list_arg, default=list(range(1, 21)))
    p.add_argument("--x-values", type=float_list_arg, help="sweep of x = r Re q")
    p.add_argument("--containment-x", type=float_list_arg)
    p.add_argument("--q", type=complex_arg, default=1 + 0j)
    p.add_argument("--n-atoms", type=int)
    p.add_argument("--grid", type=grid_arg, default=Grid())
    p.add_argument("--summary", help="also write the CSV summary to this path")
    _add_output(p, default_format="json")

    p = sub.add_parser("trajectory", help="semigroup trajectory as CSV")
    _add_generator(p)
    p.add_argument("--r", type=float, help="flow the semigroup generated by G_r instead")
    p.add_argument("--t", type=complex_arg, required=True)
    p.add_argument("--z", type=complex_arg, required=True)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--out")
    return parser


# -- helpers ------------------------------------------------------------------------


class UsageError(Exception):
    pass


def load_generator(args, required: bool = True) -> Optional[Generator]:
    try:
        if args.gen is not None:
            return generator_from_json(args.gen)
        if args.gen_file is not None:
            with open(args.gen_file) as fh:
                return generator_from_dict(json.load(fh))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid generator: {exc}") from None
    except OSError as exc:
        raise UsageError(f"cannot read generator file: {exc}") from None
    if getattr(args, "q", None) is not None:
        return linear_generator(args.q)
    if required:
        raise UsageError("one of --gen, --gen-file or --q is required")
    return None


def r_values(args) -> list:
    if args.r is not None:
        return [args.r]
    if args.r_sweep:
        return args.r_sweep
    raise UsageError("one of --r or --r-sweep is required")


@contextlib.contextmanager
def open_out(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_rows(rows: list, columns: list, fmt_name: str, handle) -> None:
    if fmt_name == "json":
        for row in rows:
            handle.write(json.dumps(row) + "\n")
        return
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])


# -- subcommands --------------------------------------------------------------------


def cmd_eval(args) -> int:
    gen = load_generator(args)
    rows = []
    for z in args.z:
        if args.t is not None:
            source = gen if args.r is None else ResolventMap(gen, args.r, args.tol)
            rows.append({"z": z, "value": sg.flow(source, args.t, z)})
        else:
            if args.r is None:
                raise UsageError("eval needs --r (or --t for a flow value)")
            v = solve_resolvent(gen, args.r, z, args.tol)
            rows.append({"z": z, "value": v.w, "deriv": v.deriv, "residual": v.residual})
    with open_out(args.out) as out:
        for row in rows:
            if args.format == "json":
                obj = {k: ([v.real, v.imag] if isinstance(v, complex) else v) for k, v in row.items()}
                out.write(json.dumps(obj) + "\n")
            else:
                out.write(fmt_complex(row["value"]) + "\n")
    return EXIT_OK


RADII_COLUMNS = ["r", "x", "M", "R", "R1", "R2", "rho", "rho1", "rho2", "rho2_general", "rho3", "rho4"]


def cmd_radii(args) -> int:
    gen = load_generator(args)
    rows = []
    for r in r_values(args):
        rep = geo.resolvent_radii(r, gen.q)
        rows.append({"r": r, "x": r * gen.q.real, **rep.to_dict()})
    with open_out(args.out) as out:
        _write_rows(rows, RADII_COLUMNS, args.format, out)
    return EXIT_OK


ORDER_COLUMNS = ["r", "x", "starlike_est", "strong_est", "spirallike_est", "alpha_r", "beta_r", "gamma_r",
                 "alpha_r_theta", "k_qc"]


def cmd_orders(args) -> int:
    gen = load_generator(args)
    rows = []
    for r in r_values(args):
        est = geo.estimate_resolvent_orders(gen, r, args.grid, args.theta)
        row = {"r": r, "x": r * gen.q.real, "starlike_est": est.starlike_order,
               "strong_est": est.strong_order, "spirallike_est": est.spirallike_order}
        x = r * gen.q.real
        if x > geo.R0:
            th = geo.theoretical_orders(x, args.theta if x > 6.0 else 0.0)
            row.update(alpha_r=th.alpha_r, beta_r=th.beta_r, gamma_r=th.gamma_r,
                       alpha_r_theta=th.alpha_r_theta, k_qc=th.k_qc)
        rows.append(row)
    with open_out(args.out) as out:
        _write_rows(rows, ORDER_COLUMNS, args.format, out)
    return EXIT_OK


def cmd_verify(args) -> int:
    config = verifier.SuiteConfig(checks=args.checks, seeds=args.seeds, q=args.q, n_atoms=args.n_atoms,
                                  radius_count=args.grid.radius_count, angle_count=args.grid.angle_count)
    if args.x_values:
        config.x_values = args.x_values
    if args.containment_x:
        config.containment_x = args.containment_x
    unknown = [c for c in (args.checks or []) if c not in verifier.CHECKS]
    if unknown:
        raise UsageError(f"unknown check ids {unknown}; known: {', '.join(sorted(verifier.CHECKS))}")
    reports = verifier.run_suite(config)
    with open_out(args.out) as out:
        if args.format == "json":
            verifier.write_jsonl(reports, out)
        else:
            verifier.write_csv_summary(reports, out)
    if args.summary:
        with open(args.summary, "w", newline="") as fh:
            verifier.write_csv_summary(reports, fh)
    summary = verifier.margin_summary(reports)
    print(f"{summary['reports']} reports, {summary['failed']} failed, min margin {fmt(summary['min_margin'])}",
          file=sys.stderr)
    return EXIT_OK if verifier.all_passed(reports) else EXIT_FAILED


def cmd_trajectory(args) -> int:
    gen = load_generator(args)
    source = gen if args.r is None else ResolventMap(gen, args.r)
    traj = sg.trajectory(source, args.t, args.z, args.samples)
    with open_out(args.out) as out:
        traj.write_csv(out)
    return EXIT_OK


COMMANDS = {"eval": cmd_eval, "radii": cmd_radii, "orders": cmd_orders, "verify": cmd_verify,
            "trajectory": cmd_trajectory}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on errors and 0 on --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"resolvent-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except verifier.SuiteError as exc:
        print(f"resolvent-lab: infrastructure error in check {exc.check_id}: {exc.cause!r}", file=sys.stderr)
        return EXIT_INFRA
    except (ResolventLabError, OSError, ArithmeticError) as exc:
        print(f"resolvent-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INFRA


if __name__ == "__main__":
    sys.exit(main())
