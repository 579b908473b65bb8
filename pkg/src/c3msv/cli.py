"""Command-line front end: ``c3msv <subcommand> [options]``.

Exit codes: 0 success, 1 usage or validation error, 2 internal numerical
consistency failure (including Fock/Gaussian disagreement).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import analysis, gaussian
from .analysis import (
    Axis,
    CriterionObservable,
    Engine,
    EngineMismatch,
    NoInteriorMinimum,
    NumberObservable,
    QuadObservable,
    ScanSpec,
    UncertaintyObservable,
)
from .fock import DEFAULT_TOL, ConsistencyError, CutoffExceeded, amplitude_rows, build_state
from .moments import QuadratureForm, intensity_moments, second_moment_table
from .params import ParamError, make_params

CSV_VERSION_LINE = "# c3msv-csv v1"
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    """9 significant digits; ``-inf`` for perfect squeezing."""
    x = float(x)
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    if x == 0.0:
        x = 0.0  # drop the sign of -0.0
    return f"{x:.9g}"


def json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if math.isinf(x) or math.isnan(x):
        return fmt(x)
    return float(fmt(x))


def _flat(record: dict) -> dict:
    out = {}
    for key, value in record.items():
        if isinstance(value, complex):
            out[f"{key}_re"] = json_value(value.real)
            out[f"{key}_im"] = json_value(value.imag)
        else:
            out[key] = json_value(value)
    return out


# -- subcommands -------------------------------------------------------------


def _params(args):
    scale = math.pi if args.pi_units else 1.0
    return make_params(args.r1, args.r2, args.theta1 * scale, args.theta2 * scale)


def cmd_state(args):
    state = build_state(_params(args), args.tol)
    header = ["n", "l", "m", "re", "im", "prob"]
    rows = [
        [str(n), str(l), str(m), fmt(a.real), fmt(a.imag), fmt(p)]
        for n, l, m, a, p in amplitude_rows(state)
    ]
    return header, rows


def _gaussian_moments(params) -> dict:
    t = gaussian.mode_transform(params)
    n, m = t.normal_moments(), t.anomalous_moments()
    means = np.real(np.diag(n))
    pair = np.abs(n) ** 2 + np.abs(m) ** 2
    cov = pair + np.diag(means)
    return {
        "mean_a": means[0], "mean_b": means[1], "mean_c": means[2],
        "var_a": cov[0, 0], "var_b": cov[1, 1], "var_c": cov[2, 2],
        "cov_ab": cov[0, 1], "cov_bc": cov[1, 2], "cov_ac": cov[0, 2],
        "m_ab": complex(m[0, 1]), "m_bc": complex(m[1, 2]), "m_ac": complex(m[0, 2]),
        "x_ac": complex(n[0, 2]),
        "sq_a": complex(m[0, 0]), "sq_b": complex(m[1, 1]), "sq_c": complex(m[2, 2]),
        "cross_ab": complex(n[0, 1]), "cross_bc": complex(n[1, 2]),
    }


def _fock_moments(params, tol) -> dict:
    state = build_state(params, tol, moment_order=2)
    im = intensity_moments(state)
    table = second_moment_table(state)
    record = dict(vars(im))
    for key in ("m_ab", "m_bc", "m_ac", "x_ac", "sq_a", "sq_b", "sq_c", "cross_ab", "cross_bc"):
        record[key] = complex(getattr(table, key))
    return record


def cmd_moments(args):
    params = _params(args)
    engine = Engine(args.engine)
    if engine is Engine.GAUSSIAN:
        return _gaussian_moments(params)
    try:
        fock = _fock_moments(params, args.tol)
    except CutoffExceeded:
        if engine is Engine.FOCK:
            raise
        return _gaussian_moments(params)
    if engine is Engine.BOTH:
        gauss = _gaussian_moments(params)
        for key, value in fock.items():
            for part in ("real", "imag"):
                analysis.reconcile(key, getattr(value, part), getattr(gauss[key], part))
    return fock


def cmd_squeeze_number(args):
    report = analysis.number_squeezing(
        _params(args), (args.ca, args.cb, args.cc), Engine(args.engine), args.tol
    )
    return {"variance": report.variance, "snl": report.snl, "db": report.db}


def cmd_squeeze_quad(args):
    form = QuadratureForm(args.xa, args.xb, args.xc, args.pa, args.pb, args.pc)
    report = analysis.quad_squeezing(_params(args), form, Engine(args.engine), args.tol)
    return {"variance": report.variance, "snl": report.snl, "db": report.db}


def cmd_entangle(args):
    report = analysis.criterion(_params(args), Engine(args.engine), args.tol)
    out = {}
    for j, (p, margin) in enumerate(zip(report.products, report.margins), start=1):
        out[f"p{j}"] = p
        out[f"margin{j}"] = margin
        out[f"violated{j}"] = getattr(report, f"violated{j}")
    out["certified"] = report.certified
    return out


def _float_list(text: str, count: int, what: str) -> tuple[float, ...]:
    try:
        values = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"{what}: expected {count} comma-separated numbers, got {text!r}") from None
    if len(values) != count:
        raise UsageError(f"{what}: expected {count} comma-separated numbers, got {text!r}")
    return values


def parse_observable(text: str):
    """``number:ca,cb,cc`` / ``number-var:...`` (dB / variance of sum c_j n_j),
    ``quad:xa,xb,xc,pa,pb,pc`` / ``quad-var:...``, ``criterion:j``,
    ``uncertainty:h1,h2,h3``."""
    kind, _, arg = text.partition(":")
    if kind in ("number", "number-var"):
        coeffs = _float_list(arg, 3, kind)
        return NumberObservable(coeffs, "variance" if kind.endswith("-var") else "db")
    if kind in ("quad", "quad-var"):
        form = QuadratureForm(*_float_list(arg, 6, kind))
        return QuadObservable(form, "variance" if kind.endswith("-var") else "db")
    if kind == "criterion":
        if arg not in ("1", "2", "3"):
            raise UsageError(f"criterion index must be 1, 2 or 3, got {arg!r}")
        return CriterionObservable(int(arg))
    if kind == "uncertainty":
        return UncertaintyObservable(_float_list(arg or "1,1,1", 3, kind))
    raise UsageError(f"unknown observable {text!r}")


def parse_axis(text: str, pi_units: bool) -> Axis:
    """``name=start:stop:count``, or a bare name for the default range."""
    if "=" not in text:
        return analysis.default_axis(text)
    try:
        name, _, rng = text.partition("=")
        start, stop, count = rng.split(":")
        start, stop = float(start), float(stop)
        count = int(count)
    except ValueError:
        raise UsageError(f"axis must look like name=start:stop:count, got {text!r}") from None
    if pi_units and name.startswith("theta"):
        start, stop = start * math.pi, stop * math.pi
    return Axis(name, start, stop, count)


def cmd_scan(args):
    scale = math.pi if args.pi_units else 1.0
    spec = ScanSpec(
        parse_axis(args.axis1, args.pi_units),
        parse_axis(args.axis2, args.pi_units),
        parse_observable(args.observable),
        fixed={"r1": args.r1, "r2": args.r2,
               "theta1": args.theta1 * scale, "theta2": args.theta2 * scale},
        engine=Engine(args.engine),
        tol=args.tol,
    )
    result = analysis.scan(spec)
    header = ["axis1", "axis2", "value"]
    rows = [[fmt(x), fmt(y), fmt(v)] for x, y, v in result.rows()]
    comment = (f"# axis1={spec.axis1.name} axis2={spec.axis2.name} "
               f"observable={args.observable} engine={spec.engine.value}")
    return header, rows, comment


def cmd_min_squeeze(args):
    res = analysis.min_squeezing_over_r1(args.r2, args.r1_max, args.tol, Engine(args.engine))
    return {
        "r2": args.r2,
        "r1_star": res.r1_star,
        "db_star": res.db_star,
        "evaluations": res.evaluations,
        "bracket_lo": res.bracket[0],
        "bracket_hi": res.bracket[1],
    }


# -- output ------------------------------------------------------------------


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt(value)
    return str(value)


def _table(header, rows, comment=None) -> str:
    buf = io.StringIO()
    buf.write(CSV_VERSION_LINE + "\n")
    if comment:
        buf.write(comment + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render(result, output_format: str) -> str:
    if isinstance(result, dict):
        record = _flat(result)
        if output_format == "csv":
            return _table(list(record), [[_cell(v) for v in record.values()]])
        return json.dumps(record) + "\n"
    header, rows, *rest = result
    if output_format == "json":
        return json.dumps([{k: _parse_cell(v) for k, v in zip(header, row)} for row in rows]) + "\n"
    return _table(header, rows, rest[0] if rest else None)


def _parse_cell(text: str):
    try:
        value = int(text)
    except ValueError:
        value = float(text)
        if math.isinf(value):
            return text
    return value


# -- argument parsing --------------------------------------------------------


def _common(p: argparse.ArgumentParser, default_format: str, tol_help: str | None = None):
    p.add_argument("--r1", type=float, default=0.0, help="squeezing magnitude r1 >= 0")
    p.add_argument("--r2", type=float, default=0.0, help="squeezing magnitude r2 >= 0")
    p.add_argument("--theta1", type=float, default=0.0, help="phase of xi1 (radians)")
    p.add_argument("--theta2", type=float, default=0.0, help="phase of xi2 (radians)")
    p.add_argument("--pi-units", action="store_true", help="angles are given in units of pi")
    p.add_argument("--engine", choices=[e.value for e in Engine], default=Engine.BOTH.value)
    if tol_help is None:
        p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                       help="Fock truncation tolerance on discarded probability")
    p.add_argument("--output", "-o", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=["csv", "json"], default=default_format)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="c3msv", description="Coupled three-mode squeezed vacuum toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("state", help="dump Fock amplitudes A(n, l) as CSV")
    _common(p, "csv")
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("moments", help="photon-number and mode-operator moments")
    _common(p, "json")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("squeeze-number", help="squeezing of ca n_a + cb n_b + cc n_c")
    _common(p, "json")
    for flag in ("--ca", "--cb", "--cc"):
        p.add_argument(flag, type=float, default=0.0)
    p.set_defaults(func=cmd_squeeze_number)

    p = sub.add_parser("squeeze-quad", help="squeezing of a quadrature form")
    _common(p, "json")
    for flag in ("--xa", "--xb", "--xc", "--pa", "--pb", "--pc"):
        p.add_argument(flag, type=float, default=0.0)
    p.set_defaults(func=cmd_squeeze_quad)

    p = sub.add_parser("entangle", help="genuine tripartite entanglement criterion")
    _common(p, "json")
    p.set_defaults(func=cmd_entangle)

    p = sub.add_parser("scan", help="evaluate an observable on a 2-D parameter grid")
    _common(p, "csv")
    p.add_argument("--axis1", required=True, help="name=start:stop:count, or a bare name for its default range")
    p.add_argument("--axis2", required=True, help="name=start:stop:count, or a bare name for its default range")
    p.add_argument("--observable", required=True, help=parse_observable.__doc__)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("min-squeeze", help="minimum over r1 of dB(n_b - n_a) at fixed r2")
    _common(p, "json", tol_help="skip")
    p.add_argument("--r1-max", type=float, default=8.0)
    p.add_argument("--tol", type=float, default=1e-6, help="golden-section tolerance on r1")
    p.set_defaults(func=cmd_min_squeeze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = render(args.func(args), args.format)
    except (EngineMismatch, ConsistencyError) as exc:
        print(f"c3msv: numerical consistency failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ParamError, UsageError, CutoffExceeded, NoInteriorMinimum, ValueError) as exc:
        print(f"c3msv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
