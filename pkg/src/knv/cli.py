"""Command line front end: ``knv verify|eval|bracket|generate``."""

from __future__ import annotations

import argparse
import sys
from typing import Callable, Optional, Sequence

from .diffring import u
from .expr import ExprSyntaxError, format_elem, parse, parse_scalar_list
from .knov import (
    FixtureError,
    OperatorSet,
    check_bidifferential,
    check_commute,
    check_density,
    check_fraction_form,
    check_fraction_identity,
    check_hamiltonian_on_symmetry,
    check_recursion,
    check_skew,
    generate,
    load_fixtures,
    validate_fixtures,
)
from .psdop import LocalOp
from .report import ERROR, Report, dump_reports, mode_label, timer
from .varcalc import lie_bracket

CHECKS = ("skew", "commute", "recursion", "hamiltonian", "fraction", "bidifferential",
          "densities", "pencil", "generate", "fixtures")


class Context:
    """Fixtures, operators and run options shared by the checks."""

    def __init__(self, fixtures: Optional[str] = None, p: Optional[Sequence] = None,
                 mode: str = "exact", trials: int = 40):
        self.fx = load_fixtures(fixtures, p)
        self.ops = OperatorSet.from_fixtures(self.fx)
        self.G = self.fx.symmetries
        self.kw = {"mode": mode, "trials": trials, "checksum": self.fx.checksum}

    @property
    def named(self):
        return [(f"G{i}", G) for i, G in enumerate(self.G)]

    def h0_fraction(self):
        return LocalOp.mult(u(1)), LocalOp.mult(u(1) ** -1).compose(LocalOp.d())


def _skew(c: Context):
    return [check_skew(getattr(c.ops, n), n, **c.kw) for n in ("H0", "H1", "H2")]


def _commute(c: Context):
    return [check_commute(c.G[i], c.G[j], (f"G{i}", f"G{j}"), **c.kw)
            for i in range(len(c.G)) for j in range(i + 1, len(c.G))]


def _recursion(c: Context):
    cases = [("L4", 0), ("L4", 1), ("L6", 0)]
    return [check_recursion(getattr(c.ops, L), c.G[i], (L, f"G{i}"), **c.kw) for L, i in cases]


def _hamiltonian(c: Context):
    cases = [(H, i) for H in ("H0", "H1", "H2") for i in range(3)] + [("H0", 3)]
    return [check_hamiltonian_on_symmetry(getattr(c.ops, H), c.G[i], (H, f"G{i}"), **c.kw)
            for H, i in cases if i < len(c.G)]


def _pencil(c: Context):
    P = c.ops.pencil()
    name = "alpha*H0+beta*H1+gamma*H2"
    out = [check_skew(P, name, **c.kw)]
    out += [check_hamiltonian_on_symmetry(P, c.G[i], (name, f"G{i}"), **c.kw) for i in (0, 1)]
    return out


def _fraction(c: Context):
    A, B = c.h0_fraction()
    cs = c.fx.checksum
    out = [check_fraction_form(c.ops.H0, "H0", expected_pair=(A, B), checksum=cs),
           check_fraction_form(c.ops.H1, "H1", expected_orders=(6, 3), checksum=cs,
                               annihilate=[("G1", c.G[1]), ("G2", c.G[2]), ("u1", u(1))])]
    out += [check_fraction_identity(A, B, c.G[i], ("u1", "u1^-1*D", f"G{i}"), **c.kw)
            for i in range(3)]
    return out


def _bidifferential(c: Context):
    A, B = c.h0_fraction()
    return [check_bidifferential(A, B, ("u1", "u1^-1*D"), **c.kw)]


def _densities(c: Context):
    return [check_density(c.G[i], f"G{i}", c.ops.H0inv, c.fx.checksum) for i in range(1, len(c.G))]


def _generate(c: Context):
    named = c.named
    cs = c.fx.checksum
    return [generate(c.ops.L4, c.G[1], named, ("L4", "G1"), checksum=cs,
                     match_basis=named, require="G3"),
            generate(c.ops.L4, c.G[2], named, ("L4", "G2"), checksum=cs)]


def _fixtures(c: Context):
    return validate_fixtures(c.fx)


RUNNERS: dict[str, Callable[[Context], list]] = {
    "skew": _skew, "commute": _commute, "recursion": _recursion,
    "hamiltonian": _hamiltonian, "fraction": _fraction, "bidifferential": _bidifferential,
    "densities": _densities, "pencil": _pencil, "generate": _generate, "fixtures": _fixtures,
}


def run(check: str, context: Context) -> list[Report]:
    """Reports for ``check`` (or every check for ``"all"``)."""
    names = CHECKS if check == "all" else (check,)
    reports = []
    for name in names:
        try:
            reports.extend(RUNNERS[name](context))
        except (ArithmeticError, ValueError) as exc:
            reports.append(Report(name, {}, ERROR, mode_label(context.kw["mode"], context.kw["trials"]),
                                  f"{type(exc).__name__}: {exc}", 0, context.fx.checksum))
    return reports


def parse_p(text: Optional[str]):
    if text is None:
        return None
    vals = parse_scalar_list(text)
    if len(vals) == 1 and vals[0] == 0:
        return [0] * 5
    if len(vals) != 5:
        raise argparse.ArgumentTypeError("--p expects five coefficients c0,...,c4 or 0")
    return vals


def _emit(reports: list[Report], path: Optional[str], out) -> int:
    for r in reports:
        print(r.line(), file=out)
        if r.residual_summary:
            print(f"        {r.residual_summary}", file=out)
    if path:
        dump_reports(reports, path)
    return 0 if reports and all(r.passed for r in reports) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="knv", description="Exact identity checks for the "
                                 "Krichever-Novikov hierarchy and its Hamiltonian operators.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fixtures", help="fixture file (default: packaged fixtures)")
    common.add_argument("--p", help='specialize P: "c0,c1,c2,c3,c4" or 0')
    common.add_argument("--report", help="write a JSON report array to this file")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run identity checks")
    v.add_argument("check", choices=CHECKS + ("all",))
    v.add_argument("--mode", choices=("exact", "probabilistic"), default="exact")
    v.add_argument("--trials", type=int, default=40)

    e = sub.add_parser("eval", parents=[common], help="parse and print an expression in canonical form")
    e.add_argument("expr")

    b = sub.add_parser("bracket", parents=[common], help="Lie bracket of two evolutionary generators")
    b.add_argument("F")
    b.add_argument("G")

    g = sub.add_parser("generate", parents=[common], help="apply a recursion operator to a symmetry")
    g.add_argument("--from", dest="source", required=True, help="G0..G3")
    g.add_argument("--operator", choices=("L4", "L6"), default="L4")
    g.add_argument("--match-basis", help="comma separated fixture names, e.g. G0,G1,G2,G3")
    g.add_argument("--constants", help="integration constants, comma separated")
    return ap


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        p = parse_p(args.p)
        if args.command == "eval":
            env = load_fixtures(args.fixtures, p).elems
            print(format_elem(parse(args.expr, env, p)), file=out)
            return 0
        ctx = Context(args.fixtures, p, getattr(args, "mode", "exact"), getattr(args, "trials", 40))
        if args.command == "verify":
            return _emit(run(args.check, ctx), args.report, out)
        if args.command == "bracket":
            F, G = (parse(t, ctx.fx.elems, p) for t in (args.F, args.G))
            with timer() as box:
                value = lie_bracket(F, G)
            print(format_elem(value), file=out)
            report = check_commute(F, G, (format_elem(F), format_elem(G)), checksum=ctx.fx.checksum)
            report.time_ms = box["ms"]
            if args.report:
                dump_reports([report], args.report)
            return 0 if report.passed else 1
        source = ctx.fx.elems.get(args.source)
        if source is None:
            raise FixtureError(f"unknown symmetry {args.source!r}")
        match = None
        if args.match_basis:
            match = [(n, ctx.fx.elems[n]) for n in args.match_basis.split(",")]
        constants = parse_scalar_list(args.constants) if args.constants else None
        report = generate(getattr(ctx.ops, args.operator), source, ctx.named,
                          (args.operator, args.source), constants, ctx.fx.checksum, match)
        code = _emit([report], args.report, out)
        for key in ("order", "span", "brackets", "symmetry"):
            if key in report.details:
                print(f"{key}: {report.details[key]}", file=out)
        return code
    except (ExprSyntaxError, FixtureError, KeyError, argparse.ArgumentTypeError) as exc:
        print(f"knv: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
