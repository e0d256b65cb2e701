"""Krichever-Novikov fixtures and the identity checks built on them."""

from __future__ import annotations

import hashlib
import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .diffring import ZERO, RingElem, as_elem, param, u, w
from .expr import format_elem, format_operator, parse, parse_operator
from .linalg import span_coefficients
from .psdop import LocalOp, WnlOp, fraction_form, right_unit_equivalent
from .report import ERROR, FAIL, PASS, Report, mode_label, short, timer, zero_test
from .varcalc import (
    EvolGen,
    IntegrationError,
    frechet,
    is_variational,
    lie_bracket,
    op_frechet,
)

DEFAULT_FIXTURES = "fixtures.knv"


class FixtureError(ValueError):
    pass


@dataclass
class Fixtures:
    elems: dict
    ops: dict
    checksum: str
    version: str
    source: str = ""

    def __getitem__(self, name):
        if name in self.elems:
            return self.elems[name]
        return self.ops[name]

    @property
    def symmetries(self) -> list[RingElem]:
        out = []
        i = 0
        while f"G{i}" in self.elems:
            out.append(self.elems[f"G{i}"])
            i += 1
        return out


def _statements(text: str):
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if raw[:1].isspace():
            if current is None:
                raise FixtureError(f"line {lineno}: continuation without a definition")
            current[2] += " " + line.strip()
            continue
        if current is not None:
            yield current
        current = [lineno, None, line.strip()]
    if current is not None:
        yield current


def load_fixtures(path: Optional[str] = None, p_coeffs: Optional[Sequence] = None) -> Fixtures:
    """Read a fixture file (the packaged one by default)."""
    if path is None:
        raw = resources.files("knv").joinpath("data", DEFAULT_FIXTURES).read_bytes()
        source = f"knv/data/{DEFAULT_FIXTURES}"
    else:
        raw = Path(path).read_bytes()
        source = str(path)
    checksum = hashlib.sha256(raw).hexdigest()[:16]
    elems: dict = {}
    ops: dict = {}
    version = None
    for lineno, _, stmt in _statements(raw.decode()):
        m = re.fullmatch(r"version\s+(\S+)", stmt)
        if m:
            version = m.group(1)
            continue
        m = re.fullmatch(r"(let|op)\s+([A-Za-z][A-Za-z0-9_]*)\s*=\s*(.+)", stmt)
        if not m:
            raise FixtureError(f"line {lineno}: cannot read {stmt[:40]!r}")
        kind, name, body = m.groups()
        try:
            if kind == "let":
                elems[name] = parse(body, elems, p_coeffs)
            else:
                ops[name] = parse_operator(body, elems, p_coeffs)
        except Exception as exc:
            raise FixtureError(f"line {lineno} ({name}): {exc}") from exc
    if version is None:
        raise FixtureError("fixture file has no version line")
    if p_coeffs is not None:
        checksum += "-P" + ",".join(str(c) for c in p_coeffs)
    return Fixtures(elems, ops, checksum, version, source)


@dataclass
class OperatorSet:
    H0: WnlOp
    H1: WnlOp
    H2: WnlOp
    H0inv: LocalOp
    L4: WnlOp = field(init=False)
    L6: WnlOp = field(init=False)

    def __post_init__(self):
        self.L4 = self.H1.compose(self.H0inv)
        self.L6 = self.H2.compose(self.H0inv)

    @classmethod
    def from_fixtures(cls, fx: Fixtures) -> "OperatorSet":
        H0inv = fx.ops["H0inv"]
        if H0inv.tails:
            raise FixtureError("H0inv must be local")
        return cls(fx.ops["H0"], fx.ops["H1"], fx.ops["H2"], H0inv.local)

    def pencil(self, a=None, b=None, c=None) -> WnlOp:
        """``alpha H0 + beta H1 + gamma H2`` (symbolic by default)."""
        a = param("alpha") if a is None else as_elem(a)
        b = param("beta") if b is None else as_elem(b)
        c = param("gamma") if c is None else as_elem(c)
        return self.H0.scale(a) + self.H1.scale(b) + self.H2.scale(c)


# ---------------------------------------------------------------------------
# residuals


def recursion_residual(L: WnlOp, F: RingElem) -> WnlOp:
    DF = frechet(F)
    return L.derive(F) - DF.compose(L) + L.compose(DF)


def hamiltonian_residual(L: WnlOp, E: RingElem) -> WnlOp:
    DE = frechet(E)
    return L.derive(E) - DE.compose(L) - L.compose(DE.adjoint())


def fraction_residual(A: LocalOp, B: LocalOp, E: RingElem) -> LocalOp:
    DE = frechet(E)
    lhs = A.adjoint().compose(B.derive(E) + DE.adjoint().compose(B))
    rhs = B.adjoint().compose(DE.compose(A) - A.derive(E))
    return lhs - rhs


def bidifferential_residual(A: LocalOp, B: LocalOp) -> RingElem:
    """Both sides of the bidifferential identity for F = w1, G = w2, subtracted."""
    F, G = w(1, 0), w(2, 0)
    AF, AG, BF = A.apply(F), A.apply(G), B.apply(F)
    XAF, XAG = EvolGen(AF), EvolGen(AG)
    inner = (B.derive(XAG).apply(F) - B.derive(XAF).apply(G)
             + op_frechet(A, G).adjoint().apply(BF)
             + op_frechet(B, G).adjoint().apply(AF))
    lhs = A.adjoint().apply(inner)
    rhs = B.adjoint().apply(A.derive(XAF).apply(G) - A.derive(XAG).apply(F))
    return lhs - rhs


def bracket_identity_instance(A: LocalOp, B: LocalOp, F: RingElem, G: RingElem) -> RingElem:
    """The Poisson bracket identity for ``A B^-1`` at concrete ``F, G``, as a residual.

    Here ``D_X(Y)`` is the Frechet derivative of ``X`` applied to ``Y``.
    """
    def D(X, Y):
        return frechet(X).apply(Y)

    def Ds(X, Y):
        return frechet(X).adjoint().apply(Y)

    AF, AG, BF, BG = A.apply(F), A.apply(G), B.apply(F), B.apply(G)
    lhs = A.adjoint().apply(D(BF, AG) + Ds(AG, BF) - D(BG, AF) + Ds(BG, AF))
    return lhs - B.adjoint().apply(D(AG, AF) - D(AF, AG))


# ---------------------------------------------------------------------------
# checks


def _run(check, inputs, compute, mode="exact", trials=40, checksum="", details=None):
    with timer() as box:
        try:
            residual = compute()
        except (IntegrationError, ArithmeticError, ValueError) as exc:
            err = exc
            residual = None
        if residual is not None:
            zero, witness = zero_test(residual, mode, trials)
    if residual is None:
        return Report(check, inputs, ERROR, mode_label(mode, trials),
                      f"{type(err).__name__}: {err}", box["ms"], checksum, details or {})
    summary = None
    if not zero:
        summary = witness
        if mode == "exact":
            body = residual.canonical() if isinstance(residual, WnlOp) else residual
            summary += " | residual: " + short(body)
    return Report(check, inputs, PASS if zero else FAIL, mode_label(mode, trials), summary,
                  box["ms"], checksum, details or {})


def check_skew(L, name: str = "L", **kw) -> Report:
    L = L if isinstance(L, WnlOp) else WnlOp.from_local(L)
    return _run("skew", {"operator": name}, lambda: L + L.adjoint(), **kw)


def check_commute(F: RingElem, G: RingElem, names=("F", "G"), **kw) -> Report:
    return _run("commute", {"F": names[0], "G": names[1]}, lambda: lie_bracket(F, G), **kw)


def check_order(G: RingElem, expected: int, name: str = "G", checksum: str = "", **_) -> Report:
    with timer() as box:
        d = G.diff_order()
    verdict = PASS if d == expected else FAIL
    summary = None if verdict == PASS else f"differential order {d}, expected {expected}"
    return Report("order", {"G": name, "expected": expected}, verdict, "exact", summary,
                  box["ms"], checksum, {"order": d})


def check_recursion(L: WnlOp, F: RingElem, names=("L", "F"), **kw) -> Report:
    return _run("recursion", {"L": names[0], "F": names[1]},
                lambda: recursion_residual(L, F), **kw)


def check_hamiltonian_on_symmetry(L: WnlOp, E: RingElem, names=("L", "E"), **kw) -> Report:
    return _run("hamiltonian", {"L": names[0], "E": names[1]},
                lambda: hamiltonian_residual(L, E), **kw)


def check_fraction_identity(A: LocalOp, B: LocalOp, E: RingElem, names=("A", "B", "E"), **kw) -> Report:
    inputs = {"A": names[0], "B": names[1], "E": names[2]}
    return _run("fraction_identity", inputs, lambda: fraction_residual(A, B, E), **kw)


def check_bidifferential(A: LocalOp, B: LocalOp, names=("A", "B"), **kw) -> Report:
    return _run("bidifferential", {"A": names[0], "B": names[1]},
                lambda: bidifferential_residual(A, B), **kw)


# ---------------------------------------------------------------------------
# hierarchy


def next_symmetry(L: WnlOp, G: RingElem, constants: Optional[Sequence] = None) -> RingElem:
    return L.apply(G, constants)


def solve_constant_span(K: RingElem, basis: Sequence[RingElem]) -> Optional[list[RingElem]]:
    return span_coefficients(K, basis)


def hamiltonian_root(G: RingElem, H0inv: Optional[LocalOp] = None) -> tuple[RingElem, bool]:
    """``psi = H0^-1(G)`` and whether ``psi`` passes the Helmholtz test."""
    if H0inv is None:
        H0inv = LocalOp.mult(u(1) ** -1).compose(LocalOp.d()).compose(LocalOp.mult(u(1) ** -1))
    psi = H0inv.apply(G)
    return psi, is_variational(psi)


@dataclass
class Hierarchy:
    symmetries: list

    def __getitem__(self, i: int) -> RingElem:
        return self.symmetries[i]

    def __len__(self) -> int:
        return len(self.symmetries)

    def extend(self, L: WnlOp, start: int, constants: Optional[Sequence] = None) -> RingElem:
        K = next_symmetry(L, self.symmetries[start], constants)
        self.symmetries.append(K)
        return K


def generate(L: WnlOp, G: RingElem, basis: Sequence[tuple[str, RingElem]], names=("L", "G"),
             constants: Optional[Sequence] = None, checksum: str = "",
             match_basis: Optional[Sequence[tuple[str, RingElem]]] = None,
             require: Optional[str] = None) -> Report:
    """Apply ``L`` to ``G`` and certify the result commutes with ``basis``.

    With ``match_basis`` the report also carries constants ``c`` such that
    ``L(G) = sum c_i match_basis_i``; ``require`` names an element whose
    coefficient must be exactly one.
    """
    inputs = {"operator": names[0], "from": names[1]}
    details: dict = {}
    failures = []
    with timer() as box:
        try:
            K = next_symmetry(L, G, constants)
        except IntegrationError as exc:
            err = exc
            K = None
        if K is not None:
            details["order"] = K.diff_order()
            details["symmetry"] = format_elem(K)
            brackets = {}
            for name, Gi in basis:
                ok = lie_bracket(K, Gi).is_zero()
                brackets[name] = ok
                if not ok:
                    failures.append(f"[K, {name}] != 0")
            details["brackets"] = brackets
            if match_basis is not None:
                coeffs = solve_constant_span(K, [e for _, e in match_basis])
                if coeffs is None:
                    details["span"] = None
                    failures.append("K is not in the span of " + ",".join(n for n, _ in match_basis))
                else:
                    span = {n: format_elem(c) for (n, _), c in zip(match_basis, coeffs)}
                    details["span"] = span
                    if require is not None and span.get(require) != "1":
                        failures.append(f"coefficient of {require} is {span.get(require)}")
    if K is None:
        where = f" (tail {err.tail_index})" if err.tail_index is not None else ""
        return Report("generate", inputs, ERROR, "exact", f"{type(err).__name__}{where}: {err}",
                      box["ms"], checksum)
    verdict = PASS if not failures else FAIL
    return Report("generate", inputs, verdict, "exact", "; ".join(failures) or None,
                  box["ms"], checksum, details)


def validate_fixtures(fx: Fixtures) -> list[Report]:
    """Transcription guards for the fixture file."""
    out = []
    Gs = fx.symmetries
    for i, G in enumerate(Gs):
        out.append(check_order(G, 2 * i + 1, f"G{i}", checksum=fx.checksum))
    for i in range(len(Gs)):
        for j in range(i + 1, len(Gs)):
            out.append(check_commute(Gs[i], Gs[j], (f"G{i}", f"G{j}"), checksum=fx.checksum))
    with timer() as box:
        lead = fx.ops["H2"].local.coefficient(5)
        target = u(1) ** 2
    out.append(Report("fixture_term", {"operator": "H2", "term": "D^5"},
                      PASS if lead == target else FAIL, "exact",
                      None if lead == target else f"D^5 coefficient is {lead}",
                      box["ms"], fx.checksum))
    ops = OperatorSet.from_fixtures(fx)
    if len(Gs) >= 4:
        named = [(f"G{i}", G) for i, G in enumerate(Gs)]
        out.append(generate(ops.L4, Gs[1], named, ("L4", "G1"), checksum=fx.checksum,
                            match_basis=named, require="G3"))
    return out


def check_fraction_form(L: WnlOp, name: str, expected_orders=None, annihilate=(),
                        expected_pair=None, checksum: str = "") -> Report:
    """Fraction representative of ``L`` with coprimality and annihilation checks."""
    details: dict = {}
    failures = []
    with timer() as box:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ff = fraction_form(L)
        A, B = ff.A, ff.B
        details.update(A=format_operator(A), B=format_operator(B),
                       order_A=A.order, order_B=B.order, right_gcd_order=ff.gcd.order)
        if not ff.coprime:
            failures.append("A and B are not right coprime")
        if not WnlOp.from_local(A) == L.compose(B):
            failures.append("A != L o B")
        if expected_orders and (A.order, B.order) != tuple(expected_orders):
            failures.append(f"orders {(A.order, B.order)} != {tuple(expected_orders)}")
        Bstar = B.adjoint()
        for label, q in annihilate:
            if not Bstar.apply(q).is_zero():
                failures.append(f"B* does not annihilate {label}")
        if expected_pair is not None and not right_unit_equivalent((A, B), expected_pair):
            failures.append("not right-unit-equivalent to the expected pair")
    return Report("fraction", {"operator": name}, PASS if not failures else FAIL, "exact",
                  "; ".join(failures) or None, box["ms"], checksum, details)


def check_density(G: RingElem, name: str, H0inv: Optional[LocalOp] = None, checksum: str = "",
                  expect: bool = True) -> Report:
    with timer() as box:
        psi, ok = hamiltonian_root(G, H0inv)
    verdict = PASS if ok == expect else FAIL
    summary = None if verdict == PASS else "Frechet derivative of psi is not self-adjoint"
    return Report("densities", {"G": name}, verdict, "exact", summary, box["ms"], checksum,
                  {"psi": short(psi)})
