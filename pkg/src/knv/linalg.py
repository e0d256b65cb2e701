"""Exact linear algebra over the constants field and over the ring itself.

Linear relations over the constants Q(params) are located by evaluating
the jet variables at random integer points (with the parameters
specialised) modulo a large prime, then recomputed exactly with symbolic
parameters and confirmed by an exact subtraction.  A rank found modulo
the prime is a lower bound for the true rank, so independence verdicts
are sound; every reported dependency is checked exactly.
"""

from __future__ import annotations

import random
from fractions import Fraction
from math import isqrt
from typing import Optional, Sequence

import flint

from .diffring import PRIMES, DomainError, EvaluationError, RingElem, _index_to_var, as_elem


class DegenerateInput(ValueError):
    pass


def solve(matrix: Sequence[Sequence[RingElem]], rhs: Sequence[RingElem]) -> list[RingElem]:
    """Solve a square system ``matrix @ x = rhs`` over the field of fractions."""
    n = len(matrix)
    a = [[as_elem(x) for x in row] + [as_elem(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if not a[r][col].is_zero()), None)
        if pivot is None:
            raise DegenerateInput("singular system")
        a[col], a[pivot] = a[pivot], a[col]
        inv = a[col][col].inverse()
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and not a[r][col].is_zero():
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n] for row in a]


def _jet_indices(e: RingElem):
    return [(i, v) for i, v in enumerate(_index_to_var(e.caps)) if v.kind == 1]


def _eval_jets_exact(e: RingElem, point: dict) -> Optional[RingElem]:
    """Substitute integer values for the jets; parameters stay symbolic."""
    vals = {i: flint.fmpq(point[v]) for i, v in _jet_indices(e) if v in point}
    den = e.den.subs(vals) if vals else e.den
    if den.is_zero():
        return None
    num = e.num.subs(vals) if vals else e.num
    return RingElem.from_polys(num, den, e.caps)


def _rank_profile(cols: list[list[int]], p: int):
    """Greedy independent columns and row pivots of a matrix mod p."""
    basis_rows: list[tuple[int, list[int]]] = []  # (pivot row, reduced column)
    independent = []
    for j, col in enumerate(cols):
        v = list(col)
        for r, b in basis_rows:
            if v[r]:
                f = v[r] * pow(b[r], -1, p) % p
                v = [(x - f * y) % p for x, y in zip(v, b)]
        nz = next((r for r, x in enumerate(v) if x), None)
        if nz is not None:
            basis_rows.append((nz, v))
            independent.append(j)
    return independent, [r for r, _ in basis_rows]


def rational_reconstruct(a: int, p: int):
    """``Fraction`` n/d with n/d = a mod p and |n|, d below sqrt(p/2), or ``None``."""
    bound = isqrt(p // 2)
    r0, r1 = p, a % p
    t0, t1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        t0, t1 = t1, t0 - q * t1
    if t1 == 0 or abs(t1) > bound:
        return None
    return Fraction(r1, t1)


def _solve_mod(rows: list[list[int]], rhs: list[int], p: int) -> Optional[list[int]]:
    n = len(rows)
    a = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] % p), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        inv = pow(a[col][col], -1, p)
        a[col] = [x * inv % p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[col])]
    return [row[n] for row in a]


def _combination_vanishes(target: RingElem, coeffs, elems) -> bool:
    check = target
    for c, e in zip(coeffs, elems):
        if not c.is_zero():
            check = check - c * e
    return check.is_zero()


def constant_relations(elems: Sequence[RingElem], rng: Optional[random.Random] = None,
                       attempts: int = 4):
    """Linear structure of ``elems`` over the constants field.

    Returns ``(basis, relations)``: ``basis`` lists indices of a greedy
    maximal independent subset (earlier elements preferred) and
    ``relations`` maps every other index ``j`` to coefficients ``c`` with
    ``elems[j] == sum(c[b] * elems[basis[b]])`` exactly.
    """
    rng = rng or random.Random(0xC0FFEE)
    m = len(elems)
    if m == 0:
        return [], {}
    vars_ = set()
    for e in elems:
        vars_ |= e.variables()
    params = sorted(v for v in vars_ if v.kind == 0)
    jets = sorted(v for v in vars_ if v.kind == 1)
    p = PRIMES[0]
    for _ in range(attempts):
        spec = {v: rng.randrange(1, p) for v in params}
        points = []
        rows = []
        tries = 0
        while len(points) < m + 2:
            tries += 1
            if tries > 50 * (m + 2):
                raise EvaluationError("could not find evaluation points")
            pt = {v: rng.randrange(1, 1 << 30) for v in jets}
            try:
                row = [e.evaluate({**spec, **pt}, p) for e in elems]
            except EvaluationError:
                continue
            points.append(pt)
            rows.append(row)
        cols = [[rows[r][j] for r in range(len(rows))] for j in range(m)]
        independent, pivot_rows = _rank_profile(cols, p)
        sub = [[rows[r][b] for b in independent] for r in pivot_rows]
        basis_elems = [elems[b] for b in independent]
        relations = {}
        exact_rows = None
        ok = True
        for j in range(m):
            if j in independent:
                continue
            coeffs = None
            if not independent:
                coeffs = []
            else:
                sol = _solve_mod(sub, [rows[r][j] for r in pivot_rows], p)
                if sol is not None:
                    fr = [rational_reconstruct(int(x), p) for x in sol]
                    if all(x is not None for x in fr):
                        cand = [RingElem.const(x) for x in fr]
                        if _combination_vanishes(elems[j], cand, basis_elems):
                            coeffs = cand
            if coeffs is None and not params:
                ok = False
                break
            if coeffs is None:
                # coefficients depend on the parameters: solve symbolically
                if exact_rows is None:
                    exact_rows = []
                    for r in pivot_rows:
                        vals = [_eval_jets_exact(e, points[r]) for e in basis_elems]
                        if any(x is None for x in vals):
                            ok = False
                            break
                        exact_rows.append((r, vals))
                    if not ok:
                        break
                rhs = [_eval_jets_exact(elems[j], points[r]) for r, _ in exact_rows]
                if any(x is None for x in rhs):
                    ok = False
                    break
                try:
                    cand = solve([vals for _, vals in exact_rows], rhs)
                except DegenerateInput:
                    ok = False
                    break
                if not _combination_vanishes(elems[j], cand, basis_elems):
                    ok = False
                    break
                coeffs = cand
            relations[j] = coeffs
        if ok:
            return independent, relations
    raise DomainError("linear relation search failed to confirm a dependency")


def span_coefficients(target: RingElem, basis: Sequence[RingElem]) -> Optional[list[RingElem]]:
    """Constants ``c`` with ``target == sum(c_i * basis_i)``, or ``None``."""
    indep, rel = constant_relations(list(basis) + [target])
    n = len(basis)
    if n not in rel:
        return None
    if indep != list(range(n)):
        raise DegenerateInput("basis elements are linearly dependent")
    return rel[n]
