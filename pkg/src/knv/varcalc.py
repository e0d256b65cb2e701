"""Variational calculus on the jet space of ``u``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .diffring import ZERO, DomainError, RingElem, VarId, as_elem, _context, _index_to_var
from .psdop import LocalOp


class IntegrationError(ArithmeticError):
    tail_index = None


class NotATotalDerivative(IntegrationError):
    """The variational derivative of the integrand does not vanish."""


class Obstruction(IntegrationError):
    """An antiderivative exists only outside the ring (``kind`` says why)."""

    def __init__(self, kind: str, residual: RingElem = None):
        super().__init__(f"no antiderivative in the ring ({kind})")
        self.kind = kind
        self.residual = residual


@dataclass(frozen=True)
class EvolGen:
    """The evolutionary derivation of ``u_t = generator``."""

    generator: RingElem
    dep: int = 0


def _u_only(e: RingElem, what: str):
    if any(v.kind == 1 and v.dep != 0 for v in e.variables()):
        raise DomainError(f"{what} expects an element of u-jets and parameters")


def _jet(n: int) -> VarId:
    return VarId.jet(n)


def frechet(f: RingElem) -> LocalOp:
    f = as_elem(f)
    _u_only(f, "frechet")
    return LocalOp({v.order: f.partial(v) for v in f.jets()})


def variational_derivative(f: RingElem) -> RingElem:
    f = as_elem(f)
    _u_only(f, "variational_derivative")
    acc = ZERO
    for v in sorted(f.jets()):
        t = f.partial(v).total_derivative(v.order)
        acc = acc + (-t if v.order % 2 else t)
    return acc


def evol_apply(X: Union[EvolGen, RingElem], e: RingElem) -> RingElem:
    """``sum_n D^n(F) * de/du_n``; other dependents are left fixed."""
    if not isinstance(X, EvolGen):
        X = EvolGen(as_elem(X))
    e = as_elem(e)
    jets = sorted(v for v in e.jets() if v.dep == X.dep)
    if not jets:
        return ZERO
    acc = ZERO
    Fn = X.generator
    n = 0
    for v in jets:
        while n < v.order:
            Fn = Fn.total_derivative()
            n += 1
        if Fn.is_zero():
            break
        acc = acc + Fn * e.partial(v)
    return acc


def lie_bracket(f: RingElem, g: RingElem) -> RingElem:
    f, g = as_elem(f), as_elem(g)
    _u_only(f, "lie_bracket")
    _u_only(g, "lie_bracket")
    return evol_apply(f, g) - evol_apply(g, f)


def op_frechet(op: LocalOp, f: RingElem) -> LocalOp:
    """The operator ``G -> X_G(op)(f)``."""
    f = as_elem(f)
    acc: dict = {}
    for k, c in op.coeffs.items():
        fk = f.total_derivative(k)
        if fk.is_zero():
            continue
        for v in c.jets():
            if v.dep != 0:
                continue
            t = c.partial(v) * fk
            if v.order in acc:
                acc[v.order] = acc[v.order] + t
            else:
                acc[v.order] = t
    return LocalOp(acc)


def is_variational(psi: RingElem) -> bool:
    """Helmholtz test: the Frechet derivative is self-adjoint."""
    D = frechet(psi)
    return (D - D.adjoint()).is_zero()


# ---------------------------------------------------------------------------
# inverse total derivative


def integrate_total_derivative(f: RingElem) -> RingElem:
    """``g`` with ``D(g) = f`` and zero additive constant.

    Raises ``NotATotalDerivative`` when the Euler test fails and
    ``Obstruction`` when the antiderivative leaves the ring.
    """
    f = as_elem(f)
    _u_only(f, "integrate_total_derivative")
    if f.is_zero():
        return ZERO
    if not variational_derivative(f).is_zero():
        raise NotATotalDerivative("Euler operator does not annihilate the integrand")
    g = ZERO
    while not f.is_zero():
        N = f.max_order()
        if N <= 0:
            raise Obstruction("constant" if N < 0 else "residual", f)
        top = _jet(N)
        a = f.partial(top)
        if not a.partial(top).is_zero():
            raise Obstruction("nonlinear", f)
        h = integrate_rational(a, _jet(N - 1))
        g = g + h
        f = f - h.total_derivative()
    return g


def _split(poly, i: int) -> dict:
    """Coefficients of ``poly`` as a polynomial in generator ``i``."""
    ctx = poly.context()
    parts: dict = {}
    for monom, coeff in poly.terms():
        k = monom[i]
        m = list(monom)
        m[i] = 0
        parts.setdefault(k, {})[tuple(m)] = coeff
    return {k: ctx.from_dict(d) for k, d in parts.items()}


def _to_upoly(e: RingElem, i: int) -> tuple[list, list]:
    num = _split(e.num, i)
    den = _split(e.den, i)

    def as_list(parts):
        n = max(parts) + 1
        return [RingElem.from_polys(parts[k], e.den.context().constant(1), e.caps)
                if k in parts else ZERO for k in range(n)]

    return as_list(num), as_list(den)


# univariate polynomials over the field: lists of coefficients, low degree first


def _trim(a: list) -> list:
    a = list(a)
    while a and a[-1].is_zero():
        a.pop()
    return a


def _uadd(a, b):
    n = max(len(a), len(b))
    return _trim([(a[k] if k < len(a) else ZERO) + (b[k] if k < len(b) else ZERO)
                  for k in range(n)])


def _usub(a, b):
    return _uadd(a, [-c for c in b])


def _umul(a, b):
    if not a or not b:
        return []
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x.is_zero():
            continue
        for j, y in enumerate(b):
            if not y.is_zero():
                out[i + j] = out[i + j] + x * y
    return _trim(out)


def _udivmod(a, b):
    a, b = _trim(a), _trim(b)
    if not b:
        raise DomainError("polynomial division by zero")
    inv = b[-1].inverse()
    q = [ZERO] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    while len(r) >= len(b) and r:
        k = len(r) - len(b)
        c = r[-1] * inv
        q[k] = c
        for j, y in enumerate(b):
            r[k + j] = r[k + j] - c * y
        r = _trim(r[:-1] if r[-1].is_zero() else r)
    return _trim(q), r


def _uderiv(a):
    return _trim([a[k] * k for k in range(1, len(a))])


def _umonic(a):
    a = _trim(a)
    inv = a[-1].inverse()
    return [c * inv for c in a]


def _ugcd(a, b):
    a, b = _trim(a), _trim(b)
    while b:
        a, b = b, _udivmod(a, b)[1]
    return _umonic(a) if a else a


def _ext_euclid(a, b, c):
    """``(s, t)`` with ``s a + t b = c`` and ``deg s < deg b``; needs gcd(a, b) | c."""
    r0, r1 = _trim(a), _trim(b)
    s0, s1 = [as_elem(1)], []
    while r1:
        q, r = _udivmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _usub(s0, _umul(q, s1))
    # s0 a = r0 (mod b) with r0 = gcd up to a unit
    q, rem = _udivmod(c, r0)
    if rem:
        raise DomainError("right-hand side not in the ideal")
    s = _umul(s0, q)
    t_num = _usub(c, _umul(s, a))
    t, rem = _udivmod(t_num, b)
    if rem:
        raise DomainError("extended Euclid failed")
    if b and len(s) >= len(b):
        qq, s = _udivmod(s, b)
        t = _uadd(t, _umul(qq, a))
    return s, t


def _from_upoly(a, x: RingElem) -> RingElem:
    acc = ZERO
    for k in range(len(a) - 1, -1, -1):
        acc = acc * x + a[k]
    return acc


def _uintegrate_poly(a, x: RingElem) -> RingElem:
    return _from_upoly([ZERO] + [c * RingElem.const(1) / (k + 1) for k, c in enumerate(a)], x)


def integrate_rational(a: RingElem, x: VarId) -> RingElem:
    """Antiderivative of ``a`` in the single variable ``x`` (no additive constant).

    Uses Hermite reduction; a remaining logarithmic part raises
    ``Obstruction("logarithmic")``.
    """
    a = as_elem(a)
    if a.is_zero():
        return ZERO
    a = a._widen(_context_caps_for(a, x))
    i = _var_index_of(a, x)
    if a.den.degrees()[i] == 0:
        return RingElem.from_polys(a.num.integral(i), a.den, a.caps)
    xe = RingElem.var(x)
    N, D = _to_upoly(a, i)
    D_lc = D[-1]
    N = [c / D_lc for c in N]
    D = _umonic(D)
    Q, R = _udivmod(N, D)
    result = _uintegrate_poly(Q, xe)
    g_parts, A, Dstar = _hermite(R, D)
    for B, Dm in g_parts:
        result = result + _from_upoly(B, xe) / _from_upoly(Dm, xe)
    q2, r2 = _udivmod(A, Dstar)
    if r2:
        raise Obstruction("logarithmic", _from_upoly(r2, xe) / _from_upoly(Dstar, xe))
    return result + _uintegrate_poly(q2, xe)


def _hermite(A, D):
    """Mack's linear Hermite reduction: int A/D = sum B/Dm + int A'/D* with D* squarefree."""
    parts = []
    Dp = _uderiv(D)
    Dminus = _ugcd(D, Dp)
    Dstar = _udivmod(D, Dminus)[0]
    while len(Dminus) > 1:
        Dminus_p = _uderiv(Dminus)
        Dminus2 = _ugcd(Dminus, Dminus_p)
        Dminus_star = _udivmod(Dminus, Dminus2)[0]
        lhs = _udivmod(_umul([-c for c in Dstar], Dminus_p), Dminus)[0]
        B, C = _ext_euclid(lhs, Dminus_star, A)
        A = _usub(C, _udivmod(_umul(_uderiv(B), Dstar), Dminus_star)[0])
        if B:
            parts.append((B, Dminus))
        Dminus = Dminus2
    return parts, A, Dstar


def _context_caps_for(a: RingElem, x: VarId):
    from .diffring import _caps_for, _join

    return _join(a.caps, _caps_for([x]))


def _var_index_of(a: RingElem, x: VarId) -> int:
    from .diffring import _var_index

    return _var_index(a.caps)[x]
