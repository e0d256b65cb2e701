"""Differential rational-function ring over Q.

Elements are quotients of multivariate polynomials in symbolic parameters
(``p0..p4``, ``alpha``, ``beta``, ``gamma``) and jet variables ``u_n`` and
``w<i>_n``.  Polynomial arithmetic and gcds are delegated to FLINT
(``fmpq_mpoly``); every element is kept in lowest terms with a monic
denominator, so structural equality is mathematical equality.

Jet orders are unbounded: polynomials live in a context sized to the jets
they use and are promoted to a wider context on demand.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Optional, Union

import flint

PARAMS = ("p0", "p1", "p2", "p3", "p4", "alpha", "beta", "gamma")
_PARAM_INDEX = {name: i for i, name in enumerate(PARAMS)}

# 2^61 - 1 and two more primes above 2^61; trials cycle through them.
PRIMES = (2305843009213693951, 2305843009213693967, 2305843009213694017)

_BLOCK = 8


class DomainError(ValueError):
    """An operation was applied outside its domain."""


class EvaluationError(ArithmeticError):
    """A denominator vanished at an evaluation point."""


@dataclass(frozen=True, order=True)
class VarId:
    """Variable identifier.

    ``kind`` is 0 for parameters and 1 for jets, which makes parameters
    sort before jets.  For a parameter ``order`` is its index in
    ``PARAMS``; for a jet, ``dep`` is the dependent variable (0 is ``u``,
    ``i > 0`` is ``w<i>``) and ``order`` the derivative order.
    """

    kind: int
    dep: int
    order: int

    @classmethod
    def param(cls, name: str) -> "VarId":
        try:
            return cls(0, 0, _PARAM_INDEX[name])
        except KeyError:
            raise DomainError(f"unknown parameter {name!r}") from None

    @classmethod
    def jet(cls, order: int, dep: int = 0) -> "VarId":
        if order < 0 or dep < 0:
            raise DomainError("jet order and dependent index must be >= 0")
        return cls(1, dep, order)

    @property
    def is_param(self) -> bool:
        return self.kind == 0

    @property
    def is_jet(self) -> bool:
        return self.kind == 1

    @property
    def name(self) -> str:
        if self.kind == 0:
            return PARAMS[self.order]
        return _jet_name(self.dep, self.order)

    def shifted(self, k: int = 1) -> "VarId":
        return VarId(1, self.dep, self.order + k)

    def __repr__(self) -> str:
        return self.name


def _jet_name(dep: int, order: int) -> str:
    return f"u{order}" if dep == 0 else f"w{dep}_{order}"


def _parse_name(name: str) -> VarId:
    if name in _PARAM_INDEX:
        return VarId(0, 0, _PARAM_INDEX[name])
    if name.startswith("u"):
        return VarId(1, 0, int(name[1:]))
    dep, order = name[1:].split("_")
    return VarId(1, int(dep), int(order))


# ---------------------------------------------------------------------------
# polynomial contexts


@lru_cache(maxsize=None)
def _context(caps: tuple[int, ...]):
    names = list(PARAMS)
    for dep, cap in enumerate(caps):
        names.extend(_jet_name(dep, n) for n in range(cap))
    return flint.fmpq_mpoly_ctx.get(tuple(names), "deglex")


@lru_cache(maxsize=None)
def _index_to_var(caps: tuple[int, ...]) -> tuple[VarId, ...]:
    return tuple(_parse_name(n) for n in _context(caps).names())


@lru_cache(maxsize=None)
def _var_index(caps: tuple[int, ...]) -> dict:
    return {v: i for i, v in enumerate(_index_to_var(caps))}


def _round(n: int) -> int:
    return -(-n // _BLOCK) * _BLOCK


def _caps_for(vars_: Iterable[VarId], extra: int = 0) -> tuple[int, ...]:
    caps = [_BLOCK]
    for v in vars_:
        if v.kind == 1:
            while len(caps) <= v.dep:
                caps.append(0)
            caps[v.dep] = max(caps[v.dep], _round(v.order + 1 + extra))
    return tuple(caps)


def _join(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    if a == b:
        return a
    n = max(len(a), len(b))
    a = a + (0,) * (n - len(a))
    b = b + (0,) * (n - len(b))
    return tuple(max(x, y) for x, y in zip(a, b))


def _project(poly, src: tuple[int, ...], dst: tuple[int, ...]):
    if src == dst:
        return poly
    return poly.project_to_context(_context(dst))


# ---------------------------------------------------------------------------
# ring elements

Scalar = Union[int, Fraction]


class RingElem:
    """Immutable element of the differential field, kept in canonical form."""

    __slots__ = ("num", "den", "caps")

    def __init__(self, num, den, caps: tuple[int, ...]):
        # trusted constructor: (num, den) already canonical in context `caps`
        self.num = num
        self.den = den
        self.caps = caps

    # -- construction -----------------------------------------------------

    @classmethod
    def from_polys(cls, num, den, caps: tuple[int, ...]) -> "RingElem":
        return cls(*_normalize(num, den), caps)

    @classmethod
    def const(cls, c: Scalar) -> "RingElem":
        caps = (_BLOCK,)
        ctx = _context(caps)
        if isinstance(c, Fraction):
            value = ctx.constant(flint.fmpq(c.numerator, c.denominator))
        else:
            value = ctx.constant(flint.fmpq(c))
        return cls(value, ctx.constant(1), caps)

    @classmethod
    def var(cls, v: VarId) -> "RingElem":
        caps = _caps_for([v])
        ctx = _context(caps)
        return cls(ctx.gen(_var_index(caps)[v]), ctx.constant(1), caps)

    # -- context handling -------------------------------------------------

    def _to(self, caps: tuple[int, ...]):
        return _project(self.num, self.caps, caps), _project(self.den, self.caps, caps)

    def _widen(self, caps: tuple[int, ...]) -> "RingElem":
        if caps == self.caps:
            return self
        return RingElem(*self._to(caps), caps)

    def shrink(self) -> "RingElem":
        """Re-home the element in the smallest context that holds it."""
        caps = _caps_for(self.variables())
        if caps == self.caps:
            return self
        return RingElem(*self._to(caps), caps)

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> "RingElem":
        if isinstance(other, RingElem):
            return other
        if isinstance(other, (int, Fraction)):
            return RingElem.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        caps = _join(self.caps, other.caps)
        a, b = self._to(caps)
        c, d = other._to(caps)
        if b == d:
            return RingElem(*_normalize(a + c, b), caps)
        if b.is_one():
            return RingElem(a * d + c, d, caps)
        if d.is_one():
            return RingElem(a + c * b, b, caps)
        g = b.gcd(d)
        if g.is_one():
            return RingElem(*_normalize(a * d + c * b, b * d, trusted_den=True), caps)
        bg = b / g
        dg = d / g
        n = a * dg + c * bg
        # any common factor of n and b*dg divides g
        h = n.gcd(g)
        if not h.is_one():
            n = n / h
            bg_den = (b / h) * dg
        else:
            bg_den = b * dg
        return RingElem(*_monic(n, bg_den), caps)

    __radd__ = __add__

    def __neg__(self) -> "RingElem":
        return RingElem(-self.num, self.den, self.caps)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.num.is_zero() or other.num.is_zero():
            return ZERO
        caps = _join(self.caps, other.caps)
        a, b = self._to(caps)
        c, d = other._to(caps)
        if b.is_one() and d.is_one():
            return RingElem(a * c, b, caps)
        g1 = a.gcd(d) if not d.is_one() else None
        g2 = c.gcd(b) if not b.is_one() else None
        if g1 is not None and not g1.is_one():
            a = a / g1
            d = d / g1
        if g2 is not None and not g2.is_one():
            c = c / g2
            b = b / g2
        return RingElem(*_monic(a * c, b * d), caps)

    __rmul__ = __mul__

    def inverse(self) -> "RingElem":
        if self.num.is_zero():
            raise DomainError("division by the zero polynomial")
        return RingElem(*_monic(self.den, self.num), self.caps)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, k: int) -> "RingElem":
        if k < 0:
            return self.inverse() ** (-k)
        return RingElem(self.num ** k, self.den ** k, self.caps)

    # -- predicates -------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.num.is_one() and self.den.is_one()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def __bool__(self) -> bool:
        return not self.num.is_zero()

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        caps = _join(self.caps, other.caps)
        a, b = self._to(caps)
        c, d = other._to(caps)
        return a == c and b == d

    def __hash__(self) -> int:
        e = self.shrink()
        return hash((str(e.num), str(e.den)))

    # -- structure --------------------------------------------------------

    def variables(self) -> set[VarId]:
        idx = _index_to_var(self.caps)
        out = set()
        for poly in (self.num, self.den):
            for i, deg in enumerate(poly.degrees()):
                if deg > 0:
                    out.add(idx[i])
        return out

    def jets(self) -> set[VarId]:
        return {v for v in self.variables() if v.kind == 1}

    def is_constant(self) -> bool:
        """True when the element involves parameters only."""
        return not self.jets()

    def max_order(self, dep: int = 0) -> int:
        """Highest order of ``dep`` present, or -1."""
        orders = [v.order for v in self.variables() if v.kind == 1 and v.dep == dep]
        return max(orders, default=-1)

    # -- calculus ---------------------------------------------------------

    def partial(self, v: VarId) -> "RingElem":
        if v not in _var_index(self.caps):
            return ZERO
        i = _var_index(self.caps)[v]
        n, d = self.num, self.den
        dn = n.derivative(i)
        if d.is_constant():
            return RingElem(dn, d, self.caps) if not dn.is_zero() else ZERO
        dd = d.derivative(i)
        if dd.is_zero():
            return RingElem(*_normalize(dn, d), self.caps)
        return RingElem(*_normalize(dn * d - n * dd, d * d), self.caps)

    def total_derivative(self, k: int = 1) -> "RingElem":
        e = self
        for _ in range(k):
            e = e._d()
        return e

    def _d(self) -> "RingElem":
        jets = self.jets()
        if not jets:
            return ZERO
        caps = _join(self.caps, _caps_for(jets, extra=1))
        n, d = self._to(caps)
        ctx = _context(caps)
        index = _var_index(caps)
        gens = ctx.gens()

        def deriv(poly):
            acc = ctx.constant(0)
            for i, deg in enumerate(poly.degrees()):
                if deg > 0:
                    v = _index_to_var(caps)[i]
                    if v.kind == 1:
                        acc += poly.derivative(i) * gens[index[v.shifted()]]
            return acc

        dn = deriv(n)
        if d.is_constant():
            return RingElem(dn, d, caps)
        dd = deriv(d)
        # d/dx (n/d) = (n' d - n d') / d^2; gcd(n, d) = 1 so only factors of d cancel
        return RingElem(*_normalize(dn * d - n * dd, d * d), caps)

    def diff_order(self) -> Optional[int]:
        """Differential order in ``u``; ``None`` for parameter-only elements."""
        vs = self.variables()
        if any(v.kind == 1 and v.dep != 0 for v in vs):
            raise DomainError("differential order is defined for u-jets only")
        orders = [v.order for v in vs if v.kind == 1]
        return max(orders) if orders else None

    # -- evaluation -------------------------------------------------------

    def evaluate(self, assignment: Mapping[VarId, Scalar], modulus: Optional[int] = None):
        """Value at a point, in Q (``modulus=None``) or in GF(modulus)."""
        idx = _index_to_var(self.caps)
        used = self.variables()
        missing = used - set(assignment)
        if missing:
            raise DomainError(f"assignment misses {sorted(missing)}")
        if modulus is None:
            vals = {}
            for i, v in enumerate(idx):
                if v in used:
                    x = Fraction(assignment[v])
                    vals[i] = flint.fmpq(x.numerator, x.denominator)
            den = self.den.subs(vals) if vals else self.den
            if den.is_zero():
                raise EvaluationError("denominator vanishes at the point")
            num = self.num.subs(vals) if vals else self.num
            q = num.leading_coefficient() / den.leading_coefficient() if not num.is_zero() else 0
            return Fraction(int(q.p), int(q.q)) if q else Fraction(0)
        point = [assignment[v] % modulus if v in used else 0 for v in idx]
        den = _eval_mod(self.den, point, modulus)
        if den == 0:
            raise EvaluationError("denominator vanishes at the point")
        return _eval_mod(self.num, point, modulus) * pow(den, -1, modulus) % modulus

    # -- formatting -------------------------------------------------------

    def __str__(self) -> str:
        from .expr import format_elem

        return format_elem(self)

    def __repr__(self) -> str:
        return f"RingElem({self})"


def _eval_mod(poly, point, p: int) -> int:
    total = 0
    nz = [i for i, deg in enumerate(poly.degrees()) if deg > 0]
    for monom, coeff in poly.terms():
        t = int(coeff.p) % p
        for i in nz:
            e = monom[i]
            if e:
                t = t * pow(point[i], e, p) % p
        q = int(coeff.q)
        if q != 1:
            t = t * pow(q, -1, p) % p
        total += t
    return total % p


def _monic(num, den):
    lc = den.leading_coefficient()
    if lc != 1:
        inv = 1 / lc
        return num * inv, den * inv
    return num, den


def _normalize(num, den, trusted_den: bool = False):
    if den.is_zero():
        raise DomainError("division by the zero polynomial")
    ctx = num.context()
    if num.is_zero():
        return ctx.constant(0), ctx.constant(1)
    if den.is_constant():
        return num / den.leading_coefficient(), ctx.constant(1)
    if not trusted_den:
        g = num.gcd(den)
        if not g.is_constant():
            num = num / g
            den = den / g
    return _monic(num, den)


def normalize(num: RingElem, den: RingElem = None) -> RingElem:
    """Canonical form of ``num / den``.

    Elements are always stored canonically, so this is the identity on a
    single argument and a checked division on two.
    """
    if den is None:
        return num
    if den.is_zero():
        raise DomainError("division by the zero polynomial")
    return num / den


ZERO = RingElem.const(0)
ONE = RingElem.const(1)


# ---------------------------------------------------------------------------
# convenience constructors


def u(n: int = 0) -> RingElem:
    return RingElem.var(VarId.jet(n))


def w(dep: int, n: int = 0) -> RingElem:
    if dep < 1:
        raise DomainError("auxiliary dependents are numbered from 1")
    return RingElem.var(VarId.jet(n, dep))


def param(name: str) -> RingElem:
    return RingElem.var(VarId.param(name))


def const(c: Scalar) -> RingElem:
    return RingElem.const(c)


def as_elem(x) -> RingElem:
    if isinstance(x, RingElem):
        return x
    return RingElem.const(x)


def poly_P(coeffs: Optional[Iterable[Scalar]] = None, k: int = 0) -> RingElem:
    """The quartic ``P(u)`` or its ``k``-th ``u``-derivative.

    With ``coeffs=None`` the coefficients are the symbols ``p0..p4``;
    otherwise ``coeffs`` are the values of ``c0..c4`` (constant term first).
    """
    if coeffs is None:
        cs = [param(f"p{i}") for i in range(5)]
    else:
        cs = [const(c) for c in coeffs]
        if len(cs) != 5:
            raise DomainError("P needs exactly five coefficients")
    x = u(0)
    acc = ZERO
    for i in range(k, 5):
        fall = 1
        for j in range(k):
            fall *= i - j
        acc = acc + cs[i] * fall * x ** (i - k)
    return acc


# ---------------------------------------------------------------------------
# module-level operations


def total_derivative(e: RingElem, k: int = 1) -> RingElem:
    return e.total_derivative(k)


def partial_derivative(e: RingElem, v: VarId) -> RingElem:
    return e.partial(v)


def diff_order(e: RingElem) -> Optional[int]:
    return e.diff_order()


def evaluate(e: RingElem, assignment: Mapping[VarId, Scalar], modulus: Optional[int] = None):
    return e.evaluate(assignment, modulus)


def random_point(vars_: Iterable[VarId], rng: random.Random, modulus: int) -> dict:
    return {v: rng.randrange(1, modulus) for v in vars_}


def is_zero(e: RingElem, mode: str = "exact", trials: int = 40,
            rng: Optional[random.Random] = None, retries: int = 20) -> bool:
    """Zero test.

    ``mode="exact"`` inspects the canonical numerator.  ``"probabilistic"``
    evaluates at ``trials`` independent random points over primes above
    2^61; a nonzero value is definitive.  Points where the denominator
    vanishes are redrawn, at most ``retries`` times per trial.
    """
    if mode == "exact":
        return e.is_zero()
    if mode != "probabilistic":
        raise DomainError(f"unknown mode {mode!r}")
    rng = rng or random.Random(0x5EED)
    vs = e.variables()
    for t in range(trials):
        p = PRIMES[t % len(PRIMES)]
        for _ in range(retries + 1):
            try:
                value = e.evaluate(random_point(vs, rng, p), p)
                break
            except EvaluationError:
                continue
        else:
            raise EvaluationError("denominator vanished on every retry")
        if value:
            return False
    return True


# ---------------------------------------------------------------------------
# Taylor expansion along a jet point

_X = flint.fmpq_mpoly_ctx.get(("x",), "lex")


class JetPoint(dict):
    """Values for parameters and jets, drawn lazily from ``rng``."""

    def __init__(self, rng: random.Random, bound: int = 97):
        super().__init__()
        self.rng = rng
        self.bound = bound

    def __missing__(self, v: VarId) -> int:
        value = self.rng.randint(1, self.bound) * self.rng.choice((1, -1))
        self[v] = value
        return value


def taylor(e: RingElem, point: Mapping[VarId, int], length: int) -> Optional[list]:
    """Coefficients ``D^j(e)/j!`` for ``j < length`` at ``point``, exactly.

    The jets are replaced by the truncated series ``u_n(x) = sum point[u_{n+j}]
    x^j / j!``, which is a differential homomorphism up to the truncation
    order.  Returns ``None`` when the denominator vanishes at the point.
    """
    x = _X.gen(0)
    vals = []
    fact = 1
    for v in _index_to_var(e.caps):
        if v.kind == 0:
            vals.append(_X.constant(point[v]))
            continue
        s = _X.constant(0)
        fact = 1
        for j in range(length):
            if j:
                fact *= j
            s += flint.fmpq(point[VarId.jet(v.order + j, v.dep)], fact) * x ** j
        vals.append(s)
    num = _series(e.num.compose(*vals, ctx=_X), length)
    den = _series(e.den.compose(*vals, ctx=_X), length)
    if den[0] == 0:
        return None
    return series_div(num, den)


def _series(poly, length: int) -> list:
    out = [flint.fmpq(0)] * length
    for (k,), c in poly.terms():
        if k < length:
            out[k] = c
    return out


def series_mul(a: list, b: list) -> list:
    n = min(len(a), len(b))
    return [sum((a[i] * b[k - i] for i in range(k + 1)), flint.fmpq(0)) for k in range(n)]


def series_div(a: list, b: list) -> list:
    n = min(len(a), len(b))
    inv0 = 1 / b[0]
    out = []
    for k in range(n):
        acc = a[k] - sum((out[i] * b[k - i] for i in range(k)), flint.fmpq(0))
        out.append(acc * inv0)
    return out


def series_deriv(a: list) -> list:
    return [a[k] * k for k in range(1, len(a))]


@lru_cache(maxsize=None)
def _mod_context(caps: tuple[int, ...], p: int):
    return flint.nmod_mpoly_ctx.get(_context(caps).names(), modulus=p, ordering="deglex")


@lru_cache(maxsize=None)
def _mod_x(p: int):
    return flint.nmod_mpoly_ctx.get(("x",), modulus=p, ordering="lex")


def _to_mod(poly, caps, p: int):
    key = (id(poly), p)
    hit = _MOD_CACHE.get(key)
    if hit is not None and hit[0] is poly:
        return hit[1]
    terms = {}
    for monom, c in poly.terms():
        terms[monom] = int(c.p) % p * pow(int(c.q), -1, p) % p
    out = _mod_context(caps, p).from_dict(terms)
    if len(_MOD_CACHE) > 4096:
        _MOD_CACHE.clear()
    _MOD_CACHE[key] = (poly, out)
    return out


# id-keyed; each entry keeps its source polynomial alive so ids stay unique
_MOD_CACHE: dict = {}


def taylor_mod(e: RingElem, point: Mapping[VarId, int], length: int, p: int) -> Optional[list]:
    """``taylor`` computed modulo the prime ``p`` (``length`` must stay below ``p``)."""
    X = _mod_x(p)
    x = X.gen(0)
    vals = []
    for v in _index_to_var(e.caps):
        if v.kind == 0:
            vals.append(X.constant(point[v] % p))
            continue
        s = X.constant(0)
        inv_fact = 1
        for j in range(length):
            if j:
                inv_fact = inv_fact * pow(j, -1, p) % p
            s += X.constant(point[VarId.jet(v.order + j, v.dep)] * inv_fact % p) * x ** j
        vals.append(s)
    den = _series_mod(_to_mod(e.den, e.caps, p).compose(*vals, ctx=X), length)
    if den[0] == 0:
        return None
    num = _series_mod(_to_mod(e.num, e.caps, p).compose(*vals, ctx=X), length)
    inv0 = pow(den[0], -1, p)
    out = []
    for k in range(length):
        acc = num[k] - sum(out[i] * den[k - i] for i in range(k))
        out.append(acc % p * inv0 % p)
    return out


def _series_mod(poly, length: int) -> list:
    out = [0] * length
    for (k,), c in poly.terms():
        if k < length:
            out[k] = int(c)
    return out
