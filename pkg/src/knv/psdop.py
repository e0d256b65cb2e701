"""Local and weakly non-local differential operators.

A ``LocalOp`` is a finite sum ``sum c_k D^k`` with coefficients in the
differential field.  A ``WnlOp`` adds finitely many tails ``p Dinv q``.
Products are reduced immediately back to that shape; a product of two
tails needs an antiderivative of ``q * r`` inside the ring and fails with
``NonIntegrableTailProduct`` otherwise.
"""

from __future__ import annotations

import random
import warnings
from math import comb
from typing import Callable, Iterable, Optional, Sequence, Union

import flint

from .diffring import (
    ONE,
    ZERO,
    DomainError,
    JetPoint,
    RingElem,
    as_elem,
    series_deriv,
    series_div,
    series_mul,
    taylor,
)
from .linalg import DegenerateInput, constant_relations, solve

Coeff = Union[RingElem, int]


class NonIntegrableTailProduct(ArithmeticError):
    def __init__(self, product: RingElem, cause: Exception):
        super().__init__(f"tail product is not integrable: {cause}")
        self.product = product
        self.cause = cause


def _derivatives(e: RingElem, n: int) -> list[RingElem]:
    out = [e]
    for _ in range(n):
        out.append(out[-1].total_derivative())
    return out


def _add_into(acc: dict, k: int, c: RingElem):
    if c.is_zero():
        return
    if k in acc:
        s = acc[k] + c
        if s.is_zero():
            del acc[k]
        else:
            acc[k] = s
    else:
        acc[k] = c


class LocalOp:
    """Differential operator ``sum c_k D^k`` with sparse coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Optional[dict] = None):
        self.coeffs = {k: as_elem(c) for k, c in (coeffs or {}).items()
                       if not as_elem(c).is_zero()}

    # -- constructors

    @classmethod
    def identity(cls) -> "LocalOp":
        return cls({0: ONE})

    @classmethod
    def d(cls, k: int = 1) -> "LocalOp":
        return cls({k: ONE})

    @classmethod
    def mult(cls, c: Coeff) -> "LocalOp":
        return cls({0: as_elem(c)})

    # -- structure

    @property
    def order(self) -> int:
        """Highest power of ``D``; -1 for the zero operator."""
        return max(self.coeffs, default=-1)

    def coefficient(self, k: int) -> RingElem:
        return self.coeffs.get(k, ZERO)

    @property
    def leading_coefficient(self) -> RingElem:
        return self.coeffs[self.order] if self.coeffs else ZERO

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other) -> bool:
        if isinstance(other, WnlOp):
            return other == self
        if not isinstance(other, LocalOp):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __repr__(self) -> str:
        from .expr import format_operator

        return f"LocalOp({format_operator(self)})"

    # -- linear structure

    def __add__(self, other):
        if isinstance(other, WnlOp):
            return WnlOp.from_local(self) + other
        if not isinstance(other, LocalOp):
            return NotImplemented
        acc = dict(self.coeffs)
        for k, c in other.coeffs.items():
            _add_into(acc, k, c)
        return LocalOp(acc)

    def __neg__(self) -> "LocalOp":
        return LocalOp({k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: Coeff) -> "LocalOp":
        """Left multiplication by ``c``."""
        c = as_elem(c)
        return LocalOp({k: c * a for k, a in self.coeffs.items()})

    # -- algebra

    def compose(self, other):
        if isinstance(other, WnlOp):
            return WnlOp.from_local(self).compose(other)
        acc: dict = {}
        if not self.coeffs or not other.coeffs:
            return LocalOp()
        top = self.order
        ders = {j: _derivatives(b, top) for j, b in other.coeffs.items()}
        for i, a in self.coeffs.items():
            for j, bd in ders.items():
                for s in range(i + 1):
                    t = bd[s]
                    if t.is_zero():
                        continue
                    _add_into(acc, i - s + j, a * t * comb(i, s))
        return LocalOp(acc)

    def __matmul__(self, other):
        return self.compose(other)

    def apply(self, f: Coeff) -> RingElem:
        f = as_elem(f)
        if not self.coeffs:
            return ZERO
        ders = _derivatives(f, self.order)
        acc = ZERO
        for k, c in self.coeffs.items():
            if not ders[k].is_zero():
                acc = acc + c * ders[k]
        return acc

    def __call__(self, f: Coeff) -> RingElem:
        return self.apply(f)

    def adjoint(self) -> "LocalOp":
        acc: dict = {}
        for k, c in self.coeffs.items():
            ders = _derivatives(c, k)
            sign = -1 if k % 2 else 1
            for i in range(k + 1):
                _add_into(acc, k - i, ders[i] * (sign * comb(k, i)))
        return LocalOp(acc)

    def map_coeffs(self, fn: Callable[[RingElem], RingElem]) -> "LocalOp":
        return LocalOp({k: fn(c) for k, c in self.coeffs.items()})

    def derive(self, X) -> "LocalOp":
        """Apply an evolutionary derivation to every coefficient."""
        from .varcalc import evol_apply

        return self.map_coeffs(lambda c: evol_apply(X, c))

    def to_wnl(self) -> "WnlOp":
        return WnlOp.from_local(self)


class WnlOp:
    """Weakly non-local operator ``local + sum p_i Dinv q_i``."""

    __slots__ = ("local", "tails")

    def __init__(self, local: Optional[LocalOp] = None,
                 tails: Iterable[tuple[RingElem, RingElem]] = ()):
        self.local = local if local is not None else LocalOp()
        self.tails = tuple((as_elem(p), as_elem(q)) for p, q in tails)

    @classmethod
    def from_local(cls, local: LocalOp) -> "WnlOp":
        return cls(local, ())

    @classmethod
    def tail(cls, p: Coeff, q: Coeff) -> "WnlOp":
        return cls(LocalOp(), [(as_elem(p), as_elem(q))])

    # -- structure

    @property
    def order(self) -> int:
        return self.local.order

    def is_local(self) -> bool:
        return not self.canonical().tails

    def is_zero(self) -> bool:
        c = self.canonical()
        return c.local.is_zero() and not c.tails

    def __eq__(self, other) -> bool:
        if isinstance(other, LocalOp):
            other = WnlOp.from_local(other)
        if not isinstance(other, WnlOp):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __repr__(self) -> str:
        from .expr import format_operator

        return f"WnlOp({format_operator(self)})"

    # -- linear structure

    def __add__(self, other):
        if isinstance(other, LocalOp):
            other = WnlOp.from_local(other)
        if not isinstance(other, WnlOp):
            return NotImplemented
        return WnlOp(self.local + other.local, self.tails + other.tails)

    __radd__ = __add__

    def __neg__(self) -> "WnlOp":
        return WnlOp(-self.local, [(-p, q) for p, q in self.tails])

    def __sub__(self, other):
        if isinstance(other, LocalOp):
            other = WnlOp.from_local(other)
        return self + (-other)

    def scale(self, c: Coeff) -> "WnlOp":
        """Left multiplication by ``c``."""
        c = as_elem(c)
        return WnlOp(self.local.scale(c), [(c * p, q) for p, q in self.tails])

    # -- algebra

    def compose(self, other) -> "WnlOp":
        if isinstance(other, LocalOp):
            other = WnlOp.from_local(other)
        A, B = self.local, other.local
        local = A.compose(B)
        tails = []
        # A o r Dinv s: (A o r) = C, C o Dinv = sum_{m>=1} c_m D^{m-1} + c_0 Dinv
        for r, s in other.tails:
            C = A.compose(LocalOp.mult(r))
            shifted = LocalOp({m - 1: c for m, c in C.coeffs.items() if m >= 1})
            local = local + shifted.compose(LocalOp.mult(s))
            if C.coefficient(0):
                tails.append((C.coefficient(0), s))
        # p Dinv q o B: Dinv o e D^l = sum_{i<l} (-1)^i e^(i) D^(l-1-i) + (-1)^l Dinv e^(l)
        for p, q in self.tails:
            if B.is_zero():
                continue
            part: dict = {}
            q_tail = ZERO
            for l, b in B.coeffs.items():
                e = q * b
                ders = _derivatives(e, l)
                for i in range(l):
                    _add_into(part, l - 1 - i, ders[i] * (-1 if i % 2 else 1))
                q_tail = q_tail + (ders[l] if l % 2 == 0 else -ders[l])
            local = local + LocalOp(part).scale(p)
            if q_tail:
                tails.append((p, q_tail))
        # p Dinv q o r Dinv s = p h Dinv s - p Dinv h s with D(h) = q r
        if self.tails and other.tails:
            from .varcalc import IntegrationError, integrate_total_derivative

            for p, q in self.tails:
                for r, s in other.tails:
                    qr = q * r
                    if qr.is_zero():
                        continue
                    try:
                        h = integrate_total_derivative(qr)
                    except IntegrationError as exc:
                        raise NonIntegrableTailProduct(qr, exc) from exc
                    if h:
                        tails.append((p * h, s))
                        tails.append((-p, h * s))
        return WnlOp(local, tails).canonical()

    def __matmul__(self, other):
        return self.compose(other)

    def adjoint(self) -> "WnlOp":
        return WnlOp(self.local.adjoint(), [(-q, p) for p, q in self.tails]).canonical()

    def derive(self, X) -> "WnlOp":
        from .varcalc import evol_apply

        tails = []
        for p, q in self.tails:
            tails.append((evol_apply(X, p), q))
            tails.append((p, evol_apply(X, q)))
        return WnlOp(self.local.derive(X), tails).canonical()

    def apply(self, f: Coeff, constants: Optional[Sequence] = None) -> RingElem:
        """Apply to ``f``; ``constants[i]`` is the integration constant of tail ``i``."""
        from .varcalc import IntegrationError, integrate_total_derivative

        f = as_elem(f)
        constants = list(constants) if constants is not None else [0] * len(self.tails)
        if len(constants) != len(self.tails):
            raise DomainError(f"need {len(self.tails)} integration constants")
        acc = self.local.apply(f)
        for i, ((p, q), c) in enumerate(zip(self.tails, constants)):
            qf = q * f
            try:
                h = integrate_total_derivative(qf) if qf else ZERO
            except IntegrationError as exc:
                exc.tail_index = i
                raise
            acc = acc + p * (h + as_elem(c))
        return acc

    def __call__(self, f: Coeff, constants: Optional[Sequence] = None) -> RingElem:
        return self.apply(f, constants)

    def canonical(self) -> "WnlOp":
        return WnlOp(self.local, _reduce_tails(self.tails)) if self.tails else self


def _reduce_tails(tails) -> tuple:
    tails = [(p, q) for p, q in tails if p and q]
    while tails:
        changed = False
        for side in (1, 0):
            vecs = [t[side] for t in tails]
            basis, rel = constant_relations(vecs)
            if not rel:
                continue
            merged = {b: tails[b][1 - side] for b in basis}
            for j, coeffs in rel.items():
                other = tails[j][1 - side]
                for c, b in zip(coeffs, basis):
                    if c:
                        merged[b] = merged[b] + c * other
            new = []
            for b in basis:
                if merged[b]:
                    new.append((merged[b], tails[b][1]) if side == 1 else (tails[b][0], merged[b]))
            tails = new
            changed = True
        if not changed:
            break
    return tuple(tails)


# ---------------------------------------------------------------------------
# module-level operations


def _as_wnl(L) -> WnlOp:
    if isinstance(L, LocalOp):
        return WnlOp.from_local(L)
    return L


def compose(L, M) -> WnlOp:
    return _as_wnl(L).compose(M)


def adjoint(L):
    return L.adjoint()


def canonicalize(L) -> WnlOp:
    return _as_wnl(L).canonical()


def apply(L, f: Coeff, constants: Optional[Sequence] = None) -> RingElem:
    if isinstance(L, LocalOp):
        if constants:
            raise DomainError("a local operator takes no integration constants")
        return L.apply(f)
    return L.apply(f, constants)


def derive_op(X, L):
    return L.derive(X)


def right_divide(A: LocalOp, B: LocalOp) -> tuple[LocalOp, LocalOp]:
    """``(Q, R)`` with ``A = Q o B + R`` and ``order(R) < order(B)``."""
    if B.is_zero():
        raise DomainError("division by the zero operator")
    m = B.order
    lc_inv = B.leading_coefficient.inverse()
    Q = LocalOp()
    R = A
    while R.order >= m:
        k = R.order - m
        t = LocalOp({k: R.leading_coefficient * lc_inv})
        Q = Q + t
        R = R - t.compose(B)
    return Q, R


def monic(A: LocalOp) -> LocalOp:
    return A.scale(A.leading_coefficient.inverse())


def right_gcd(A: LocalOp, B: LocalOp) -> LocalOp:
    """Monic generator of the left ideal generated by ``A`` and ``B``."""
    if A.is_zero() and B.is_zero():
        raise DomainError("right_gcd of two zero operators")
    while not B.is_zero():
        if B.order == 0:
            return LocalOp.identity()
        if B.order == 1 and _first_order_remainder_nonzero(A, B):
            return LocalOp.identity()
        _, R = right_divide(A, B)
        A, B = B, R
    return monic(A)


def _first_order_remainder_nonzero(A: LocalOp, B: LocalOp, attempts: int = 3) -> bool:
    """True if ``A mod B`` is certainly nonzero for ``B`` of order one.

    Modulo ``D + s`` every ``D^k`` reduces to the function ``phi_k`` with
    ``phi_0 = 1`` and ``phi_{k+1} = phi_k' - s phi_k``.  The remainder is
    expanded as a Taylor series at random jet points; a nonzero constant
    term proves it nonzero.  ``False`` only means no proof was found.
    """
    n = A.order
    rng = random.Random(0x6CD)
    for _ in range(attempts):
        pt = JetPoint(rng)
        s_num = taylor(B.coefficient(0), pt, n + 1)
        s_den = taylor(B.coefficient(1), pt, n + 1)
        a = {k: taylor(c, pt, 1) for k, c in A.coeffs.items()}
        if s_num is None or s_den is None or s_den[0] == 0 or any(v is None for v in a.values()):
            continue
        s = series_div(s_num, s_den)
        phi = [flint.fmpq(1)] + [flint.fmpq(0)] * n
        value = flint.fmpq(0)
        for k in range(n + 1):
            if k in a:
                value += a[k][0] * phi[0]
            phi = [d - e for d, e in zip(series_deriv(phi), series_mul(s, phi))]
        if value != 0:
            return True
    return False


def _det(rows: list) -> RingElem:
    if len(rows) == 1:
        return rows[0][0]
    acc = ZERO
    for j, a in enumerate(rows[0]):
        if a.is_zero():
            continue
        t = a * _det([r[:j] + r[j + 1:] for r in rows[1:]])
        acc = acc + (-t if j % 2 else t)
    return acc


def wronskian_denominator(qs: Sequence[RingElem], normalize: str = "monic") -> LocalOp:
    """Local ``B`` of order ``len(qs)`` whose adjoint kills every ``q``.

    ``normalize="monic"`` makes the adjoint monic.  ``"wronskian"`` makes
    the adjoint the determinant operator ``f -> W(q_1, ..., q_m, f)``,
    which avoids dividing by the Wronskian and stays small for large ``m``.
    """
    qs = [as_elem(q) for q in qs]
    m = len(qs)
    if m == 0:
        return LocalOp.identity()
    if normalize not in ("monic", "wronskian"):
        raise DomainError(f"unknown normalization {normalize!r}")
    basis, rel = constant_relations(qs)
    if rel:
        raise DegenerateInput("tail densities are linearly dependent")
    ders = [_derivatives(q, m) for q in qs]
    if normalize == "wronskian":
        coeffs = {}
        for k in range(m + 1):
            minor = [[ders[i][r] for i in range(m)] for r in range(m + 1) if r != k]
            c = _det(minor)
            coeffs[k] = c if (k + m) % 2 == 0 else -c
        return LocalOp(coeffs).adjoint()
    # B* = D^m + sum_{k<m} b_k D^k with sum_k b_k q^(k) = -q^(m)
    matrix = [[ders[i][k] for k in range(m)] for i in range(m)]
    rhs = [-ders[i][m] for i in range(m)]
    b = solve(matrix, rhs)
    Bstar = LocalOp({**{k: b[k] for k in range(m)}, m: ONE})
    return Bstar.adjoint()


class FractionForm:
    """``L = A o B^-1`` with the right gcd of ``A`` and ``B`` recorded."""

    def __init__(self, A: LocalOp, B: LocalOp, gcd: LocalOp):
        self.A = A
        self.B = B
        self.gcd = gcd

    @property
    def coprime(self) -> bool:
        return self.gcd.order == 0

    def __iter__(self):
        return iter((self.A, self.B))


def fraction_form(L, normalize: str = "wronskian") -> FractionForm:
    """``L = A o B^-1`` with ``B`` built from the tail densities of ``L``."""
    L = canonicalize(L)
    B = wronskian_denominator([q for _, q in L.tails], normalize)
    AB = L.compose(B)
    if AB.tails:
        raise DomainError("L o B kept a non-local tail")
    A = AB.local
    g = right_gcd(A, B)
    if g.order > 0:
        warnings.warn("fraction representative is not right coprime", stacklevel=2)
    return FractionForm(A, B, g)


def right_unit_equivalent(pair1, pair2) -> bool:
    """True when ``pair1 = (A2 U, B2 U)`` for some invertible order-0 ``U``."""
    A1, B1 = pair1
    A2, B2 = pair2
    if A1.order != A2.order or B1.order != B2.order:
        return False
    ref, target = (A2, A1) if not A2.is_zero() else (B2, B1)
    if ref.is_zero():
        return True
    # the leading coefficient of A2 o U is lc(A2) * U
    U = LocalOp.mult(target.leading_coefficient / ref.leading_coefficient)
    if U.is_zero():
        return False
    return A2.compose(U) == A1 and B2.compose(U) == B1
