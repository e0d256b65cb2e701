"""Text syntax for ring elements and operators.

Expressions::

    expr   := ["+"|"-"] term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := base ("^" signed-integer)?
    base   := rational | symbol | "(" expr ")" | "d(" expr ("," uint)? ")"

Symbols are ``u``, ``u<n>``, ``w<i>_<n>``, ``p0``..``p4``, ``P``, ``Pu``,
``Puu``, ``Puuu``, ``Puuuu``, ``alpha``, ``beta``, ``gamma`` and any names
supplied through ``env``.  Operators additionally use ``D`` for the total
derivative and ``Dinv`` for its inverse; ``Dinv`` may only appear as
``p Dinv q`` with ``p`` and ``q`` ring elements.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .diffring import (
    PARAMS,
    DomainError,
    RingElem,
    VarId,
    as_elem,
    param,
    poly_P,
    u,
    w,
)


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.column = col


class UnknownSymbolError(ExprSyntaxError):
    pass


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9_]*)|(\S))")
_P_NAMES = {"P": 0, "Pu": 1, "Puu": 2, "Puuu": 3, "Puuuu": 4}


@dataclass
class _Tok:
    kind: str  # "num", "name", "op", "end"
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        if m.group(1):
            toks.append(_Tok("num", m.group(1), m.start(1)))
        elif m.group(2):
            toks.append(_Tok("name", m.group(2), m.start(2)))
        elif m.group(3):
            toks.append(_Tok("op", m.group(3), m.start(3)))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Dinv:
    """Marker for the inverse derivative inside an operator term."""


_DINV = _Dinv()


class _Parser:
    def __init__(self, text: str, env: Optional[Mapping] = None,
                 p_coeffs: Optional[Sequence] = None, operators: bool = False):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.env = dict(env or {})
        self.p_coeffs = p_coeffs
        self.operators = operators

    # -- helpers

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.tok
        raise ExprSyntaxError(msg, self.text, tok.pos)

    def accept(self, op: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == op:
            self.i += 1
            return True
        return False

    def expect(self, op: str):
        if not self.accept(op):
            self.error(f"expected {op!r}")

    def parse(self):
        value = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return value

    # -- grammar

    def expr(self):
        sign = 1
        if self.accept("-"):
            sign = -1
        else:
            self.accept("+")
        acc = self.term()
        if sign < 0:
            acc = _neg(acc)
        while True:
            if self.accept("+"):
                acc = _add(acc, self.term())
            elif self.accept("-"):
                acc = _add(acc, _neg(self.term()))
            else:
                return acc

    def _starts_factor(self) -> bool:
        t = self.tok
        return t.kind in ("num", "name") or (t.kind == "op" and t.text == "(")

    def term(self):
        factors = [self.factor()]
        while True:
            if self.accept("*"):
                factors.append(self.factor())
            elif self.accept("/"):
                start = self.tok
                d = self.factor()
                if not isinstance(d, RingElem):
                    self.error("only ring elements can divide", start)
                if d.is_zero():
                    raise DomainError("division by the zero polynomial")
                factors.append(d.inverse())
            elif self.operators and self._starts_factor() and (
                factors[-1] is _DINV or (self.tok.kind == "name" and self.tok.text == "Dinv")
            ):
                # juxtaposition around Dinv: "(p) Dinv (q)"
                factors.append(self.factor())
            else:
                break
        return self._combine(factors)

    def _combine(self, factors):
        if any(f is _DINV for f in factors):
            k = [i for i, f in enumerate(factors) if f is _DINV]
            if len(k) != 1:
                self.error("Dinv may appear once per term")
            left, right = factors[: k[0]], factors[k[0] + 1:]
            if not all(isinstance(f, RingElem) for f in left + right):
                self.error("Dinv is only allowed in tail position p*Dinv*q")
            p = as_elem(1)
            for f in left:
                p = p * f
            q = as_elem(1)
            for f in right:
                q = q * f
            from .psdop import WnlOp

            return WnlOp.tail(p, q)
        acc = factors[0]
        for f in factors[1:]:
            acc = _mul(acc, f)
        return acc

    def factor(self):
        start = self.tok
        if self.accept("-"):
            return _neg(self.factor())
        base = self.base()
        if self.accept("^"):
            sign = 1
            if self.accept("-"):
                sign = -1
            else:
                self.accept("+")
            if self.tok.kind != "num":
                self.error("expected integer exponent")
            k = sign * int(self.tok.text)
            self.i += 1
            if isinstance(base, RingElem):
                if k < 0 and base.is_zero():
                    raise DomainError("division by the zero polynomial")
                return base ** k
            if base is _DINV:
                self.error("Dinv cannot be raised to a power", start)
            if k < 0:
                self.error("negative powers of operators are not supported", start)
            from .psdop import LocalOp, WnlOp

            acc = WnlOp.from_local(LocalOp.identity())
            for _ in range(k):
                acc = acc.compose(_as_op(base))
            return acc
        return base

    def base(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return as_elem(int(t.text))
        if t.kind == "op" and t.text == "(":
            self.i += 1
            value = self.expr()
            self.expect(")")
            return value
        if t.kind == "name":
            self.i += 1
            name = t.text
            if name == "d" and self.tok.kind == "op" and self.tok.text == "(":
                self.i += 1
                arg = self.expr()
                k = 1
                if self.accept(","):
                    if self.tok.kind != "num":
                        self.error("expected derivative count")
                    k = int(self.tok.text)
                    self.i += 1
                self.expect(")")
                if not isinstance(arg, RingElem):
                    self.error("d() applies to ring elements", t)
                return arg.total_derivative(k)
            return self.symbol(name, t)
        self.error(f"unexpected {t.text!r}" if t.kind != "end" else "unexpected end of input")

    def symbol(self, name: str, tok: _Tok):
        if name in self.env:
            return self.env[name]
        if self.operators and name == "D":
            from .psdop import LocalOp, WnlOp

            return WnlOp.from_local(LocalOp.d())
        if self.operators and name == "Dinv":
            return _DINV
        if name in PARAMS:
            return param(name)
        if name in _P_NAMES:
            return poly_P(self.p_coeffs, _P_NAMES[name])
        m = re.fullmatch(r"u(\d*)", name)
        if m:
            return u(int(m.group(1)) if m.group(1) else 0)
        m = re.fullmatch(r"w(\d+)_(\d+)", name)
        if m and int(m.group(1)) >= 1:
            return w(int(m.group(1)), int(m.group(2)))
        raise UnknownSymbolError(f"unknown symbol {name!r}", self.text, tok.pos)


def _as_op(x):
    from .psdop import LocalOp, WnlOp

    if isinstance(x, WnlOp):
        return x
    return WnlOp.from_local(LocalOp.mult(x))


def _neg(x):
    if isinstance(x, RingElem):
        return -x
    return _as_op(x).scale(-1)


def _add(a, b):
    if isinstance(a, RingElem) and isinstance(b, RingElem):
        return a + b
    return _as_op(a) + _as_op(b)


def _mul(a, b):
    if isinstance(a, RingElem) and isinstance(b, RingElem):
        return a * b
    return _as_op(a).compose(_as_op(b))


# ---------------------------------------------------------------------------
# public entry points


def parse(text: str, env: Optional[Mapping[str, RingElem]] = None,
          p_coeffs: Optional[Sequence] = None) -> RingElem:
    """Parse a ring element.

    ``p_coeffs`` specialises ``P`` to ``c0 + c1 u + ... + c4 u^4``; by
    default its coefficients are the parameters ``p0..p4``.
    """
    value = _Parser(text, env, p_coeffs).parse()
    if not isinstance(value, RingElem):
        raise ExprSyntaxError("expected a ring element", text, 0)
    return value


def parse_operator(text: str, env: Optional[Mapping[str, RingElem]] = None,
                   p_coeffs: Optional[Sequence] = None):
    """Parse an operator literal into a canonical ``WnlOp``."""
    value = _Parser(text, env, p_coeffs, operators=True).parse()
    return _as_op(value).canonical()


def _is_sum(text: str) -> bool:
    return " + " in text or " - " in text


def format_elem(e: RingElem) -> str:
    num = str(e.num)
    if e.den.is_one():
        return num
    den = str(e.den)
    if _is_sum(num) or "/" in num:
        num = f"({num})"
    if _is_sum(den) or "*" in den or "/" in den:
        den = f"({den})"
    return f"{num}/{den}"


def format_operator(op) -> str:
    """Serialize a ``WnlOp`` (or ``LocalOp``) in the operator literal syntax."""
    from .psdop import LocalOp

    local = op if isinstance(op, LocalOp) else op.local
    tails = () if isinstance(op, LocalOp) else op.tails
    parts = []
    for k, c in sorted(local.coeffs.items(), reverse=True):
        parts.append(f"({format_elem(c)})*D^{k}")
    for p, q in tails:
        parts.append(f"({format_elem(p)}) Dinv ({format_elem(q)})")
    return " + ".join(parts) if parts else "0"


def parse_scalar_list(text: str) -> list[Fraction]:
    return [Fraction(s.strip()) for s in text.split(",") if s.strip()]


def variable(name: str) -> VarId:
    """``VarId`` for a symbol name such as ``u3``, ``w1_0`` or ``alpha``."""
    e = parse(name)
    vs = e.variables()
    if len(vs) != 1 or e != RingElem.var(next(iter(vs))):
        raise DomainError(f"{name!r} is not a variable")
    return next(iter(vs))
