"""Hypothesis strategies for small ring elements and operators."""

from fractions import Fraction

from hypothesis import strategies as st

from knv.diffring import ONE, RingElem, VarId, param, u
from knv.psdop import LocalOp

small = st.integers(min_value=-4, max_value=4)
nonzero_small = small.filter(bool)


def monomial(max_order=3, max_deg=2):
    return st.tuples(
        nonzero_small,
        st.lists(st.tuples(st.integers(0, max_order), st.integers(1, max_deg)), max_size=2),
        st.booleans(),
    )


@st.composite
def polys(draw, max_order=3, max_terms=3, with_params=True):
    acc = RingElem.const(0)
    for c, factors, use_p in draw(st.lists(monomial(max_order), min_size=1, max_size=max_terms)):
        t = RingElem.const(c)
        for n, e in factors:
            t = t * u(n) ** e
        if use_p and with_params:
            t = t * param(draw(st.sampled_from(("p0", "p1", "p4", "alpha"))))
        acc = acc + t
    return acc


@st.composite
def elems(draw, max_order=3, with_params=True):
    """Rational elements whose denominators are products of jets and small polynomials."""
    num = draw(polys(max_order, with_params=with_params))
    den = ONE
    for n, e in draw(st.lists(st.tuples(st.integers(1, max_order), st.integers(1, 2)), max_size=2)):
        den = den * u(n) ** e
    if draw(st.booleans()):
        den = den * (u(draw(st.integers(0, max_order))) + draw(nonzero_small))
    return num / den


@st.composite
def local_ops(draw, max_order=2, elem_order=2):
    coeffs = {}
    for k in range(draw(st.integers(0, max_order)) + 1):
        if draw(st.booleans()):
            coeffs[k] = draw(elems(elem_order, with_params=False))
    return LocalOp(coeffs)


def jet(n):
    return VarId.jet(n)


def frac(x):
    return Fraction(x)
