import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from knv.diffring import RingElem, param, u
from knv.linalg import (
    DegenerateInput,
    constant_relations,
    rational_reconstruct,
    solve,
    span_coefficients,
)

from strategies import elems

P61 = 2305843009213693951


def test_solve_small_system():
    a = param("alpha")
    x = solve([[u(1), 1], [1, a]], [u(1) + 2, 1 + 2 * a])
    assert x == [RingElem.const(1), RingElem.const(2)]
    with pytest.raises(DegenerateInput):
        solve([[u(1), u(1)], [u(1), u(1)]], [1, 2])


def test_rational_reconstruct():
    for fr in (Fraction(3, 7), Fraction(-22, 5), Fraction(0), Fraction(123456, 789)):
        a = fr.numerator * pow(fr.denominator, -1, P61) % P61
        assert rational_reconstruct(a, P61) == fr


def test_constant_relations_with_parameters():
    a, b = param("alpha"), param("beta")
    elems_ = [u(1), u(2), a * u(1) - b * u(2), u(1) * u(2)]
    basis, rel = constant_relations(elems_)
    assert basis == [0, 1, 3]
    assert rel[2] == [a, -b, RingElem.const(0)]


def test_span_coefficients_examples(G):
    assert span_coefficients(3 * u(1), [u(1)]) == [RingElem.const(3)]
    assert span_coefficients(G[1] + 2 * u(1), [u(1), G[1]]) == [RingElem.const(2), RingElem.const(1)]
    assert span_coefficients(u(0) ** 2, [u(1)]) is None
    with pytest.raises(DegenerateInput):
        span_coefficients(u(1), [u(1), 2 * u(1)])


@pytest.mark.invariant
@given(st.lists(elems(max_order=2), min_size=1, max_size=3),
       st.lists(st.integers(-3, 3), min_size=3, max_size=3))
def test_relations_reconstruct_combinations(base, cs):
    target = RingElem.const(0)
    for c, e in zip(cs, base):
        target = target + c * e
    elems_ = base + [target]
    basis, rel = constant_relations(elems_)
    for j, coeffs in rel.items():
        acc = RingElem.const(0)
        for c, i in zip(coeffs, basis):
            acc = acc + c * elems_[i]
        assert acc == elems_[j]
    assert len(elems_) - 1 in rel or len(elems_) - 1 in basis
