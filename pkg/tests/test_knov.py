"""Fixture loading, residual checks and hierarchy generation."""

from fractions import Fraction
from importlib import resources

import pytest
from hypothesis import given
from hypothesis import strategies as st

from knv.diffring import ONE, ZERO, param, u, w
from knv.knov import (
    FixtureError,
    OperatorSet,
    Hierarchy,
    bracket_identity_instance,
    check_bidifferential,
    check_density,
    check_fraction_identity,
    check_hamiltonian_on_symmetry,
    check_recursion,
    check_skew,
    hamiltonian_residual,
    hamiltonian_root,
    load_fixtures,
    next_symmetry,
    solve_constant_span,
    validate_fixtures,
)
from knv.expr import parse
from knv.psdop import LocalOp, WnlOp, fraction_form
from knv.report import ERROR, FAIL, PASS
from knv.varcalc import IntegrationError, lie_bracket

from strategies import elems, polys

D = LocalOp.d()
H0_PAIR = (LocalOp.mult(u(1)), LocalOp.mult(u(1) ** -1).compose(D))
rationals = st.fractions(min_value=-5, max_value=5, max_denominator=4)

FX = load_fixtures()
OPS = OperatorSet.from_fixtures(FX)
GS = FX.symmetries


# -- fixtures


def test_fixture_symmetries_have_odd_orders(G):
    assert [g.diff_order() for g in G] == [1, 3, 5, 7]


def test_G1_matches_its_literal(G):
    assert G[1] == parse("u3 - 3/2*u2^2/u1 + P/u1")


def test_operator_set_invariants(ops):
    assert ops.H0.compose(WnlOp.from_local(ops.H0inv)).canonical() == WnlOp.from_local(LocalOp.mult(ONE))
    assert ops.L4.local.order == 4 and ops.L6.local.order == 6


def test_checksum_tracks_specialization(fx):
    assert len(fx.checksum) == 16
    assert load_fixtures().checksum == fx.checksum
    assert load_fixtures(p_coeffs=[0] * 5).checksum.endswith("-P0,0,0,0,0")


def test_specialized_fixtures_drop_parameters():
    fx0 = load_fixtures(p_coeffs=[1, 0, -2, 0, 3])
    assert fx0.symmetries[1] == parse("u3 - 3/2*u2^2/u1 + (1 - 2*u^2 + 3*u^4)/u1")


def test_bad_fixture_file_pinpoints_the_line(tmp_path):
    path = tmp_path / "bad.knv"
    path.write_text("version 1\nlet G0 = u1\nlet G1 = u3 +* u1\n")
    with pytest.raises(FixtureError, match="line 3"):
        load_fixtures(str(path))
    path.write_text("let G0 = u1\n")
    with pytest.raises(FixtureError, match="version"):
        load_fixtures(str(path))


def test_validate_fixtures_passes(fx):
    reports = validate_fixtures(fx)
    assert all(r.verdict == PASS for r in reports), [r.line() for r in reports if not r.passed]
    kinds = {r.check for r in reports}
    assert {"order", "commute", "fixture_term", "generate"} <= kinds
    gen = [r for r in reports if r.check == "generate"][0]
    assert gen.details["span"] == {"G0": "0", "G1": "0", "G2": "0", "G3": "1"}


def test_validate_fixtures_flags_a_corrupted_symmetry(tmp_path):
    original = resources.files("knv").joinpath("data", "fixtures.knv").read_text()
    text = original.replace("let G0 = u1", "let G0 = u1 + u2", 1)
    assert text != original
    path = tmp_path / "corrupt.knv"
    path.write_text(text)
    reports = validate_fixtures(load_fixtures(str(path)))
    first = next(r for r in reports if not r.passed)
    assert first.check == "order" and first.inputs["G"] == "G0"


# -- check examples


def test_skew_examples(ops):
    assert check_skew(ops.H0, "H0").verdict == PASS
    assert check_skew(ops.H1, "H1").verdict == PASS
    bad = check_skew(D.compose(D), "D^2")
    assert bad.verdict == FAIL and bad.residual_summary


def test_recursion_examples(ops, G):
    assert check_recursion(ops.L4, G[1]).verdict == PASS
    assert check_recursion(WnlOp.from_local(D), u(1)).verdict == PASS
    bad = check_recursion(ops.L4, u(0) ** 2)
    assert bad.verdict == FAIL and bad.residual_summary


def test_hamiltonian_examples(ops, G):
    assert check_hamiltonian_on_symmetry(ops.H0, G[0]).verdict == PASS
    assert check_hamiltonian_on_symmetry(ops.H0, G[1]).verdict == PASS
    assert check_hamiltonian_on_symmetry(ops.H0, u(0) * u(2)).verdict == FAIL


def test_hamiltonian_by_hand_for_H0_and_G0(ops):
    # X_{u1}(H0) = u2 Dinv u1 + u1 Dinv u2
    lhs = ops.H0.derive(u(1))
    assert lhs == WnlOp(LocalOp(), [(u(2), u(1)), (u(1), u(2))])


def test_fraction_identity_examples(G):
    A, B = H0_PAIR
    assert check_fraction_identity(A, B, G[0]).verdict == PASS
    assert check_fraction_identity(A, B, G[1]).verdict == PASS
    assert check_fraction_identity(D, LocalOp.mult(ONE), u(1)).verdict == PASS


def test_bidifferential_examples():
    assert check_bidifferential(*H0_PAIR).verdict == PASS
    one = LocalOp.mult(ONE)
    assert check_bidifferential(D, one).verdict == PASS
    assert check_bidifferential(LocalOp.mult(u(0)), one).verdict == FAIL


def test_probabilistic_mode_agrees(ops, G):
    r = check_hamiltonian_on_symmetry(ops.H1, G[1], mode="probabilistic", trials=20)
    assert r.verdict == PASS and r.mode == "probabilistic(20)"
    r = check_hamiltonian_on_symmetry(ops.H0, u(0) * u(2), mode="probabilistic", trials=20)
    assert r.verdict == FAIL and r.residual_summary


def test_errors_are_reported_not_raised(ops):
    r = check_recursion(ops.L4, w(1, 0))
    assert r.verdict == ERROR and "DomainError" in r.residual_summary


# -- bracket identity in literal form


@pytest.mark.parametrize("F,G", [
    (u(0), u(1)), (u(1) ** 2, u(0)), (u(2), u(0) * u(1)),
    (u(0) ** 3, u(2) / u(1)), (u(3), u(0) ** 2), (u(1) * u(2), u(0) + u(2)),
])
def test_literal_bracket_identity_holds_for_H0(F, G):
    assert bracket_identity_instance(*H0_PAIR, F, G).is_zero()


# -- hierarchy


def test_next_symmetry_from_G0(ops, G):
    # factored: H0inv(G0) = 0, so only the integration constants survive
    assert ops.H0inv.apply(G[0]).is_zero()
    assert ops.H1.apply(ZERO, [0, 0, 0]).is_zero()
    assert ops.H1.apply(ZERO, [1, 0, 0]) == G[1]
    # canonical tails normalize antiderivatives differently; the span is what matters
    for c in ([0, 0], [1, 1], [2, -3]):
        K = next_symmetry(ops.L4, G[0], c)
        assert solve_constant_span(K, [G[0], G[1], G[2]]) is not None
    assert next_symmetry(ops.L4, G[0], [0, 0]) == G[2] + Fraction(10, 9) * param("p2") * G[0]


def test_next_symmetry_from_G1_is_G3(ops, G):
    assert next_symmetry(ops.L4, G[1]) == G[3]


def test_next_symmetry_from_G2_is_new(ops, G):
    K = next_symmetry(ops.L4, G[2])
    assert K.diff_order() == 9
    assert lie_bracket(K, G[1]).is_zero()


def test_hierarchy_extend(ops, G):
    h = Hierarchy(list(G))
    K = h.extend(ops.L4, 2)
    assert len(h) == 5 and h[4] is K


def test_non_integrable_tail_raises_with_index():
    L = WnlOp(LocalOp(), [(ONE, u(3)), (ONE, u(0))])
    with pytest.raises(IntegrationError) as info:
        next_symmetry(L, u(2) ** 2, None)
    assert info.value.tail_index == 1


def test_solve_constant_span_examples(G):
    assert solve_constant_span(3 * u(1), [u(1)]) == [3]
    assert solve_constant_span(G[1] + 2 * u(1), [u(1), G[1]]) == [2, 1]
    assert solve_constant_span(u(0) ** 2, [u(1)]) is None


def test_hamiltonian_root_examples(ops, G):
    psi, ok = hamiltonian_root(G[0], ops.H0inv)
    assert psi.is_zero() and ok
    _, ok = hamiltonian_root(G[1], ops.H0inv)
    assert ok
    _, ok = hamiltonian_root(u(0) * u(2), ops.H0inv)
    assert not ok


def test_order_zero_flows_are_H0_hamiltonian(ops):
    # for E = f(u) both sides of the symmetry identity are f' H0 + H0 f'
    for E in (u(0) ** 2, u(0) ** 3):
        assert check_hamiltonian_on_symmetry(ops.H0, E).verdict == PASS
        assert hamiltonian_root(E, ops.H0inv)[1]


def test_density_checks(ops, G):
    for i in (1, 2, 3):
        assert check_density(G[i], f"G{i}", ops.H0inv).verdict == PASS
    assert check_density(u(0) * u(2), "u*u2", ops.H0inv).verdict == FAIL
    assert check_density(u(0) * u(2), "u*u2", ops.H0inv, expect=False).verdict == PASS


# -- reports


def test_reports_are_deterministic(ops, G, fx):
    a = check_hamiltonian_on_symmetry(ops.H1, G[1], checksum=fx.checksum).to_dict()
    b = check_hamiltonian_on_symmetry(ops.H1, G[1], checksum=fx.checksum).to_dict()
    a.pop("time_ms"), b.pop("time_ms")
    assert a == b


def test_failures_carry_witnesses(ops):
    for mode in ("exact", "probabilistic"):
        r = check_hamiltonian_on_symmetry(ops.H0, u(0) * u(2), mode=mode, trials=10)
        assert r.verdict == FAIL and r.residual_summary


# -- invariants


@pytest.mark.invariant
@given(polys(max_order=1, max_terms=2, with_params=False))
def test_hamiltonian_residual_is_linear_in_the_operator(E):
    a, b = param("alpha"), param("beta")
    lhs = hamiltonian_residual(OPS.H0.scale(a) + OPS.H1.scale(b), E)
    rhs = hamiltonian_residual(OPS.H0, E).scale(a) + hamiltonian_residual(OPS.H1, E).scale(b)
    assert (lhs - rhs).is_zero()


@pytest.mark.parametrize("i", [0, 1])
def test_full_pencil_residual_is_linear(ops, G, i):
    a, b, c = param("alpha"), param("beta"), param("gamma")
    lhs = hamiltonian_residual(ops.pencil(), G[i])
    rhs = (hamiltonian_residual(ops.H0, G[i]).scale(a) + hamiltonian_residual(ops.H1, G[i]).scale(b)
           + hamiltonian_residual(ops.H2, G[i]).scale(c))
    assert (lhs - rhs).is_zero()


@pytest.mark.invariant
@given(st.sampled_from([("L4", 0), ("L4", 1), ("L6", 0)]), st.lists(rationals, min_size=4, max_size=4))
def test_generated_symmetries_commute_with_the_hierarchy(case, constants):
    name, i = case
    L = getattr(OPS, name)
    K = next_symmetry(L, GS[i], constants[: len(L.tails)])
    for g in GS:
        assert lie_bracket(K, g).is_zero()


@pytest.mark.invariant
@given(elems(max_order=2, with_params=False))
def test_fraction_identity_agrees_with_hamiltonian_check(E):
    A, B = H0_PAIR
    assert check_fraction_identity(A, B, E).verdict == check_hamiltonian_on_symmetry(OPS.H0, E).verdict


def test_fraction_consistency_on_symmetries(ops, G):
    ff = fraction_form(ops.H0)
    for E in G[:3]:
        assert check_fraction_identity(ff.A, ff.B, E).verdict == PASS
        assert check_hamiltonian_on_symmetry(ops.H0, E).verdict == PASS


@pytest.mark.invariant
@given(elems(max_order=2, with_params=False), rationals)
def test_H0inv_inverts_H0_images(h, c):
    assert OPS.H0inv.apply(u(1)).is_zero()
    psi = h.total_derivative() / u(1)
    G = OPS.H0.apply(psi, [c])
    assert OPS.H0inv.apply(G) == psi
    assert (G / u(1)).total_derivative() == h.total_derivative()
