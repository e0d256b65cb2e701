"""Skewness, the symbolic pencil and fraction representatives of H0, H1.

Run with ``python demos/hamiltonian_structure.py``.
"""

from knv import OperatorSet, load_fixtures
from knv.expr import format_operator
from knv.knov import check_bidifferential, check_hamiltonian_on_symmetry, check_skew, hamiltonian_root
from knv.psdop import LocalOp, fraction_form
from knv.diffring import u

fx = load_fixtures()
ops = OperatorSet.from_fixtures(fx)
G = fx.symmetries

for name in ("H0", "H1", "H2"):
    print(check_skew(getattr(ops, name), name).line())

pencil = ops.pencil()
for i in (0, 1):
    print(check_hamiltonian_on_symmetry(pencil, G[i], ("pencil", f"G{i}")).line())

# H0 = u1 Dinv u1 written as A B^-1 with local A, B
ff = fraction_form(ops.H0)
print("H0:  A =", format_operator(ff.A), "  B =", format_operator(ff.B))
A, B = LocalOp.mult(u(1)), LocalOp.mult(u(1) ** -1).compose(LocalOp.d())
print(check_bidifferential(A, B, ("u1", "u1^-1*D")).line())

ff1 = fraction_form(ops.H1)
print(f"H1:  order(A) = {ff1.A.order}, order(B) = {ff1.B.order}, right coprime: {ff1.coprime}")
print("B* kills G1, G2, u1:", all(ff1.B.adjoint().apply(q).is_zero() for q in (G[1], G[2], u(1))))

for i in (1, 2, 3):
    _, ok = hamiltonian_root(G[i], ops.H0inv)
    print(f"H0^-1(G{i}) is a variational derivative: {ok}")
