"""Walk up the Krichever-Novikov hierarchy with the order-4 recursion operator.

Run with ``python demos/hierarchy_walkthrough.py``.
"""

from knv import OperatorSet, lie_bracket, load_fixtures, next_symmetry, solve_constant_span
from knv.expr import format_elem

fx = load_fixtures()
ops = OperatorSet.from_fixtures(fx)
G = list(fx.symmetries)

print("fixture checksum:", fx.checksum)
for i, g in enumerate(G):
    print(f"G{i} has differential order {g.diff_order()}")

# the stored flows commute pairwise
for i in range(len(G)):
    for j in range(i + 1, len(G)):
        assert lie_bracket(G[i], G[j]).is_zero()
print("all stored flows commute")

# L4 lifts G1 to G3, up to lower flows
K = next_symmetry(ops.L4, G[1])
coeffs = solve_constant_span(K, G)
print("L4(G1) =", " + ".join(f"({format_elem(c)})*G{i}" for i, c in enumerate(coeffs) if not c.is_zero()))

# one step further: a new flow of order 9
G4 = next_symmetry(ops.L4, G[2])
print("L4(G2) has order", G4.diff_order())
print("commutes with G0..G3:", all(lie_bracket(G4, g).is_zero() for g in G))

# integration constants add lower flows
shifted = next_symmetry(ops.L4, G[2], [1, -2])
print("with constants (1, -2):", [format_elem(c) for c in solve_constant_span(shifted - G4, G[:3])])
