"""Exact differential algebra for the Krichever-Novikov hierarchy.

The package is layered: ``diffring`` (rational functions of jets),
``varcalc`` (Frechet derivatives, Euler operator, brackets, inverse total
derivative), ``psdop`` (local and weakly non-local operators), ``knov``
(fixtures and identity checks) and ``cli``.
"""

from .diffring import (
    ONE,
    ZERO,
    DomainError,
    EvaluationError,
    RingElem,
    VarId,
    diff_order,
    evaluate,
    is_zero,
    param,
    partial_derivative,
    poly_P,
    total_derivative,
    u,
    w,
)
from .expr import ExprSyntaxError, UnknownSymbolError, format_elem, format_operator, parse, parse_operator
from .knov import (
    Fixtures,
    Hierarchy,
    OperatorSet,
    check_bidifferential,
    check_commute,
    check_fraction_identity,
    check_hamiltonian_on_symmetry,
    check_recursion,
    check_skew,
    hamiltonian_root,
    load_fixtures,
    next_symmetry,
    solve_constant_span,
    validate_fixtures,
)
from .linalg import DegenerateInput
from .psdop import (
    LocalOp,
    NonIntegrableTailProduct,
    WnlOp,
    adjoint,
    apply,
    canonicalize,
    compose,
    derive_op,
    fraction_form,
    right_divide,
    right_gcd,
    right_unit_equivalent,
    wronskian_denominator,
)
from .report import Report
from .varcalc import (
    EvolGen,
    IntegrationError,
    NotATotalDerivative,
    Obstruction,
    evol_apply,
    frechet,
    integrate_total_derivative,
    is_variational,
    lie_bracket,
    op_frechet,
    variational_derivative,
)

__version__ = "0.1.0"
