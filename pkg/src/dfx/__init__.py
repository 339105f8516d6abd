"""Numerical laboratory for the boundary Diederich-Fornaess index and the beta-worm."""

from .calculus import (
    DomainError,
    EvaluationError,
    PreconditionError,
    ScalarField,
    complex_hessian,
    exp_weighted,
    normal_field,
    normal_limit,
    tangent_field_c2,
    third_order,
    wirtinger_grad,
)
from .criterion import (
    InfeasibleError,
    PolarWeight,
    Weight,
    alpha_from_eta,
    criterion_general,
    criterion_sweep,
    criterion_worm,
    eta_from_alpha,
    sup_index_search,
)
from .domains import CATALOG, DomainSpec, WormParams, ball_defining, validate_defining, worm_defining
from .psh import check_psh_grid, df_exponent_bisect, discriminant, hessian_neg_pow, interior_sampler
from .riccati import (
    RiccatiParams,
    RiccatiSolution,
    StrictMarginBuilder,
    build_psi_radial,
    closed_form,
    comparison_check,
    integrate,
    max_alpha,
    worm_index,
)

__version__ = "0.1.0"
