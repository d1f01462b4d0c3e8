"""Sparse exponential sums for 1/x and matrix inversion via matrix exponentials."""
from .bernoulli import bernoulli_numbers, bernoulli_poly_eval, verify_bernoulli_bound, zeta_even
from .em_quadrature import (
    TrapezoidSpec,
    deriv_coeffs,
    em_residual,
    fx_derivative,
    fx_eval,
    fx_l1_bound,
    fx_l1_numeric,
    trapezoid,
)
from .expsum import (
    build_quadrature,
    certify,
    eval_expsum,
    infinite_sum_error_probe,
    select_params,
    tail_bounds,
)
from .lapdemo import build_graph, normalized_laplacian_scaled, solve_laplacian
from .matfun import (
    SymmetricMatrix,
    apply_inverse_expsum,
    expm_action,
    jacobi_eigh,
    sandwich_check,
)

__version__ = "0.1.0"
