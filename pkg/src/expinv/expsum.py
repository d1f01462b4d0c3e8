"""Sparse exponential sums approximating 1/x on [delta, 1].

The sum is the trapezoidal rule with step h applied to

    1/x = integral over R of exp(-x e^s + s) ds,

truncated to indices A..B:

    1/x  ~  sum_{j=A}^{B} h e^{jh} exp(-x e^{jh}).

With N = ceil(ln(24/eps)/2), h = 2 pi / (e^2 (2N+1)^2),
A = floor(-ln(3/eps)/h) and B = ceil(ln(ln(3/eps)/delta)/h) the relative
error is at most eps on all of [delta, 1]: eps/3 from discretising the full
line, and eps/3 from each dropped tail.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import mpmath
import numpy as np

from ._numeric import neumaier_sum, neumaier_sum_columns
from .errors import DomainError

__all__ = [
    "ExpSumParams",
    "ExpSumQuadrature",
    "ErrorCertificate",
    "select_params",
    "build_quadrature",
    "eval_expsum",
    "eval_expsum_many",
    "certify",
    "infinite_sum_error_probe",
    "tail_bounds",
    "tail_sums",
    "sparsity_bound",
    "step_size",
]

_DPS = 40


def _check_unit(name, value):
    if not (0.0 < value <= 1.0):
        raise DomainError(f"{name} must lie in (0, 1], got {value!r}")


@dataclass(frozen=True)
class ExpSumParams:
    """Quadrature parameters.

    ``A`` and ``B`` are the truncation indices actually used; ``A_formula``
    and ``B_formula`` are the unwidened closed-form values.
    """

    eps: float
    delta: float
    N: int
    h: float
    A: int
    B: int
    K: int
    A_formula: int
    B_formula: int

    def with_indices(self, A, B):
        """Copy with a different index window (used to study truncation)."""
        if B < A:
            raise ValueError(f"empty index window A={A}, B={B}")
        return replace(self, A=int(A), B=int(B), K=int(B) - int(A) + 1)


def step_size(eps):
    """Return (N, h) for accuracy ``eps``; h is rounded from 40-digit arithmetic."""
    with mpmath.workdps(_DPS):
        e = mpmath.mpf(eps)
        N = int(mpmath.ceil(mpmath.log(24 / e) / 2))
        h = 2 * mpmath.pi / (mpmath.e**2 * (2 * N + 1) ** 2)
        return N, float(h)


def select_params(eps, delta):
    """Parameters for a (1 +- eps) approximation of 1/x on [delta, 1].

    The closed-form A and B are each widened by one index. Extra terms only
    move the finite sum towards the infinite one, and the widening absorbs
    floor/ceil ties (at eps=0.1 the A expression is -195.993...).
    """
    _check_unit("eps", eps)
    _check_unit("delta", delta)
    N, h = step_size(eps)
    with mpmath.workdps(_DPS):
        e, d, hm = mpmath.mpf(eps), mpmath.mpf(delta), mpmath.mpf(h)
        lg = mpmath.log(3 / e)
        A0 = int(mpmath.floor(-lg / hm))
        B0 = int(mpmath.ceil(mpmath.log(lg / d) / hm))
    A, B = A0 - 1, B0 + 1
    return ExpSumParams(
        eps=float(eps),
        delta=float(delta),
        N=N,
        h=h,
        A=A,
        B=B,
        K=B - A + 1,
        A_formula=A0,
        B_formula=B0,
    )


def sparsity_bound(eps, delta):
    """Polylog ceiling e^4/(2 pi) * 1.1 * ln(24/eps)^2 * ln(3/(eps delta)) + 4 on K."""
    c = math.exp(4) / (2 * math.pi) * 1.1
    return c * math.log(24 / eps) ** 2 * math.log(3 / (eps * delta)) + 4


@dataclass(frozen=True)
class ExpSumQuadrature:
    """Nodes t_j = e^{jh} and weights w_j = h t_j for j = A..B."""

    params: ExpSumParams
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def indices(self):
        return np.arange(self.params.A, self.params.B + 1)

    @property
    def eps(self):
        return self.params.eps

    @property
    def delta(self):
        return self.params.delta

    def __len__(self):
        return len(self.nodes)

    def weight_sum(self):
        return math.fsum(self.weights)


def _exp_nodes(A, B, h):
    with mpmath.workdps(30):
        hm = mpmath.mpf(h)
        return np.array([float(mpmath.exp(j * hm)) for j in range(A, B + 1)])


def build_quadrature(params):
    """Materialise nodes and weights for ``params``."""
    t = _exp_nodes(params.A, params.B, params.h)
    return ExpSumQuadrature(params, t, params.h * t)


def _sum_terms(nodes, weights, xs):
    # ascending j: the small lower-tail terms are accumulated first
    return neumaier_sum_columns(w * np.exp(-t * xs) for t, w in zip(nodes, weights))


def eval_expsum_many(quad, xs):
    """Vectorised sum_j w_j exp(-t_j x) over an array of x."""
    xs = np.asarray(xs, dtype=float)
    if np.any(~(xs > 0)):
        raise DomainError("x must be positive")
    return _sum_terms(quad.nodes, quad.weights, xs)


def eval_expsum(quad, x):
    """sum_j w_j exp(-t_j x). Any x > 0 is accepted; the guarantee covers [delta, 1]."""
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    return float(eval_expsum_many(quad, np.array([float(x)]))[0])


@dataclass(frozen=True)
class ErrorCertificate:
    eps: float
    delta: float
    grid_size: int
    max_rel_error: float
    argmax_x: float
    passed: bool
    K: int
    method: str = "log-uniform grid on [delta, 1] (sampled, not a proof)"


def certify_grid(delta, grid_size):
    """Log-uniform grid on [delta, 1] including both endpoints exactly."""
    xs = np.exp(np.linspace(math.log(delta), 0.0, grid_size))
    xs[0] = delta
    xs[-1] = 1.0
    return xs


def certify(quad, grid_size=10_000, threads=1):
    """Max of |x S(x) - 1| over a log-uniform grid on [delta, 1].

    The grid is split into ``threads`` chunks; every grid value is computed
    independently of the split and the reduction is a max, so the
    certificate is bit-identical for any thread count.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    p = quad.params
    xs = certify_grid(p.delta, grid_size)
    threads = max(1, int(threads))
    chunks = np.array_split(xs, threads)
    if threads == 1:
        parts = [_sum_terms(quad.nodes, quad.weights, xs)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(lambda c: _sum_terms(quad.nodes, quad.weights, c), chunks)
            )
    s = np.concatenate(parts)
    r = np.abs(xs * s - 1.0)
    i = int(np.argmax(r))
    worst = float(r[i])
    return ErrorCertificate(
        eps=p.eps,
        delta=p.delta,
        grid_size=grid_size,
        max_rel_error=worst,
        argmax_x=float(xs[i]),
        passed=worst <= p.eps,
        K=p.K,
    )


def _term_values(j_lo, j_hi, h, x):
    t = _exp_nodes(j_lo, j_hi, h)
    return h * t * np.exp(-x * t)


def infinite_sum_error_probe(eps, x, slack=1e-3):
    """|x * h sum_{j in Z} e^{jh} exp(-x e^{jh}) - 1| for the step tied to ``eps``.

    The bi-infinite sum is cut where the closed-form tail majorants
    (1 - exp(-x t_A))/x and exp(-x t_B)/x drop below ``slack * eps / x``.
    Valid for every x > 0, including x > 1.
    """
    _check_unit("eps", eps)
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    _, h = step_size(eps)
    target = slack * eps
    peak = math.log(1.0 / x)
    # lower cut: 1 - exp(-x t_A) <= target, and A h left of the peak
    t_lo = -math.log1p(-target) / x
    A = math.floor(min(math.log(t_lo), peak) / h) - 1
    # upper cut: exp(-x t_B) <= target, and B h right of the peak
    t_hi = math.log(1.0 / target) / x
    B = math.ceil(max(math.log(t_hi), peak) / h) + 1
    terms = _term_values(A, B, h, x)
    total = neumaier_sum(terms.tolist())
    return abs(x * total - 1.0)


def tail_bounds(params, x):
    """Closed-form majorants of the dropped lower (j < A) and upper (j > B) tails.

    They are valid when A h <= ln(1/x) <= B h, which holds for x in
    [delta, 1].
    """
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    tA = math.exp(params.A * params.h)
    tB = math.exp(params.B * params.h)
    lower = -math.expm1(-x * tA) / x
    upper = math.exp(-x * tB) / x
    return lower, upper


def tail_sums(params, x):
    """Direct sums of the dropped terms h e^{jh} exp(-x e^{jh}) for j < A and j > B.

    The lower tail is summed until the terms fall 40 e-folds below the
    first one (remainder < 1e-17 relative); the upper tail until
    x e^{jh} > 800 (terms underflow).
    """
    h = params.h
    lo_start = params.A - math.ceil(40.0 / h)
    lower_terms = _term_values(lo_start, params.A - 1, h, x)
    hi_end = max(params.B + 1, math.ceil(math.log(800.0 / x) / h))
    upper_terms = _term_values(params.B + 1, hi_end, h, x)
    return neumaier_sum(lower_terms.tolist()), neumaier_sum(upper_terms.tolist())
