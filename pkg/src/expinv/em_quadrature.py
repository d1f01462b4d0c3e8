"""Trapezoidal rule, the Euler-Maclaurin residual identity, and the integrand
f_x(s) = exp(-x e^s + s) whose integral over the real line is 1/x.

Derivatives of f_x have the closed form

    f_x^(k)(s) = f_x(s) * sum_j c[k][j] (-x e^s)^j

with non-negative integer coefficients from a two-term recurrence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from ._numeric import adaptive_simpson, neumaier_sum
from .bernoulli import bernoulli_poly_coeffs
from .errors import CapacityError, ContractError, DomainError, NonFiniteSampleError

DERIV_LIMIT = 64
NUMERIC_DERIV_LIMIT = 12

# below this exponent exp() underflows to zero in double precision
_LOG_UNDERFLOW = -746.0

__all__ = [
    "TrapezoidSpec",
    "DerivCoeffTable",
    "EMResidualReport",
    "trapezoid",
    "fx_eval",
    "deriv_coeffs",
    "fx_derivative",
    "fx_l1_bound",
    "fx_l1_numeric",
    "em_residual",
]


@dataclass(frozen=True)
class TrapezoidSpec:
    """Interval [a, b] split into K cells of width h."""

    a: float
    b: float
    h: float
    K: int

    @classmethod
    def from_interval(cls, a, b, h):
        a, b, h = float(a), float(b), float(h)
        if not a < b:
            raise ValueError(f"need a < b, got a={a!r}, b={b!r}")
        if not h > 0:
            raise ValueError(f"step h must be positive, got {h!r}")
        q = (b - a) / h
        K = round(q)
        if K < 1 or abs(q - K) > 4 * math.ulp(max(q, 1.0)):
            raise ValueError(f"(b - a)/h = {q!r} is not an integer")
        return cls(a, b, h, K)

    def abscissa(self, j):
        return self.b if j == self.K else self.a + j * self.h


def trapezoid(g, spec):
    """Composite trapezoidal rule T_g^{[a,b],h} with compensated summation."""
    samples = []
    for j in range(spec.K + 1):
        s = spec.abscissa(j)
        v = float(g(s))
        if not math.isfinite(v):
            raise NonFiniteSampleError(s, v)
        samples.append(v)
    # (h/2) sum_j (g_j + g_{j+1}) = h * (interior + endpoints/2)
    inner = neumaier_sum([0.5 * samples[0]] + samples[1:-1] + [0.5 * samples[-1]])
    return spec.h * inner


def fx_eval(x, s):
    """exp(-x e^s + s), returning 0.0 where e^s alone would overflow."""
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    if s > 709.0:
        return 0.0
    expo = -x * math.exp(s) + s
    if expo < _LOG_UNDERFLOW:
        return 0.0
    return math.exp(expo)


@dataclass(frozen=True)
class DerivCoeffTable:
    k: int
    coeffs: tuple

    def __getitem__(self, j):
        return self.coeffs[j]


def deriv_coeffs(k):
    """Integer coefficients c[k][0..k] with c[0][0] = 1 and
    c[k+1][j] = (j+1) c[k][j] + c[k][j-1].
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > DERIV_LIMIT:
        raise CapacityError(f"k={k} exceeds the supported limit {DERIV_LIMIT}")
    row = [1]
    for _ in range(k):
        row = [
            (j + 1) * (row[j] if j < len(row) else 0) + (row[j - 1] if j >= 1 else 0)
            for j in range(len(row) + 1)
        ]
    return DerivCoeffTable(k, tuple(row))


def fx_derivative(x, s, table):
    """k-th derivative of f_x at s, k = ``table.k``."""
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    if s > 709.0:
        log_u = math.log(x) + s
        u = math.inf
    else:
        u = x * math.exp(s)
        log_u = math.log(u) if u > 0 else -math.inf
    if u <= 1.0:
        f = fx_eval(x, s)
        if f == 0.0:
            return 0.0
        acc = 0.0
        for c in reversed(table.coeffs):
            acc = acc * (-u) + float(c)
        return f * acc
    # u > 1: powers of u may overflow where the product underflows, so form
    # each term as sign * exp(log|term|) and sum those
    terms = []
    for j, c in enumerate(table.coeffs):
        if c == 0:
            continue
        logmag = math.log(c) + j * log_u - u + s
        if logmag < _LOG_UNDERFLOW:
            continue
        terms.append(math.exp(logmag) if j % 2 == 0 else -math.exp(logmag))
    if not terms:
        # signed zero carrying the sign of the dominant (highest-power) term
        return 0.0 if table.k % 2 == 0 else -0.0
    return math.fsum(terms)


def fx_l1_bound(x, k):
    """Closed-form majorant (2/x) e^k (k+1)^(2k) of the L1 norm of f_x^(k)."""
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    if k > DERIV_LIMIT:
        raise CapacityError(f"k={k} exceeds the supported limit {DERIV_LIMIT}")
    log_val = math.log(2.0) - math.log(x) + k + 2 * k * math.log(k + 1)
    if log_val > 709.78:
        return math.inf
    return math.exp(log_val)


def _sign_change_points(x, table):
    """Abscissae where f_x^(k) changes sign.

    These are s = log(u/x) for the positive real roots u of
    sum_j c[k][j] (-u)^j.
    """
    if table.k == 0:
        return []
    # the roots are simple and real (the polynomial is a scaled Touchard
    # polynomial); extra working precision keeps the cut points on the kinks
    with mpmath.workdps(40):
        high_first = [c * (-1) ** j for j, c in reversed(list(enumerate(table.coeffs)))]
        roots = mpmath.polyroots(high_first, maxsteps=200, extraprec=200)
        out = [
            float(mpmath.log(mpmath.re(r) / x))
            for r in roots
            if abs(mpmath.im(r)) < 1e-20 and mpmath.re(r) > 0
        ]
    return sorted(out)


def fx_l1_numeric(x, k, tol=1e-10):
    """Numerical L1 norm of f_x^(k) over the real line.

    The window [lo, hi] around the peak at log(1/x) is widened until
    |f_x^(k)| < tol / (hi - lo) at both ends. The window is then split at the
    sign changes of f_x^(k) and each smooth piece is integrated by adaptive
    Simpson.
    """
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    if not 0 <= k <= NUMERIC_DERIV_LIMIT:
        raise CapacityError(
            f"numeric L1 norm supports 0 <= k <= {NUMERIC_DERIV_LIMIT}, got {k}"
        )
    table = deriv_coeffs(k)
    roots = _sign_change_points(x, table)
    centre = -math.log(x)
    # start outside every sign change so an endpoint never sits on a zero
    lo = min([centre] + roots) - 1.0
    hi = max([centre] + roots) + 1.0

    coeffs = [mpmath.mpf(c * (-1) ** j) for j, c in enumerate(table.coeffs)]
    xm = mpmath.mpf(x)

    def mag(s):
        # 30 digits: the alternating sum cancels ~k digits once x e^s > 1
        with mpmath.workdps(30):
            u = xm * mpmath.exp(s)
            return float(abs(mpmath.polyval(coeffs[::-1], u) * mpmath.exp(s - u)))

    while mag(lo) >= tol / (hi - lo):
        lo -= 1.0
    while mag(hi) >= tol / (hi - lo):
        hi += 0.5
    cuts = [lo] + roots + [hi]
    # absolute tol for O(1) norms, relative tol once the norm is large
    # (it grows like k! / x, far beyond what an absolute 1e-10 can resolve)
    coarse = sum(
        abs(mag(p + (i + 0.5) * (q - p) / 16)) * (q - p) / 16
        for p, q in zip(cuts, cuts[1:])
        for i in range(16)
    )
    piece_tol = tol * max(1.0, coarse) / (len(cuts) - 1)
    parts = [adaptive_simpson(mag, p, q, tol=piece_tol) for p, q in zip(cuts, cuts[1:])]
    return neumaier_sum(parts)


@dataclass(frozen=True)
class EMResidualReport:
    integral_ref: float
    trapezoid_value: float
    periodic_term: float
    boundary_term: float
    defect: float

    @property
    def lhs(self):
        return self.integral_ref - self.trapezoid_value

    @property
    def rhs(self):
        return self.periodic_term - self.boundary_term


def em_residual(derivs, spec, N, table, integral=None, tol=1e-12):
    """Evaluate both sides of the order-N Euler-Maclaurin identity on ``spec``.

    Parameters
    ----------
    derivs : sequence of callables
        ``derivs[i]`` is the i-th derivative of g; orders 0..2N are required.
    spec : TrapezoidSpec
    N : int
        Order of the formula.
    table : BernoulliTable
        Must contain b_0..b_2N.
    integral : float, optional
        Exact value of the integral of g over [a, b]. When omitted it is
        computed by adaptive Simpson at ``tol``.

    Returns
    -------
    EMResidualReport
        ``defect`` is |(integral - T) - (periodic - boundary)|.
    """
    if N < 1:
        raise ValueError("order N must be a positive integer")
    if len(derivs) < 2 * N + 1 or any(d is None for d in derivs[: 2 * N + 1]):
        raise ContractError(
            f"order N={N} needs derivative handles for orders 0..{2 * N}, "
            f"got {len(derivs)}"
        )
    if 2 * N > table.kmax:
        raise IndexError(f"Bernoulli table too short: need {2 * N}, have {table.kmax}")
    g = derivs[0]
    g2n = derivs[2 * N]
    a, b, h, K = spec.a, spec.b, spec.h, spec.K

    if integral is None:
        integral = adaptive_simpson(g, a, b, tol=tol)
    trap = trapezoid(g, spec)

    # B_2N restricted to one period; low order so float coefficients suffice here
    coeffs = [float(c) for c in bernoulli_poly_coeffs(table, 2 * N)]
    fact = math.factorial(2 * N)

    def kernel(u):
        return np.polynomial.polynomial.polyval(u, coeffs) / fact

    cells = []
    for j in range(K):
        # on cell [j, j+1] the fractional part s - [s] is just s - j
        cells.append(
            adaptive_simpson(
                lambda s, j=j: float(kernel(s - j)) * g2n(a + s * h), j, j + 1, tol=tol / K
            )
        )
    periodic = float(h ** (2 * N + 1) * neumaier_sum(cells))

    boundary_terms = []
    for i in range(1, N + 1):
        bi = float(table[2 * i]) / math.factorial(2 * i)
        d = derivs[2 * i - 1]
        boundary_terms.append(bi * h ** (2 * i) * (d(b) - d(a)))
    boundary = neumaier_sum(boundary_terms)

    defect = float(abs((integral - trap) - (periodic - boundary)))
    return EMResidualReport(integral, trap, periodic, boundary, defect)
