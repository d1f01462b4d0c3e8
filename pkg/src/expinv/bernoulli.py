"""Exact Bernoulli numbers, Bernoulli polynomials and the bounds built on them.

Bernoulli numbers use the convention b_1 = -1/2, i.e. they satisfy

    sum_{j=0}^{k-1} C(k, j) b_j = 0    for every k >= 2.

Everything is built with :class:`fractions.Fraction`; floats only appear
when a value leaves the module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

from .errors import CapacityError

KMAX_LIMIT = 256

__all__ = [
    "BernoulliTable",
    "BoundReport",
    "bernoulli_numbers",
    "bernoulli_poly_eval",
    "bernoulli_poly_coeffs",
    "verify_bernoulli_bound",
    "zeta_even",
    "KMAX_LIMIT",
]


@dataclass(frozen=True)
class BernoulliTable:
    """Exact rationals b_0..b_kmax."""

    kmax: int
    values: tuple

    def __getitem__(self, k):
        return self.values[k]

    def __len__(self):
        return len(self.values)

    def recursion_holds(self, k=None):
        """Check sum_{j<k} C(k,j) b_j == 0 exactly for 2 <= k <= ``k``."""
        top = self.kmax if k is None else k
        for m in range(2, top + 1):
            if sum(math.comb(m, j) * self.values[j] for j in range(m)) != 0:
                return False
        return True


@lru_cache(maxsize=None)
def _build(kmax):
    b = [Fraction(1)]
    for m in range(1, kmax + 1):
        # row k = m + 1 of the recursion, solved for b_m
        k = m + 1
        acc = sum(math.comb(k, j) * b[j] for j in range(m))
        b.append(-acc / k)
    return tuple(b)


def bernoulli_numbers(kmax):
    """Return the exact table b_0..b_kmax.

    Raises
    ------
    CapacityError
        If ``kmax`` exceeds :data:`KMAX_LIMIT`.
    """
    kmax = int(kmax)
    if kmax < 0:
        raise ValueError(f"kmax must be non-negative, got {kmax}")
    if kmax > KMAX_LIMIT:
        raise CapacityError(f"kmax={kmax} exceeds the supported limit {KMAX_LIMIT}")
    return BernoulliTable(kmax=kmax, values=_build(kmax))


def _check_k(table, k):
    if not 0 <= k <= table.kmax:
        raise IndexError(f"Bernoulli index {k} outside table range 0..{table.kmax}")


def bernoulli_poly_coeffs(table, k):
    """Exact coefficients of B_k in ascending powers of s."""
    _check_k(table, k)
    # B_k(s) = sum_j C(k,j) b_j s^(k-j): the s^p coefficient is C(k, k-p) b_{k-p}
    return tuple(math.comb(k, k - p) * table[k - p] for p in range(k + 1))


def _eval_exact(coeffs, s):
    s = Fraction(s)
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc


def bernoulli_poly_eval(table, k, s):
    """Evaluate B_k(s) for s in [0, 1].

    ``s`` is converted to the exact rational it represents and the polynomial
    is evaluated by Horner's rule in rational arithmetic, so the returned
    float is the correctly rounded value of B_k at the given abscissa.
    """
    _check_k(table, k)
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s!r} outside [0, 1]")
    return float(_eval_exact(bernoulli_poly_coeffs(table, k), s))


@dataclass(frozen=True)
class BoundReport:
    passed: bool
    kmax: int
    grid: int
    # min over (k, s) of 1 - |B_2k(s)| / |b_2k|; zero means equality (s in {0, 1})
    poly_margin: float
    # min over k of 1 - (|b_2k| / (2k)!) / (4 / (2 pi)^(2k))
    number_margin: float
    worst_k: int


def verify_bernoulli_bound(table, kmax, grid):
    """Check |B_2k(s)|/(2k)! <= |b_2k|/(2k)! <= 4/(2 pi)^(2k) on a uniform grid.

    The first inequality is checked in exact rational arithmetic at the
    float grid points; the second at 50 significant digits.
    """
    if grid < 2:
        raise ValueError("grid must be >= 2")
    if 2 * kmax > table.kmax:
        raise IndexError(f"need table.kmax >= {2 * kmax}, have {table.kmax}")
    points = [Fraction(i / (grid - 1)) for i in range(grid)]
    poly_margin = math.inf
    number_margin = math.inf
    worst_k = 0
    passed = True
    with mpmath.workdps(50):
        two_pi = 2 * mpmath.pi
        for k in range(kmax + 1):
            n = 2 * k
            fact = math.factorial(n)
            bk = abs(table[n])
            coeffs = bernoulli_poly_coeffs(table, n)
            peak = max(abs(_eval_exact(coeffs, s)) for s in points)
            gap = 1 - peak / bk
            if gap < 0:
                passed = False
            if gap < poly_margin:
                poly_margin = float(gap)
            bound = 4 / two_pi**n
            slack = 1 - mpmath.mpf(bk.numerator) / bk.denominator / fact / bound
            if slack < 0:
                passed = False
            if slack < number_margin:
                number_margin = float(slack)
                worst_k = k
    return BoundReport(passed, kmax, grid, poly_margin, number_margin, worst_k)


def zeta_even(table, k):
    """Euler's closed form zeta(2k) = (-1)^(k+1) b_2k (2 pi)^(2k) / (2 (2k)!)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    _check_k(table, 2 * k)
    b = table[2 * k]
    with mpmath.workdps(40):
        val = (
            (-1) ** (k + 1)
            * mpmath.mpf(b.numerator)
            / b.denominator
            * (2 * mpmath.pi) ** (2 * k)
            / (2 * math.factorial(2 * k))
        )
        return float(val)
