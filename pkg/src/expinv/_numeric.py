"""Small numerical kernels shared by several modules."""
from __future__ import annotations

import numpy as np

from .errors import ToleranceNotMetError


def neumaier_sum(terms):
    """Compensated sum of an iterable of floats, in iteration order."""
    total = 0.0
    comp = 0.0
    for t in terms:
        s = total + t
        if abs(total) >= abs(t):
            comp += (total - s) + t
        else:
            comp += (t - s) + total
        total = s
    return total + comp


def neumaier_sum_columns(rows):
    """Elementwise compensated sum over a sequence of equal-shape arrays.

    Each output entry only depends on its own column, so the result is
    independent of how a caller splits the columns into chunks.
    """
    total = None
    comp = None
    for r in rows:
        r = np.asarray(r, dtype=float)
        if total is None:
            total = r.copy()
            comp = np.zeros_like(total)
            continue
        s = total + r
        big = np.abs(total) >= np.abs(r)
        comp += np.where(big, (total - s) + r, (r - s) + total)
        total = s
    if total is None:
        raise ValueError("empty sum")
    return total + comp


_ROUND = 64 * np.finfo(float).eps


def adaptive_simpson(f, a, b, tol=1e-12, max_depth=30, rel_floor=_ROUND):
    """Adaptive Simpson quadrature of a scalar function on [a, b].

    The local test on each piece is never tighter than ``rel_floor`` times
    the piece's own magnitude, which should match the relative accuracy to
    which ``f`` can be evaluated. Raises ToleranceNotMetError when a
    subinterval still fails the local test at ``max_depth`` levels of
    bisection.
    """
    if a == b:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    # explicit stack keeps deep refinement off the Python call stack
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    pieces = []
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - est
        # floor at the rounding level of the piece itself: cancellation noise
        # in f would otherwise keep the test failing forever
        floor = rel_floor * (abs(left) + abs(right))
        if abs(delta) <= 15.0 * max(eps, floor):
            pieces.append(left + right + delta / 15.0)
        elif depth + 1 >= max_depth:
            raise ToleranceNotMetError(
                f"adaptive Simpson did not reach tol={tol:g} on [{lo!r}, {hi!r}] "
                f"after {max_depth} levels"
            )
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    return neumaier_sum(pieces)
