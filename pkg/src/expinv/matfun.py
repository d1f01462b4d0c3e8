"""Matrix side of the reduction: S = sum_j w_j exp(-t_j A) sandwiches A^{-1}.

Because S is a function of A it shares A's eigenvectors, so the spectral
bound (1-eps) A^{-1} <= S <= (1+eps) A^{-1} reduces to the scalar bound at
each eigenvalue. The dense Jacobi eigensolver here is the reference oracle
for that argument; ``apply_inverse_expsum`` itself only uses products with A.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._numeric import neumaier_sum_columns
from .errors import ContractError, ConvergenceError, DomainError, SpectrumError
from .expsum import eval_expsum_many

MAX_DIM = 512
MAX_SWEEPS = 100
MAX_TAYLOR_TERMS = 10_000

__all__ = [
    "SymmetricMatrix",
    "SpectralMatrix",
    "SandwichReport",
    "jacobi_eigh",
    "expm_action",
    "apply_inverse_expsum",
    "sandwich_check",
    "assemble_expsum_matrix",
    "default_per_term_tol",
]


@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    """Dense real symmetric matrix, symmetrised exactly at construction."""

    entries: np.ndarray

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] > MAX_DIM:
            raise ValueError(f"n={a.shape[0]} exceeds the dense limit {MAX_DIM}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self):
        return self.entries.shape[0]

    def frobenius(self):
        return float(np.linalg.norm(self.entries))

    def __matmul__(self, other):
        return self.entries @ other


@dataclass(frozen=True, eq=False)
class SpectralMatrix:
    base: SymmetricMatrix
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    def function(self, fvals):
        """U diag(fvals) U^T."""
        U = self.eigenvectors
        return (U * np.asarray(fvals)) @ U.T


def _as_symmetric(A):
    return A if isinstance(A, SymmetricMatrix) else SymmetricMatrix(A)


def _round_robin(n):
    """n-1 rounds of n/2 disjoint index pairs covering every pair once (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        rounds.append(
            (np.array(players[:half]), np.array(players[half:][::-1]))
        )
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(A):
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Rotations are scheduled in round-robin order so that each round applies
    n/2 disjoint (hence commuting) rotations at once. Sweeps continue until
    the largest off-diagonal magnitude is <= 1e-13 * ||A||_F.

    Returns
    -------
    SpectralMatrix
        Eigenvalues ascending, eigenvectors as orthonormal columns.
    """
    A = _as_symmetric(A)
    n = A.n
    a = np.array(A.entries)
    fro = A.frobenius()
    # pad to even size with a decoupled zero row/column
    m = n + (n % 2)
    if m != n:
        a = np.pad(a, ((0, 1), (0, 1)))
    v = np.eye(m)
    thresh = 1e-13 * fro
    rounds = _round_robin(m) if m > 1 else []
    off = np.abs(a - np.diag(np.diag(a)))
    sweeps = 0
    while m > 1 and off.max() > thresh:
        if sweeps >= MAX_SWEEPS:
            raise ConvergenceError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")
        sweeps += 1
        for p, q in rounds:
            apq = a[p, q]
            app = a[p, p]
            aqq = a[q, q]
            active = apq != 0.0
            safe = np.where(active, apq, 1.0)
            theta = (aqq - app) / (2.0 * safe)
            sgn = np.where(theta >= 0.0, 1.0, -1.0)
            t = sgn / (np.abs(theta) + np.sqrt(1.0 + theta * theta))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # A <- J^T A J, columns then rows
            ap, aq = a[:, p], a[:, q]
            a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
            ap, aq = a[p, :], a[q, :]
            a[p, :], a[q, :] = c[:, None] * ap - s[:, None] * aq, s[:, None] * ap + c[:, None] * aq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p], v[:, q]
            v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
        off = np.abs(a - np.diag(np.diag(a)))
    w = np.diag(a)[:n].copy()
    # a padded coordinate never mixes (its off-diagonal row stays zero), so
    # its eigenvector is the last unit vector and can simply be cut off
    vecs = v[:n, :n]
    order = np.argsort(w, kind="stable")
    return SpectralMatrix(A, w[order], np.ascontiguousarray(vecs[:, order]), sweeps)


def _expm_action(a, t, v, tol, scale=None, project=None):
    """exp(-t a) v by Taylor with scaling; returns (result, matvec count)."""
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t!r}")
    v = np.asarray(v, dtype=float)
    w = v.copy()
    if t == 0:
        return w, 0
    if scale is None:
        scale = np.linalg.norm(v, axis=0)
    m = max(0, math.ceil(math.log2(t))) if t > 1 else 0
    reps = 1 << m
    tau = t / reps
    # half the nominal per-step threshold: with tau*||a|| <= 1 the unsummed
    # tail is at most the last term again, so each step errs by <= tol*scale/reps
    thresh = 0.5 * tol * np.asarray(scale) / reps
    matvecs = 0
    for _ in range(reps):
        term = w
        acc = w.copy()
        for i in range(1, MAX_TAYLOR_TERMS + 1):
            term = (-tau / i) * (a @ term)
            matvecs += 1
            acc += term
            if np.all(np.linalg.norm(term, axis=0) <= thresh):
                break
        else:
            raise ConvergenceError(
                f"Taylor series for exp(-{tau:g} A) needed more than {MAX_TAYLOR_TERMS} terms"
            )
        w = acc if project is None else project(acc)
    return w, matvecs


def expm_action(A, t, v, tol=1e-12):
    """exp(-t A) v using only products with A.

    The spectrum of A must lie in [0, 1]; under that assumption the result
    is within ``tol * ||v||_2`` of the exact action. ``t`` is split into
    2^m equal steps of size <= 1 and each step is a truncated Taylor series.
    ``v`` may be a vector or an (n, k) block of vectors.
    """
    a = _as_symmetric(A).entries
    return _expm_action(a, float(t), v, tol)[0]


def default_per_term_tol(quad):
    """eps / (10 sum_j w_j): keeps the summed action error an order below eps."""
    return quad.eps / (10.0 * quad.weight_sum())


def apply_inverse_expsum(
    A,
    quad,
    v,
    per_term_tol=None,
    method="chained",
    threads=1,
    project=None,
    return_matvecs=False,
):
    """Approximate A^{-1} v as sum_j w_j exp(-t_j A) v.

    Requires delta I <= A <= I for the quadrature's delta. Each action
    exp(-t_j A) v is accurate to ``per_term_tol * ||v||``, so the total
    deviation from the exact sum is at most per_term_tol * sum_j w_j * ||v||.

    Parameters
    ----------
    method : {"chained", "independent"}
        "independent" evaluates each exp(-t_j A) v from scratch.
        "chained" walks the increasing nodes, obtaining exp(-t_j A) v from
        the previous action via exp(-(t_j - t_{j-1}) A); the step tolerance
        is per_term_tol / K so accumulated error stays within the same
        per-term bound. Total work is then proportional to t_B rather than
        to the sum of all t_j.
    threads : int
        Worker threads for the independent method. The reduction is done in
        index order, so the result does not depend on this value.
    project : callable, optional
        Applied after every exponential step (used for kernel deflation).
    """
    a = _as_symmetric(A).entries
    v = np.asarray(v, dtype=float)
    if v.shape[0] != a.shape[0]:
        raise ValueError(f"vector length {v.shape[0]} does not match n={a.shape[0]}")
    if per_term_tol is None:
        per_term_tol = default_per_term_tol(quad)
    scale = np.linalg.norm(v, axis=0)
    if not np.any(scale > 0):
        return (np.zeros_like(v), 0) if return_matvecs else np.zeros_like(v)
    if project is not None:
        v = project(v)
    nodes, weights = quad.nodes, quad.weights
    K = len(nodes)

    if method == "independent":
        def one(j):
            try:
                return _expm_action(a, nodes[j], v, per_term_tol, scale, project)
            except (ConvergenceError, DomainError) as exc:
                raise type(exc)(f"term j={quad.params.A + j}: {exc}") from exc

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(one, range(K)))
        else:
            results = [one(j) for j in range(K)]
        actions = [r[0] for r in results]
        matvecs = sum(r[1] for r in results)
    elif method == "chained":
        step_tol = per_term_tol / K
        actions = []
        matvecs = 0
        w = v
        t_prev = 0.0
        for j in range(K):
            try:
                w, count = _expm_action(a, nodes[j] - t_prev, w, step_tol, scale, project)
            except (ConvergenceError, DomainError) as exc:
                raise type(exc)(f"term j={quad.params.A + j}: {exc}") from exc
            matvecs += count
            t_prev = nodes[j]
            actions.append(w)
    else:
        raise ContractError(f"unknown method {method!r}")

    y = neumaier_sum_columns(wj * x for wj, x in zip(weights, actions))
    return (y, matvecs) if return_matvecs else y


@dataclass(frozen=True)
class SandwichReport:
    eps: float
    per_eigenvalue_ratios: np.ndarray
    min_ratio: float
    max_ratio: float
    passed: bool
    eigenvalues: np.ndarray

    @property
    def max_ratio_dev(self):
        return max(1.0 - self.min_ratio, self.max_ratio - 1.0)


def sandwich_check(A, quad, spectral=None, rel_slack=1e-12):
    """Check (1-eps) A^{-1} <= S <= (1+eps) A^{-1} eigenvalue by eigenvalue.

    Every eigenvalue must lie in [delta, 1] (up to ``rel_slack`` for
    rounding in the eigensolver); the ratios lambda_i * S(lambda_i) must
    then all lie in [1-eps, 1+eps].

    Raises
    ------
    SpectrumError
        Naming the first eigenvalue outside [delta, 1].
    """
    if spectral is None:
        spectral = jacobi_eigh(A)
    lam = spectral.eigenvalues
    lo, hi = quad.delta, 1.0
    for x in lam:
        if x < lo * (1 - rel_slack) or x > hi * (1 + rel_slack):
            raise SpectrumError(float(x), lo, hi)
    ratios = lam * eval_expsum_many(quad, lam)
    rmin, rmax = float(ratios.min()), float(ratios.max())
    eps = quad.eps
    return SandwichReport(
        eps=eps,
        per_eigenvalue_ratios=ratios,
        min_ratio=rmin,
        max_ratio=rmax,
        passed=(1 - eps) <= rmin and rmax <= (1 + eps),
        eigenvalues=lam,
    )


def assemble_expsum_matrix(spectral, quad):
    """Dense S = sum_j w_j U diag(exp(-t_j lambda)) U^T."""
    lam = spectral.eigenvalues
    return spectral.function(eval_expsum_many(quad, lam))
