"""Acceptance suite: one test and one PASS/FAIL summary line per criterion.

Run with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
"""
import math
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from expinv.bernoulli import bernoulli_numbers, verify_bernoulli_bound, zeta_even
from expinv.cli import main as cli_main
from expinv.cli import monomial_derivs, monomial_integral
from expinv.em_quadrature import (
    TrapezoidSpec,
    deriv_coeffs,
    em_residual,
    fx_derivative,
    fx_eval,
    fx_l1_bound,
    fx_l1_numeric,
)
from expinv.expsum import (
    build_quadrature,
    certify,
    infinite_sum_error_probe,
    select_params,
    sparsity_bound,
    tail_bounds,
    tail_sums,
)
from expinv.lapdemo import oracle_solve, parse_graph_spec, solve_laplacian
from expinv.matfun import assemble_expsum_matrix, jacobi_eigh, sandwich_check

pytestmark = pytest.mark.acceptance

PAIRS = [(e, d) for e in (1.0, 0.1, 0.01) for d in (0.1, 0.01, 0.001)]


def record(n, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n:>2}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_01_scalar_guarantee():
    worst, slowest, ok = 0.0, 0.0, True
    for eps, delta in PAIRS:
        t0 = time.perf_counter()
        c = certify(build_quadrature(select_params(eps, delta)), 10_000)
        dt = time.perf_counter() - t0
        slowest = max(slowest, dt)
        worst = max(worst, c.max_rel_error / eps)
        ok &= c.passed and c.max_rel_error <= eps and dt < 5.0
    record(1, "certify max rel error <= eps, 9 pairs", ok,
           f"worst err/eps={worst:.4f}, slowest pair {slowest:.2f}s (<5s)")
    assert ok


def test_criterion_02_sparsity():
    ok, rows = True, []
    for eps, delta in PAIRS:
        p = select_params(eps, delta)
        bound = sparsity_bound(eps, delta)
        ok &= p.K == p.B_formula - p.A_formula + 3 and p.K <= bound
        rows.append(p.K / bound)
    k535 = select_params(0.1, 0.01).K
    ok &= k535 == 535
    record(2, "K = B-A+3 and K <= polylog ceiling", ok,
           f"K(0.1,0.01)={k535}, max K/bound={max(rows):.3f}")
    assert ok


def test_criterion_03_infinite_sum():
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for eps in (0.1, 0.01):
        for x in (0.02, 0.3, 1.0, 5.0):
            v = infinite_sum_error_probe(eps, x)
            ok &= v <= eps / 3 + 2e-3 * eps
            worst = max(worst, v / eps)
    dt = time.perf_counter() - t0
    ok &= dt < 2.0
    record(3, "infinite-sum probe <= eps/3 + 2e-3 eps", ok,
           f"worst probe/eps={worst:.2e}, {dt:.2f}s (<2s)")
    assert ok


def test_criterion_04_tails():
    ok = True
    for eps, delta in PAIRS:
        p = select_params(eps, delta)
        for x in (delta, 1.0):
            lo, hi = tail_sums(p, x)
            blo, bhi = tail_bounds(p, x)
            ok &= lo <= blo and hi <= bhi
            ok &= blo <= eps / 3 / x and bhi <= eps / 3 / x
    record(4, "summed tails <= majorants <= (eps/3)/x", ok, "9 pairs x {delta, 1}")
    assert ok


def test_criterion_05_euler_maclaurin():
    table = bernoulli_numbers(6)
    worst, ok = 0.0, True
    for N in (1, 2, 3):
        for a, b in ((0.0, 1.0), (0.0, 2.0)):
            for h in (1.0, 0.5):
                spec = TrapezoidSpec.from_interval(a, b, h)
                for d in range(2 * N):
                    rep = em_residual(
                        monomial_derivs(d, 2 * N), spec, N, table,
                        integral=monomial_integral(d, a, b),
                    )
                    worst = max(worst, rep.defect)
    ok = worst <= 1e-10
    record(5, "EM defect <= 1e-10 on monomials", ok, f"worst defect={worst:.2e}")
    assert ok


def _truncated_zeta(p, terms=10**6):
    j = np.arange(terms, 0, -1, dtype=float)
    return math.fsum(j ** (-p))


def _zeta_gaps():
    table = bernoulli_numbers(16)
    return {k: abs(zeta_even(table, k) - _truncated_zeta(2 * k)) for k in range(1, 9)}


def test_criterion_06_bernoulli():
    table = bernoulli_numbers(256)
    bound_ok = verify_bernoulli_bound(table, 12, 1001).passed
    rec_ok = table.recursion_holds()
    gaps = _zeta_gaps()
    # a 10^6-term partial sum of zeta(2) is itself 1e-6 short, so k=1 is
    # compared against the partial sum plus its integral tail bracket
    n = 10**6
    s1 = _truncated_zeta(2)
    z1 = zeta_even(table, 1)
    bracket_ok = s1 + 1 / (n + 1) - 1e-10 <= z1 <= s1 + 1 / n + 1e-10
    high_ok = all(gaps[k] <= 1e-10 for k in range(2, 9))
    literal_ok = gaps[1] <= 1e-10
    record(6, "Bernoulli bound k<=12, zeta vs 1e6-term series, recursion to 256",
           bound_ok and rec_ok and high_ok and literal_ok,
           f"bound={bound_ok}, recursion={rec_ok}, k=2..8 max gap={max(gaps[k] for k in range(2, 9)):.1e}; "
           f"k=1 gap={gaps[1]:.2e} > 1e-10 (series truncation error ~1/n), "
           f"tail-bracketed k=1 ok={bracket_ok}")
    # everything that is attainable is asserted here; the literal k=1
    # comparison is kept as a strict xfail below
    assert bound_ok and rec_ok and high_ok and bracket_ok


@pytest.mark.xfail(strict=True, reason="10^6-term partial sum of zeta(2) is ~1e-6 below zeta(2)")
def test_criterion_06_literal_k1_series_check():
    assert _zeta_gaps()[1] <= 1e-10


def _richardson(x, s, k):
    h = 10 ** (-8 / (k + 1))

    def central(h):
        return sum(
            (-1) ** i * math.comb(k, i) * fx_eval(x, s + (k / 2 - i) * h) for i in range(k + 1)
        ) / h**k

    return (4 * central(h / 2) - central(h)) / 3


def test_criterion_07_derivatives():
    coeff_ok = all(sum(deriv_coeffs(k).coeffs) <= (k + 1) ** (k + 1) for k in range(65))
    worst_fd = 0.0
    fd_ok = True
    for k in range(7):
        t = deriv_coeffs(k)
        for x in (0.1, 0.5, 1.0):
            for s in (-2.0, 0.0, 1.0):
                exact = fx_derivative(x, s, t)
                err = abs(_richardson(x, s, k) - exact)
                # exact zeros (k=1, x=1, s=0) leave only rounding noise
                fd_ok &= err <= 0.01 * abs(exact) + 1e-9
                if exact != 0:
                    worst_fd = max(worst_fd, err / abs(exact))
    l1_ok = all(
        fx_l1_numeric(x, k, 1e-10) <= fx_l1_bound(x, k)
        for k in range(9)
        for x in (0.05, 0.25, 1.0)
    )
    ok = coeff_ok and fd_ok and l1_ok
    record(7, "coefficient sums, FD agreement, L1 bound", ok,
           f"coeffs={coeff_ok}, worst FD rel={worst_fd:.1e} (<1%), l1<=bound={l1_ok}")
    assert ok


def test_criterion_08_matrix_sandwich():
    t0 = time.perf_counter()
    eps, delta = 0.05, 0.01
    quad = build_quadrature(select_params(eps, delta))
    ok = True
    lo, hi = math.inf, -math.inf
    for seed in range(20):
        rng = np.random.default_rng(seed)
        Q, _ = np.linalg.qr(rng.standard_normal((64, 64)))
        D = rng.uniform(delta, 1.0, 64)
        A = (Q * D) @ Q.T
        sp = jacobi_eigh(A)
        ok &= sandwich_check(A, quad, spectral=sp).passed
        half = sp.function(np.sqrt(sp.eigenvalues))
        M = half @ assemble_expsum_matrix(sp, quad) @ half
        mu = jacobi_eigh(M).eigenvalues
        lo, hi = min(lo, mu[0]), max(hi, mu[-1])
    dt = time.perf_counter() - t0
    ok &= 1 - eps <= lo and hi <= 1 + eps and dt < 30.0
    record(8, "sandwich on 20 random n=64 matrices", ok,
           f"A^1/2 S A^1/2 eigenvalues in [{lo:.4f}, {hi:.4f}], {dt:.1f}s (<30s)")
    assert ok


def test_criterion_09_laplacian_solves():
    t0 = time.perf_counter()
    eps = 0.05
    worst, ok = 0.0, True
    for spec in ("path:50", "cycle:16", "grid:8x8"):
        g = parse_graph_spec(spec)
        rng = np.random.default_rng(2024)
        for _ in range(5):
            b = rng.standard_normal(g.n)
            x, _ = solve_laplacian(g, b, eps)
            ref = oracle_solve(g, b - b.mean())
            rel = np.linalg.norm(x - ref) / np.linalg.norm(ref)
            worst = max(worst, rel)
            ok &= rel <= 1.2 * eps
    dt = time.perf_counter() - t0
    ok &= dt < 60.0
    record(9, "Laplacian solves via exponentials, 3 graphs x 5 rhs", ok,
           f"worst rel err={worst:.4f} (<= {1.2 * eps:.2f}), {dt:.1f}s (<60s)")
    assert ok


def test_criterion_10_determinism(capsys):
    outputs = {}
    for threads in ("1", "2", "8"):
        cli_main(["certify", "--eps", "0.1", "--delta", "0.001", "--threads", threads])
        cert = capsys.readouterr().out
        cli_main(["sweep", "--eps-list", "1,0.1", "--delta-list", "0.1,0.01",
                  "--grid", "2000", "--threads", threads])
        sweep = capsys.readouterr().out
        outputs[threads] = (cert, sweep)
    ok = outputs["1"] == outputs["2"] == outputs["8"]
    record(10, "certify and sweep bit-identical for 1/2/8 threads", ok,
           outputs["1"][0].strip())
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
