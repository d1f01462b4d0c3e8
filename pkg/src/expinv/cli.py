"""Command-line entry point.

Exit status: 0 on success, 1 when a certification or check fails,
2 on usage errors and invalid arguments.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .bernoulli import bernoulli_numbers
from .em_quadrature import TrapezoidSpec, em_residual
from .errors import ExpInvError
from .expsum import (
    ExpSumParams,
    ExpSumQuadrature,
    build_quadrature,
    certify,
    select_params,
)
from .lapdemo import parse_graph_spec, solve_laplacian
from .matfun import apply_inverse_expsum, jacobi_eigh, sandwich_check

DEFAULT_SEED = 42
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fmt(x):
    # repr is the shortest string that round-trips to the same double
    return repr(float(x))


def _unit_interval(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}")
        if not 0.0 < v <= 1.0:
            raise argparse.ArgumentTypeError(f"{name} must lie in (0, 1], got {text}")
        return v

    return parse


def _float_list(name):
    check = _unit_interval(name)

    def parse(text):
        return [check(p) for p in text.split(",") if p.strip()]

    return parse


def _grid(text):
    g = int(text)
    if g < 2:
        raise argparse.ArgumentTypeError(f"grid must be >= 2, got {g}")
    return g


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


# -- quadrature serialisation -------------------------------------------------


def quadrature_to_json(quad):
    p = quad.params
    return {
        "eps": p.eps,
        "delta": p.delta,
        "N": p.N,
        "h": p.h,
        "A": p.A,
        "B": p.B,
        "K": p.K,
        "terms": [
            {"j": int(j), "t": float(t), "w": float(w)}
            for j, t, w in zip(quad.indices, quad.nodes, quad.weights)
        ],
    }


def quadrature_from_json(obj):
    """Rebuild a quadrature from ``gen --format json`` output, bit for bit."""
    terms = obj["terms"]
    A, B = int(obj["A"]), int(obj["B"])
    if [int(t["j"]) for t in terms] != list(range(A, B + 1)):
        raise ValueError("term indices do not cover A..B")
    ref = select_params(float(obj["eps"]), float(obj["delta"]))
    params = ExpSumParams(
        eps=float(obj["eps"]),
        delta=float(obj["delta"]),
        N=int(obj["N"]),
        h=float(obj["h"]),
        A=A,
        B=B,
        K=int(obj["K"]),
        A_formula=ref.A_formula,
        B_formula=ref.B_formula,
    )
    nodes = np.array([float(t["t"]) for t in terms])
    weights = np.array([float(t["w"]) for t in terms])
    return ExpSumQuadrature(params, nodes, weights)


# -- subcommands ----------------------------------------------------------------


def cmd_gen(args):
    quad = build_quadrature(select_params(args.eps, args.delta))
    out = _open_out(args.out)
    try:
        if args.format == "json":
            json.dump(quadrature_to_json(quad), out)
            out.write("\n")
        else:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(["j", "t", "w"])
            for j, t, wt in zip(quad.indices, quad.nodes, quad.weights):
                w.writerow([int(j), _fmt(t), _fmt(wt)])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _certificate_line(cert):
    status = "PASS" if cert.passed else "FAIL"
    return (
        f"{status} max_rel_err={_fmt(cert.max_rel_error)} "
        f"argmax_x={_fmt(cert.argmax_x)} K={cert.K}"
    )


def cmd_certify(args):
    if args.quad:
        with open(args.quad) as fh:
            quad = quadrature_from_json(json.load(fh))
    else:
        if args.eps is None or args.delta is None:
            raise UsageError("certify needs --eps and --delta (or --quad FILE)")
        quad = build_quadrature(select_params(args.eps, args.delta))
    cert = certify(quad, args.grid, threads=args.threads)
    print(_certificate_line(cert))
    print(f"# {cert.method}", file=sys.stderr)
    return EXIT_OK if cert.passed else EXIT_FAIL


def _sweep_row(pair, grid):
    eps, delta = pair
    p = select_params(eps, delta)
    cert = certify(build_quadrature(p), grid)
    return [_fmt(eps), _fmt(delta), p.N, _fmt(p.h), p.A, p.B, p.K, _fmt(cert.max_rel_error)], cert.passed


def cmd_sweep(args):
    pairs = [(e, d) for e in args.eps_list for d in args.delta_list]
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(lambda p: _sweep_row(p, args.grid), pairs))
    else:
        rows = [_sweep_row(p, args.grid) for p in pairs]
    out = _open_out(args.out)
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["eps", "delta", "N", "h", "A", "B", "K", "max_rel_err"])
        for row, _ in rows:
            w.writerow(row)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK if all(ok for _, ok in rows) else EXIT_FAIL


def cmd_bernoulli(args):
    table = bernoulli_numbers(args.kmax)
    rows = [
        (k, b.numerator, b.denominator, float(b)) for k, b in enumerate(table.values)
    ]
    out = _open_out(args.out)
    try:
        if args.format == "json":
            json.dump(
                [{"k": k, "num": n, "den": d, "value": v} for k, n, d, v in rows], out
            )
            out.write("\n")
        else:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(["k", "num", "den", "value"])
            for k, n, d, v in rows:
                w.writerow([k, n, d, _fmt(v)])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def monomial_derivs(d, order):
    """Handles for s^d and its derivatives up to ``order``."""
    out = []
    for i in range(order + 1):
        if i > d:
            out.append(lambda s: 0.0)
        else:
            c, p = math.perm(d, i), d - i
            out.append(lambda s, c=c, p=p: c * s**p)
    return out


def monomial_integral(d, a, b):
    return (b ** (d + 1) - a ** (d + 1)) / (d + 1)


def cmd_em_check(args):
    a, b = args.interval
    table = bernoulli_numbers(2 * max(args.orders))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["degree", "N", "h", "defect"])
    ok = True
    for N in args.orders:
        for h in args.steps:
            spec = TrapezoidSpec.from_interval(a, b, h)
            for d in range(2 * N):
                rep = em_residual(monomial_derivs(d, 2 * N), spec, N, table)
                ok &= rep.defect <= args.tol
                w.writerow([d, N, _fmt(h), _fmt(rep.defect)])
    return EXIT_OK if ok else EXIT_FAIL


def _load_vector(path):
    return np.atleast_1d(np.loadtxt(path, dtype=float))


def cmd_apply(args):
    A = np.atleast_2d(np.loadtxt(args.matrix, dtype=float))
    v = _load_vector(args.vector)
    spectral = jacobi_eigh(A)
    if args.auto_delta:
        # oracle-assisted: delta is read off the dense eigendecomposition
        delta = float(spectral.eigenvalues[0])
        if not 0 < delta <= 1:
            raise UsageError(f"--auto-delta: smallest eigenvalue {delta!r} is not in (0, 1]")
    elif args.delta is not None:
        delta = args.delta
    else:
        raise UsageError("apply needs --delta D or --auto-delta")
    quad = build_quadrature(select_params(args.eps, delta))
    report = sandwich_check(A, quad, spectral=spectral)
    y = apply_inverse_expsum(
        spectral.base, quad, v, method=args.method, threads=args.threads
    )
    print(
        f"# eps={_fmt(args.eps)}, delta={_fmt(delta)}, K={quad.params.K}, "
        f"max_ratio_dev={_fmt(report.max_ratio_dev)}"
    )
    for x in y:
        print(_fmt(x))
    return EXIT_OK if report.passed else EXIT_FAIL


def _rhs(spec, n, seed):
    if spec.startswith("unit:"):
        i, j = (int(p) for p in spec[5:].split(","))
        if not (0 <= i < n and 0 <= j < n):
            raise UsageError(f"unit:{i},{j} out of range for {n} vertices")
        b = np.zeros(n)
        b[i] += 1.0
        b[j] -= 1.0
        return b
    if spec == "random":
        return np.random.default_rng(seed).standard_normal(n)
    b = _load_vector(spec)
    if b.shape[0] != n:
        raise UsageError(f"right-hand side has {b.shape[0]} entries, graph has {n} vertices")
    return b


def cmd_solve(args):
    g = parse_graph_spec(args.graph)
    b = _rhs(args.b, g.n, args.seed)
    x, report = solve_laplacian(g, b, args.eps, threads=args.threads)
    if args.report == "json":
        json.dump(report.to_dict(), sys.stdout)
        sys.stdout.write("\n")
        if not args.out:
            return EXIT_OK
    out = _open_out(args.out)
    try:
        out.write(
            f"# eps={_fmt(report.eps)}, delta={_fmt(report.delta_used)}, "
            f"K={report.K}, rel_error_vs_direct={_fmt(report.rel_error_vs_direct)}\n"
        )
        for xi in x:
            out.write(_fmt(xi) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser():
    threads_default = os.cpu_count() or 1
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--threads", type=int, default=threads_default,
        help="worker threads; results do not depend on this (default: %(default)s)",
    )
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for random inputs")

    parser = argparse.ArgumentParser(
        prog="expinv",
        description="Exponential-sum approximations of 1/x and matrix inverses.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen", parents=[common], help="emit quadrature nodes and weights")
    p.add_argument("--eps", type=_unit_interval("eps"), required=True)
    p.add_argument("--delta", type=_unit_interval("delta"), required=True)
    p.add_argument("--format", choices=["json", "csv"], default="csv",
                   help="csv columns j,t,w; json object with parameters and terms")
    p.add_argument("--out", help="write to this file instead of stdout")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("certify", parents=[common],
                       help="check max |x S(x) - 1| <= eps on a log-uniform grid")
    p.add_argument("--eps", type=_unit_interval("eps"))
    p.add_argument("--delta", type=_unit_interval("delta"))
    p.add_argument("--grid", type=_grid, default=10_000)
    p.add_argument("--quad", help="certify a quadrature read from `gen --format json` output")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sweep", parents=[common], help="certify a grid of (eps, delta) pairs")
    p.add_argument("--eps-list", type=_float_list("eps"), required=True)
    p.add_argument("--delta-list", type=_float_list("delta"), required=True)
    p.add_argument("--grid", type=_grid, default=10_000)
    p.add_argument("--format", choices=["csv"], default="csv",
                   help="columns eps,delta,N,h,A,B,K,max_rel_err")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bernoulli", parents=[common], help="exact Bernoulli numbers")
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--format", choices=["json", "csv"], default="csv",
                   help="csv columns k,num,den,value")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bernoulli)

    p = sub.add_parser("em-check", parents=[common],
                       help="Euler-Maclaurin defect table for monomials (degree,N,h,defect)")
    p.add_argument("--interval", type=lambda s: tuple(float(x) for x in s.split(",")),
                   default=(0.0, 2.0), help="a,b (default 0,2)")
    p.add_argument("--orders", type=lambda s: [int(x) for x in s.split(",")], default=[1, 2, 3])
    p.add_argument("--steps", type=lambda s: [float(x) for x in s.split(",")], default=[1.0, 0.5])
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_em_check)

    p = sub.add_parser("apply", parents=[common],
                       help="apply the exponential-sum inverse of a dense SPD matrix")
    p.add_argument("--matrix", required=True, help="whitespace-separated dense rows")
    p.add_argument("--vector", required=True, help="one value per line or whitespace-separated")
    p.add_argument("--eps", type=_unit_interval("eps"), required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--delta", type=_unit_interval("delta"))
    group.add_argument("--auto-delta", action="store_true",
                       help="use the smallest eigenvalue from the dense eigensolver")
    p.add_argument("--method", choices=["chained", "independent"], default="chained")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("solve", parents=[common],
                       help="solve a graph Laplacian system via heat-kernel actions")
    p.add_argument("--graph", required=True, help="path:N | cycle:N | grid:RxC | edgelist:PATH")
    p.add_argument("--b", required=True, help="FILE | unit:i,j | random")
    p.add_argument("--eps", type=_unit_interval("eps"), required=True)
    p.add_argument("--report", choices=["json"], help="print the solve report as JSON")
    p.add_argument("--out", help="write the solution vector here")
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"expinv {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ExpInvError, ValueError, OSError) as exc:
        print(f"expinv {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


run = main

if __name__ == "__main__":
    sys.exit(main())
