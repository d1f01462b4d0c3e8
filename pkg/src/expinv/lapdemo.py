"""Graph Laplacian solves through heat-kernel actions only.

For a connected graph with degree matrix D and weight matrix W the
combinatorial Laplacian is L = D - W. We work with

    A = (I - D^{-1/2} W D^{-1/2}) / 2,

whose spectrum lies in [0, 1] with a simple zero eigenvalue on D^{1/2} 1.
Since L = 2 D^{1/2} A D^{1/2}, a solution of L x = b (b orthogonal to 1) is
x = D^{-1/2} A^+ D^{-1/2} b / 2, and A^+ is applied on the complement of
its kernel with the exponential sum.
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import asdict, dataclass

import numpy as np

from .errors import GraphError
from .expsum import build_quadrature, select_params
from .matfun import SymmetricMatrix, apply_inverse_expsum, jacobi_eigh

__all__ = [
    "Graph",
    "SolveReport",
    "build_graph",
    "parse_graph_spec",
    "combinatorial_laplacian",
    "normalized_laplacian_scaled",
    "solve_laplacian",
    "oracle_solve",
]


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple  # of (u, v, weight), u != v

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("graph needs at least one vertex")
        seen = set()
        for u, v, w in self.edges:
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge ({u}, {v}) references a vertex outside 0..{self.n - 1}")
            if not w > 0:
                raise GraphError(f"edge ({u}, {v}) has non-positive weight {w!r}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)

    def adjacency(self):
        W = np.zeros((self.n, self.n))
        for u, v, w in self.edges:
            W[u, v] = W[v, u] = w
        return W

    def degrees(self):
        return self.adjacency().sum(axis=1)

    def is_connected(self):
        nbrs = [[] for _ in range(self.n)]
        for u, v, _ in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == self.n


def _connected(g):
    if not g.is_connected():
        raise GraphError("graph is disconnected")
    return g


def _parse_edgelist(lines):
    edges = []
    n = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphError(f"line {lineno}: expected 'u v [w]', got {raw.rstrip()!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise GraphError(f"line {lineno}: cannot parse {raw.rstrip()!r}") from None
        if u < 0 or v < 0:
            raise GraphError(f"line {lineno}: negative vertex index")
        edges.append((u, v, w))
        n = max(n, u + 1, v + 1)
    try:
        return Graph(n, tuple(edges))
    except GraphError as exc:
        raise GraphError(f"edge list: {exc}") from None


def build_graph(kind, size=None, path=None):
    """Build a connected graph.

    ``kind`` is one of ``path``, ``cycle`` (``size`` = vertex count),
    ``grid`` (``size`` = (rows, cols) or an int for a square grid) and
    ``edgelist`` (``path`` to a file of 0-indexed ``u v [w]`` lines).
    """
    if kind == "path":
        n = int(size)
        if n < 2:
            raise GraphError("path needs at least 2 vertices")
        g = Graph(n, tuple((i, i + 1, 1.0) for i in range(n - 1)))
    elif kind == "cycle":
        n = int(size)
        if n < 3:
            raise GraphError("cycle needs at least 3 vertices")
        g = Graph(n, tuple((i, (i + 1) % n, 1.0) for i in range(n)))
    elif kind == "grid":
        r, c = (size, size) if isinstance(size, int) else size
        if r < 1 or c < 1 or r * c < 2:
            raise GraphError("grid needs at least 2 vertices")
        edges = []
        for i in range(r):
            for j in range(c):
                k = i * c + j
                if j + 1 < c:
                    edges.append((k, k + 1, 1.0))
                if i + 1 < r:
                    edges.append((k, k + c, 1.0))
        g = Graph(r * c, tuple(edges))
    elif kind == "edgelist":
        with open(path) as fh:
            g = _parse_edgelist(fh)
    else:
        raise ValueError(f"unknown graph kind {kind!r}")
    return _connected(g)


def parse_graph_spec(spec):
    """``path:50``, ``cycle:16``, ``grid:8x8`` or ``edgelist:PATH``."""
    kind, _, arg = spec.partition(":")
    if kind in ("path", "cycle"):
        return build_graph(kind, int(arg))
    if kind == "grid":
        m = re.fullmatch(r"(\d+)x(\d+)", arg)
        if not m:
            raise ValueError(f"grid spec must look like grid:RxC, got {spec!r}")
        return build_graph("grid", (int(m.group(1)), int(m.group(2))))
    if kind == "edgelist":
        return build_graph("edgelist", path=arg)
    raise ValueError(f"unknown graph spec {spec!r}")


def combinatorial_laplacian(g):
    W = g.adjacency()
    return np.diag(W.sum(axis=1)) - W


def normalized_laplacian_scaled(g):
    """A = (I - D^{-1/2} W D^{-1/2}) / 2, spectrum in [0, 1]."""
    _connected(g)
    W = g.adjacency()
    d = W.sum(axis=1)
    if np.any(d <= 0):
        raise GraphError(f"vertex {int(np.argmin(d))} has degree zero")
    r = 1.0 / np.sqrt(d)
    return SymmetricMatrix(0.5 * (np.eye(g.n) - r[:, None] * W * r[None, :]))


@dataclass(frozen=True)
class SolveReport:
    eps: float
    delta_used: float
    K: int
    matvec_count: int
    rel_error_vs_direct: float
    residual_norm: float  # ||L x - b_proj|| / ||b_proj||

    def to_dict(self):
        return asdict(self)


def oracle_solve(g, b):
    """Minimum-norm solution L^+ b from the Jacobi eigendecomposition of L."""
    spec = jacobi_eigh(combinatorial_laplacian(g))
    lam = spec.eigenvalues
    cutoff = 1e-10 * max(1.0, float(lam[-1]))
    inv = np.where(lam > cutoff, 1.0 / np.where(lam > cutoff, lam, 1.0), 0.0)
    return spec.function(inv) @ np.asarray(b, dtype=float)


def solve_laplacian(g, b, eps, threads=1):
    """Solve L x = b on the range of L using exponential actions only.

    The right-hand side is first projected onto the complement of the
    all-ones vector. delta is the second-smallest eigenvalue of A, taken
    from the dense eigensolver. Accepts a single vector or an (n, k) block.

    Returns
    -------
    x : ndarray
        Solution orthogonal to the all-ones vector.
    report : SolveReport
        Errors are reported against :func:`oracle_solve`; for a block of
        right-hand sides the worst column is reported.
    """
    g = _connected(g)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != g.n:
        raise ValueError(f"right-hand side has length {b.shape[0]}, graph has {g.n} vertices")
    A = normalized_laplacian_scaled(g)
    d = g.degrees()
    sq = np.sqrt(d)

    b_proj = b - b.mean(axis=0)
    c = b_proj / (sq if b.ndim == 1 else sq[:, None])

    kernel = sq / np.linalg.norm(sq)

    def deflate(y):
        if y.ndim == 1:
            return y - kernel * (kernel @ y)
        return y - np.outer(kernel, kernel @ y)

    spectral = jacobi_eigh(A)
    delta = float(spectral.eigenvalues[1]) if g.n > 1 else 1.0
    delta = min(delta, 1.0)
    quad = build_quadrature(select_params(eps, delta))

    if not np.any(np.linalg.norm(c, axis=0) > 0):
        y, matvecs = np.zeros_like(c), 0
    else:
        y, matvecs = apply_inverse_expsum(
            A, quad, c, project=deflate, threads=threads, return_matvecs=True
        )
    x = 0.5 * (y / (sq if b.ndim == 1 else sq[:, None]))
    x = x - x.mean(axis=0)

    x_ref = oracle_solve(g, b_proj)
    ref_norm = np.linalg.norm(x_ref, axis=0)
    err = np.linalg.norm(x - x_ref, axis=0)
    rel = np.where(ref_norm > 0, err / np.where(ref_norm > 0, ref_norm, 1.0), err)
    L = combinatorial_laplacian(g)
    bn = np.linalg.norm(b_proj, axis=0)
    res = np.linalg.norm(L @ x - b_proj, axis=0)
    res_rel = np.where(bn > 0, res / np.where(bn > 0, bn, 1.0), res)
    report = SolveReport(
        eps=float(eps),
        delta_used=delta,
        K=quad.params.K,
        matvec_count=int(matvecs),
        rel_error_vs_direct=float(np.max(rel)),
        residual_norm=float(np.max(res_rel)),
    )
    return x, report
