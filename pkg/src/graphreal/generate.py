"""Seeded random graph problems whose vertex conditions satisfy the flow
connectivity assumptions.

At each non-sink vertex the Riemann-form matrix ``Psi_v`` is drawn with a
dense first row (a Kirchhoff-type row coupling every value) and an
invertible outgoing block; ``Phi_v = Psi_v F(v)^{-1}`` then reproduces it.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from graphreal import binmat
from graphreal.netcompile import (
    EdgeData,
    MetricGraphProblem,
    build_contraction,
    classify,
)
from graphreal.realize import SINK

# integer diagonalizers with determinant +-1 or small, all entries nonzero
_INT_F = ([[1, 1], [1, -1]], [[2, 1], [1, 1]], [[1, 2], [1, 3]], [[3, 1], [2, -1]], [[1, 1], [2, -3]])


def random_graph(rng: np.random.Generator, n: int, m: int) -> list[tuple[int, int]]:
    """Connected simple graph: a random spanning tree plus extra edges."""
    order = rng.permutation(n).tolist()
    edges = set()
    for i in range(1, n):
        u, v = order[i], order[int(rng.integers(i))]
        edges.add((min(u, v), max(u, v)))
    candidates = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in edges]
    rng.shuffle(candidates)
    edges.update(candidates[: max(0, m - len(edges))])
    return sorted(edges)


def _eigenvalues(rng: np.random.Generator, alpha: int, exact: bool):
    a, b = sorted(rng.choice(np.arange(1, 20), size=2, replace=False).tolist())
    if exact:
        a, b = Fraction(a, 2), Fraction(b, 2)
    else:
        a, b = a / 2 + float(rng.uniform(0, 0.4)), b / 2 + float(rng.uniform(0, 0.4))
    if alpha == 2:
        return b, a
    if alpha == 0:
        return -a, -b
    return a, -b


def _random_edge(rng, x0, x1, exact: bool) -> EdgeData:
    alpha = int(rng.integers(3))
    lp, lm = _eigenvalues(rng, alpha, exact)
    if exact:
        F = _INT_F[int(rng.integers(len(_INT_F)))]
        return EdgeData(x0, x1, lp, lm, binmat.as_matrix(F))
    # well-conditioned float diagonalizer, given through M = F diag F^-1
    theta = float(rng.uniform(0.2, 1.2))
    F = np.array([[1.0, 1.0], [np.tan(theta), -np.tan(theta) * float(rng.uniform(0.5, 2.0))]])
    M = F @ np.diag([lp, lm]) @ np.linalg.inv(F)
    return EdgeData.from_matrix(x0, x1, M)


def _nonzero_int(rng, size):
    vals = rng.integers(1, 5, size=size) * rng.choice([-1, 1], size=size)
    return vals


def _random_psi(rng, k: int, width: int, out_pos: list[int]) -> np.ndarray:
    """``k x width`` integer matrix; row 0 dense, outgoing block invertible
    with no zero row."""
    while True:
        psi = rng.integers(-3, 4, size=(k, width))
        psi[0] = _nonzero_int(rng, width)
        block = psi[:, out_pos]
        if np.all(block.any(axis=1)) and abs(np.linalg.det(block)) > 0.5:
            return psi


def _exact_inverse(F: np.ndarray) -> np.ndarray:
    (a, b), (c, d) = F
    det = a * d - b * c
    return binmat.as_matrix([[d / det, -b / det], [-c / det, a / det]])


def random_problem(
    seed: int,
    max_vertices: int = 8,
    max_edges: int = 12,
    exact: bool | None = None,
) -> MetricGraphProblem:
    """Random connected problem with mixed eigenvalue signs and well-posed
    vertex conditions satisfying the connectivity assumptions."""
    rng = np.random.default_rng(seed)
    if exact is None:
        exact = bool(rng.random() < 0.7)
    n = int(rng.integers(2, max_vertices + 1))
    m_max = min(max_edges, n * (n - 1) // 2)
    m = int(rng.integers(n - 1, m_max + 1))
    pairs = random_graph(rng, n, m)
    edges = []
    for u, v in pairs:
        x0, x1 = (u, v) if rng.random() < 0.5 else (v, u)
        edges.append(_random_edge(rng, x0, x1, exact))
    bare = MetricGraphProblem(n, tuple(edges))
    cls = classify(bare)
    phi = {}
    for v in range(n):
        if cls.roles[v] == SINK:
            continue
        asm = build_contraction(bare, cls, v)
        out_pos = [asm.columns.index(c) for c in asm.out_columns]
        psi = _random_psi(rng, cls.k[v], len(asm.columns), out_pos)
        J = bare.incident(v)
        if exact:
            blocks = [_exact_inverse(bare.edges[j].F) for j in J]
            finv = binmat.zeros((2 * len(J), 2 * len(J)))
            for i, blk in enumerate(blocks):
                finv[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = blk
            phi[v] = binmat.as_matrix(psi.tolist()) @ finv
        else:
            finv = np.zeros((2 * len(J), 2 * len(J)))
            for i, j in enumerate(J):
                finv[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = np.linalg.inv(bare.edges[j].F)
            phi[v] = psi.astype(float) @ finv
    return MetricGraphProblem(n, tuple(edges), phi)
