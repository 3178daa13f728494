"""Isomorphism of small multi digraphs.

Colour refinement seeded with (role, in-degree, out-degree), followed by
backtracking over colour-compatible assignments.  Meant for graphs of a
dozen vertices or so.
"""
from __future__ import annotations

from collections import Counter

import numpy as np

from graphreal.linedigraph import MultiDigraph


def _refine(adj: np.ndarray, colors: list) -> list[int]:
    n = len(colors)
    colors = list(colors)
    while True:
        sigs = []
        for v in range(n):
            outs = Counter((colors[w], int(adj[w, v])) for w in range(n) if adj[w, v])
            ins = Counter((colors[w], int(adj[v, w])) for w in range(n) if adj[v, w])
            sigs.append((colors[v], tuple(sorted(outs.items())), tuple(sorted(ins.items()))))
        palette = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = [palette[s] for s in sigs]
        if len(set(new)) == len(set(colors)):
            return new
        colors = new


def find_isomorphism(
    g1: MultiDigraph, g2: MultiDigraph, roles1=None, roles2=None
) -> dict[int, int] | None:
    """Vertex bijection ``phi`` with ``arcs(u -> v)`` in g1 equal to
    ``arcs(phi(u) -> phi(v))`` in g2, or None.  Optional role labels must
    be preserved."""
    if g1.n_vertices != g2.n_vertices or g1.n_arcs != g2.n_arcs:
        return None
    a1, a2 = g1.adjacency(), g2.adjacency()
    r1 = roles1 if roles1 is not None else g1.roles
    r2 = roles2 if roles2 is not None else g2.roles
    n = g1.n_vertices
    seed1 = [(r1[v], int(a1[v].sum()), int(a1[:, v].sum())) for v in range(n)]
    seed2 = [(r2[v], int(a2[v].sum()), int(a2[:, v].sum())) for v in range(n)]
    # refine both graphs against one joint palette so colours are comparable
    joint = np.zeros((2 * n, 2 * n), dtype=np.int64)
    joint[:n, :n] = a1
    joint[n:, n:] = a2
    seeds = sorted(set(seed1 + seed2))
    colors = _refine(joint, [seeds.index(s) for s in seed1 + seed2])
    c1, c2 = colors[:n], colors[n:]
    if sorted(c1) != sorted(c2):
        return None
    order = sorted(range(n), key=lambda v: (Counter(c1)[c1[v]], v))
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def consistent(u: int, x: int) -> bool:
        if a1[u, u] != a2[x, x]:
            return False
        for w, y in mapping.items():
            if a1[u, w] != a2[x, y] or a1[w, u] != a2[y, x]:
                return False
        return True

    def extend(idx: int) -> bool:
        if idx == n:
            return True
        u = order[idx]
        for x in range(n):
            if x in used or c2[x] != c1[u] or not consistent(u, x):
                continue
            mapping[u] = x
            used.add(x)
            if extend(idx + 1):
                return True
            del mapping[u]
            used.discard(x)
        return False

    return dict(mapping) if extend(0) else None


def arc_preserving_map(g1: MultiDigraph, g2: MultiDigraph) -> dict[int, int] | None:
    """Vertex bijection sending tail/head of every arc ``k`` of g1 to the
    tail/head of arc ``k`` of g2; isolated vertices are ignored."""
    if g1.n_arcs != g2.n_arcs:
        return None
    fwd: dict[int, int] = {}
    back: dict[int, int] = {}
    for (t1, h1), (t2, h2) in zip(g1.arcs, g2.arcs):
        for u, x in ((t1, t2), (h1, h2)):
            if fwd.setdefault(u, x) != x or back.setdefault(x, u) != u:
                return None
    return fwd
