"""Line digraphs of loop-free multi digraphs.

Convention: ``A[i, j] = 1`` iff arc ``j`` enters the vertex that arc ``i``
leaves, i.e. ``head(j) == tail(i)``.  Rows of ``A`` therefore describe the
tail of an arc (zero row: the arc leaves a source) and columns its head
(zero column: the arc enters a sink).  With incidence matrices this is
``A = (A_minus)^T A_plus``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from graphreal.binmat import PASS, StructureError, Verdict

TRANSIENT, SOURCE, SINK, ISOLATED = "transient", "source", "sink", "isolated"


class RecognitionError(ValueError):
    """Matrix is not the adjacency matrix of a line digraph."""

    def __init__(self, verdict: Verdict):
        super().__init__(f"not a line digraph adjacency: {verdict.reason} {verdict.witness}")
        self.verdict = verdict


@dataclass(frozen=True)
class MultiDigraph:
    """Loop-free multi digraph with indexed arcs; ``arcs[k] = (tail, head)``."""

    n_vertices: int
    arcs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        arcs = tuple((int(t), int(h)) for t, h in self.arcs)
        object.__setattr__(self, "arcs", arcs)
        for k, (t, h) in enumerate(arcs):
            if not (0 <= t < self.n_vertices and 0 <= h < self.n_vertices):
                raise StructureError(f"arc {k} has an endpoint outside the vertex range")
            if t == h:
                raise StructureError(f"arc {k} is a loop")

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    def in_degree(self, v: int) -> int:
        return sum(1 for _, h in self.arcs if h == v)

    def out_degree(self, v: int) -> int:
        return sum(1 for t, _ in self.arcs if t == v)

    @property
    def roles(self) -> tuple[str, ...]:
        out = []
        for v in range(self.n_vertices):
            i, o = self.in_degree(v), self.out_degree(v)
            if i and o:
                out.append(TRANSIENT)
            elif o:
                out.append(SOURCE)
            elif i:
                out.append(SINK)
            else:
                out.append(ISOLATED)
        return tuple(out)

    def adjacency(self) -> np.ndarray:
        """``A[i, j]`` = number of arcs from ``j`` to ``i``."""
        A = np.zeros((self.n_vertices, self.n_vertices), dtype=np.int64)
        for t, h in self.arcs:
            A[h, t] += 1
        return A

    def incidence(self) -> "IncidencePair":
        n, m = self.n_vertices, self.n_arcs
        plus = np.zeros((n, m), dtype=np.int64)
        minus = np.zeros((n, m), dtype=np.int64)
        for k, (t, h) in enumerate(self.arcs):
            plus[h, k] = 1
            minus[t, k] = 1
        return IncidencePair(plus, minus)

    def without_isolated(self) -> "MultiDigraph":
        used = sorted({v for arc in self.arcs for v in arc})
        relabel = {v: i for i, v in enumerate(used)}
        return MultiDigraph(len(used), tuple((relabel[t], relabel[h]) for t, h in self.arcs))


@dataclass(frozen=True)
class IncidencePair:
    """Incoming (``plus``) and outgoing (``minus``) vertex-arc incidence."""

    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        plus = np.asarray(self.plus, dtype=np.int64)
        minus = np.asarray(self.minus, dtype=np.int64)
        object.__setattr__(self, "plus", plus)
        object.__setattr__(self, "minus", minus)
        if plus.shape != minus.shape:
            raise StructureError(f"incidence shapes differ: {plus.shape} vs {minus.shape}")
        for name, M in (("plus", plus), ("minus", minus)):
            if not np.all((M == 0) | (M == 1)):
                raise StructureError(f"{name} incidence is not binary")
            bad = np.flatnonzero(M.sum(axis=0) != 1)
            if bad.size:
                raise StructureError(
                    f"column {int(bad[0]) + 1} of the {name} incidence does not hold exactly one 1"
                )

    @property
    def n_vertices(self) -> int:
        return self.plus.shape[0]

    def digraph(self) -> MultiDigraph:
        heads = self.plus.argmax(axis=0)
        tails = self.minus.argmax(axis=0)
        return MultiDigraph(self.n_vertices, tuple(zip(tails.tolist(), heads.tolist())))


@dataclass(frozen=True)
class ClassStructure:
    """Row classes (``v_out``) and column classes (``v_in``) of a line
    digraph adjacency.  A zero-row class, when present, is last in
    ``v_out``; a zero-column class, when present, is last in ``v_in``."""

    v_out: tuple[tuple[int, ...], ...]
    v_in: tuple[tuple[int, ...], ...]
    has_source_class: bool
    has_sink_class: bool

    @property
    def n_out_classes(self) -> int:
        return len(self.v_out)

    @property
    def n_in_classes(self) -> int:
        return len(self.v_in)

    @property
    def M(self) -> int:
        return len(self.v_out) - int(self.has_source_class)

    @property
    def N(self) -> int:
        return len(self.v_in) - int(self.has_sink_class)

    @property
    def n_transient(self) -> int:
        return self.M

    @property
    def source_arcs(self) -> tuple[int, ...]:
        return self.v_out[-1] if self.has_source_class else ()

    @property
    def sink_arcs(self) -> tuple[int, ...]:
        return self.v_in[-1] if self.has_sink_class else ()


def _check_square(A: np.ndarray) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise StructureError(f"expected a square matrix, got shape {A.shape}")


def recognize(A) -> Verdict:
    """Decide whether ``A`` is the adjacency matrix of a line digraph.

    Criterion: zero diagonal, and any two columns are equal or orthogonal.
    The witness is ``("diagonal", i)`` or ``("columns", j, k)``.
    """
    A = np.asarray(A)
    _check_square(A)
    if not np.all((A == 0) | (A == 1)):
        raise StructureError("adjacency matrix must be binary")
    diag = np.flatnonzero(np.diag(A))
    if diag.size:
        return Verdict(False, ("diagonal", int(diag[0])), "nonzero diagonal entry")
    n = A.shape[1]
    for j in range(n):
        for k in range(j + 1, n):
            a, b = A[:, j], A[:, k]
            if not np.array_equal(a, b) and int(a @ b) != 0:
                return Verdict(False, ("columns", j, k), "columns neither equal nor orthogonal")
    return PASS


def _scan_classes(vectors: np.ndarray) -> list[tuple[int, ...]]:
    # minimal-index inductive scan over the rows of ``vectors``
    classes: list[tuple[int, ...]] = []
    assigned = np.zeros(len(vectors), dtype=bool)
    for j in range(len(vectors)):
        if assigned[j]:
            continue
        members = tuple(
            int(r) for r in range(len(vectors)) if not assigned[r] and np.array_equal(vectors[r], vectors[j])
        )
        assigned[list(members)] = True
        classes.append(members)
    return classes


def _move_zero_class_last(classes, vectors) -> tuple[list, bool]:
    for idx, cls in enumerate(classes):
        if not vectors[cls[0]].any():
            return classes[:idx] + classes[idx + 1 :] + [cls], True
    return classes, False


def build_classes(A) -> ClassStructure:
    """Group equal rows and equal columns of a recognized adjacency."""
    A = np.asarray(A, dtype=np.int64)
    verdict = recognize(A)
    if not verdict:
        raise RecognitionError(verdict)
    v_out, has_src = _move_zero_class_last(_scan_classes(A), A)
    v_in, has_snk = _move_zero_class_last(_scan_classes(A.T), A.T)
    cs = ClassStructure(tuple(v_out), tuple(v_in), has_src, has_snk)
    if cs.M != cs.N:
        raise AssertionError(f"transient counts disagree: M={cs.M}, N={cs.N}")
    return cs


def match_vertices(A, cs: ClassStructure) -> tuple[int, ...]:
    """For each non-degenerate out-class ``i`` the in-class it shares a
    vertex with: the unique ``j`` with ``A[p, q] = 1`` for ``p`` in
    ``v_out[i]`` and ``q`` in ``v_in[j]``."""
    A = np.asarray(A, dtype=np.int64)
    class_of_col = {}
    for j, cls in enumerate(cs.v_in):
        for q in cls:
            class_of_col[q] = j
    match = []
    for i in range(cs.M):
        row = A[cs.v_out[i][0]]
        targets = {class_of_col[int(q)] for q in np.flatnonzero(row)}
        if len(targets) != 1:
            raise AssertionError(f"out-class {i} touches in-classes {sorted(targets)}")
        match.append(targets.pop())
    if len(set(match)) != len(match):
        raise AssertionError("vertex matching is not injective")
    return tuple(match)


def collapse(A, cs: ClassStructure) -> tuple[np.ndarray, np.ndarray]:
    """Collapse equal rows into ``A_plus`` and equal columns into
    ``A_minus``.

    ``A_plus`` has one row per out-class (source row last, zero) and
    ``A_minus`` one row per transient vertex in the same order, then a zero
    sink row if there is a sink class.
    """
    A = np.asarray(A, dtype=np.int64)
    match = match_vertices(A, cs)
    a_plus = np.array([A[cls[0]] for cls in cs.v_out], dtype=np.int64).reshape(len(cs.v_out), A.shape[1])
    rows = [A[:, cs.v_in[j][0]] for j in match]
    if cs.has_sink_class:
        rows.append(np.zeros(A.shape[0], dtype=np.int64))
    a_minus = np.array(rows, dtype=np.int64).reshape(len(rows), A.shape[0])
    return a_plus, a_minus


def _indicator_rows(groups: Sequence[Sequence[int]], width: int) -> np.ndarray:
    rows = np.zeros((len(groups), width), dtype=np.int64)
    for r, g in enumerate(groups):
        rows[r, list(g)] = 1
    return rows


def _check_grouping(groups, expected: set[int], what: str) -> None:
    flat = [int(x) for g in groups for x in g]
    if any(len(g) == 0 for g in groups):
        raise ValueError(f"empty {what} group")
    if len(flat) != len(set(flat)) or set(flat) != expected:
        raise ValueError(
            f"{what} groups {[sorted(g) for g in groups]} do not partition {sorted(expected)}"
        )


def augment(
    a_plus: np.ndarray,
    a_minus: np.ndarray,
    source_groups: Sequence[Sequence[int]],
    sink_groups: Sequence[Sequence[int]],
) -> IncidencePair:
    """Complete collapsed matrices to incidence matrices.

    Each source group becomes a vertex whose outgoing arcs are the group,
    each sink group a vertex collecting its arcs.  Rows are ordered:
    transient vertices, sources, sinks.
    """
    a_plus = np.asarray(a_plus, dtype=np.int64)
    a_minus = np.asarray(a_minus, dtype=np.int64)
    m = a_plus.shape[1]
    t_plus = a_plus[a_plus.any(axis=1)]
    t_minus = a_minus[a_minus.any(axis=1)]
    if len(t_plus) != len(t_minus):
        raise StructureError("collapsed matrices disagree on the number of transient vertices")
    source_arcs = {int(k) for k in np.flatnonzero(~a_minus.any(axis=0))}
    sink_arcs = {int(k) for k in np.flatnonzero(~a_plus.any(axis=0))}
    _check_grouping(source_groups, source_arcs, "source")
    _check_grouping(sink_groups, sink_arcs, "sink")
    k, l = len(source_groups), len(sink_groups)
    plus = np.vstack([t_plus, np.zeros((k, m), dtype=np.int64), _indicator_rows(sink_groups, m)])
    minus = np.vstack([t_minus, _indicator_rows(source_groups, m), np.zeros((l, m), dtype=np.int64)])
    return IncidencePair(plus, minus)


def host_adjacency(p: IncidencePair) -> tuple[np.ndarray, MultiDigraph]:
    """``A_plus A_minus^T`` (entry ``(i, j)`` counts arcs ``j -> i``) and
    the multi digraph read off the incidence columns."""
    return p.plus @ p.minus.T, p.digraph()


def line_adjacency(p: IncidencePair) -> np.ndarray:
    return p.minus.T @ p.plus


def line_digraph_adjacency(g: MultiDigraph) -> np.ndarray:
    """Direct construction: ``A[f, e] = 1`` iff ``head(e) == tail(f)``."""
    m = g.n_arcs
    A = np.zeros((m, m), dtype=np.int64)
    for e, (_, he) in enumerate(g.arcs):
        for f, (tf, _) in enumerate(g.arcs):
            if he == tf:
                A[f, e] = 1
    return A


def reconstruct(A, source_groups=None, sink_groups=None) -> tuple[IncidencePair, MultiDigraph]:
    """Full reconstruction; default groups lump all sources and all sinks."""
    cs = build_classes(A)
    a_plus, a_minus = collapse(A, cs)
    if source_groups is None:
        source_groups = [cs.source_arcs] if cs.source_arcs else []
    if sink_groups is None:
        sink_groups = [cs.sink_arcs] if cs.sink_arcs else []
    p = augment(a_plus, a_minus, source_groups, sink_groups)
    return p, p.digraph()


MAX_ENUM_VERTICES = 4
MAX_ENUM_ARCS = 5


def enumerate_small_digraphs(max_vertices: int, max_arcs: int) -> Iterator[MultiDigraph]:
    """All loop-free multi digraphs on ``n = 2..max_vertices`` labeled
    vertices with ``1..max_arcs`` arcs.

    Arcs are unlabeled up to parallel copies: each graph is a multiset of
    ordered vertex pairs, emitted once with its arcs in sorted order.
    """
    if max_vertices > MAX_ENUM_VERTICES or max_arcs > MAX_ENUM_ARCS:
        raise ValueError(
            f"enumeration bounded by {MAX_ENUM_VERTICES} vertices and {MAX_ENUM_ARCS} arcs"
        )
    for n in range(2, max_vertices + 1):
        pairs = [(t, h) for t in range(n) for h in range(n) if t != h]
        for m in range(1, max_arcs + 1):
            for arcs in itertools.combinations_with_replacement(pairs, m):
                yield MultiDigraph(n, arcs)
