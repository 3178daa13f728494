"""Graph realizability of flat boundary systems.

A boundary system couples ``2m`` transport components through

    xi_out @ (outgoing traces) + xi_in @ (incoming traces) = 0.

Column ``q`` of both matrices refers to component ``q``; components in
``j_plus`` travel from x=0 to x=1, those in ``j_minus`` from 1 to 0.  The
pipeline below reads the zero patterns of the two matrices as smeared
incidence matrices, rebuilds the multi digraph carrying one arc per
component and then tries to glue arcs pairwise into the edges of a simple
graph.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from graphreal import binmat
from graphreal.binmat import Verdict, hat, submatrix, support
from graphreal.linedigraph import (
    ClassStructure,
    IncidencePair,
    MultiDigraph,
    augment,
    build_classes,
    collapse,
    match_vertices,
    recognize,
)

DEFAULT_BUDGET = 10_000
BUDGET_ENV = "GRAPH_REALIZE_BUDGET"

# diagnosis tags
OUTGOING_NONZERO = "outgoing-nonzero"
LINE_DIGRAPH = "line-digraph"
ZERO_INFLOW_ROWS = "zero-inflow-rows"
PAIR_FORM = "pair-form"
EDGE_IDENTITY = "edge-identity"
ODD_SINK_COUNT = "odd-sink-count"
SINKS_EXHAUSTED = "sink-partition-exhausted"
BUDGET_EXHAUSTED = "budget-exhausted"

REALIZABLE = "realizable"
NOT_REALIZABLE = "not-realizable"

TRANSIENT, SOURCE, SINK = "transient", "source", "sink"


def default_budget() -> int:
    value = os.environ.get(BUDGET_ENV)
    return int(value) if value not in (None, "") else DEFAULT_BUDGET


class PartitionError(RuntimeError):
    """The row partition violates its closure property although all input
    assumptions passed."""


@dataclass(frozen=True)
class BoundarySystem:
    xi_out: np.ndarray
    xi_in: np.ndarray
    j_plus: tuple[int, ...]
    j_minus: tuple[int, ...]
    speeds: tuple
    tol: float | None = field(default=None, compare=False)

    def __post_init__(self):
        xo = binmat.as_matrix(self.xi_out)
        xi = binmat.as_matrix(self.xi_in)
        if xo.shape != xi.shape or xo.shape[0] != xo.shape[1]:
            raise binmat.StructureError(
                f"xi_out {xo.shape} and xi_in {xi.shape} must be square of equal size"
            )
        n = xo.shape[0]
        if n % 2:
            raise binmat.StructureError(f"component count {n} is odd")
        jp = tuple(sorted(int(j) for j in self.j_plus))
        jm = tuple(sorted(int(j) for j in self.j_minus))
        if sorted(jp + jm) != list(range(n)):
            raise binmat.StructureError("j_plus and j_minus must partition the components")
        speeds = tuple(self.speeds)
        if len(speeds) != n:
            raise binmat.StructureError(f"expected {n} speeds, got {len(speeds)}")
        if any(not (c > 0) for c in speeds):
            raise binmat.StructureError("speeds must be positive")
        object.__setattr__(self, "xi_out", xo)
        object.__setattr__(self, "xi_in", xi)
        object.__setattr__(self, "j_plus", jp)
        object.__setattr__(self, "j_minus", jm)
        object.__setattr__(self, "speeds", speeds)
        if self.tol is None:
            tol = max(binmat.default_tol(xo), binmat.default_tol(xi))
            object.__setattr__(self, "tol", tol)

    @property
    def size(self) -> int:
        return self.xi_out.shape[0]

    @property
    def m(self) -> int:
        return self.size // 2

    @property
    def out_hat(self) -> np.ndarray:
        return hat(self.xi_out, self.tol)

    @property
    def in_hat(self) -> np.ndarray:
        return hat(self.xi_in, self.tol)

    def is_plus(self, q: int) -> bool:
        return q in self.j_plus


@dataclass(frozen=True)
class Diagnosis:
    tag: str
    message: str
    witness: dict = field(default_factory=dict)


@dataclass
class AssumptionReport:
    line_adjacency: np.ndarray
    classes: ClassStructure | None
    checks: dict[str, Verdict]
    diagnoses: list[Diagnosis]

    @property
    def ok(self) -> bool:
        return not self.diagnoses


def check_assumptions(bs: BoundarySystem) -> AssumptionReport:
    """Nonzero outgoing rows/columns, line digraph recognition of the
    flow adjacency, and confinement of zero-inflow rows to one out-class."""
    xo, xi = bs.out_hat, bs.in_hat
    diagnoses: list[Diagnosis] = []
    checks: dict[str, Verdict] = {}

    zero_cols = np.flatnonzero(~xo.any(axis=0))
    zero_rows = np.flatnonzero(~xo.any(axis=1))
    if zero_cols.size:
        w = {"column": int(zero_cols[0])}
        checks[OUTGOING_NONZERO] = Verdict(False, w, "zero column in xi_out")
        diagnoses.append(Diagnosis(OUTGOING_NONZERO, f"xi_out column {zero_cols[0] + 1} is zero", w))
    elif zero_rows.size:
        w = {"row": int(zero_rows[0])}
        checks[OUTGOING_NONZERO] = Verdict(False, w, "zero row in xi_out")
        diagnoses.append(Diagnosis(OUTGOING_NONZERO, f"xi_out row {zero_rows[0] + 1} is zero", w))
    else:
        checks[OUTGOING_NONZERO] = binmat.PASS

    A = hat(xo.T @ xi, 0)
    rec = recognize(A)
    checks[LINE_DIGRAPH] = rec
    classes = None
    if rec:
        classes = build_classes(A)
    else:
        kind, *idx = rec.witness
        if kind == "diagonal":
            w = {"diagonal": idx[0]}
            msg = f"flow adjacency has a nonzero diagonal entry at {idx[0] + 1}"
        else:
            w = {"columns": tuple(idx)}
            msg = "flow adjacency columns {} and {} are neither equal nor orthogonal".format(
                *binmat.one_based(idx)
            )
        diagnoses.append(Diagnosis(LINE_DIGRAPH, msg, w))

    if classes is not None:
        class_of = {}
        for c, members in enumerate(classes.v_out):
            for s in members:
                class_of[s] = c
        verdict = binmat.PASS
        for r in np.flatnonzero(~xi.any(axis=1)):
            touched = sorted({class_of[s] for s in support(xo[r], 0)})
            if len(touched) > 1:
                w = {"row": int(r), "classes": [list(classes.v_out[c]) for c in touched]}
                verdict = Verdict(False, w, "zero-inflow row spans several out-classes")
                diagnoses.append(
                    Diagnosis(
                        ZERO_INFLOW_ROWS,
                        f"row {r + 1} has zero inflow but its outflow spans {len(touched)} vertices",
                        w,
                    )
                )
                break
        checks[ZERO_INFLOW_ROWS] = verdict
    return AssumptionReport(A, classes, checks, diagnoses)


@dataclass(frozen=True)
class VertexPartition:
    parts: tuple[tuple[int, ...], ...]
    source_rows: tuple[int, ...]
    classes: ClassStructure
    match: tuple[int, ...]
    zero_inflow_rows: tuple[int, ...]
    line_adjacency: np.ndarray = field(compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.parts)


def _closure_violation(cols: np.ndarray, part_of: dict[int, int]) -> tuple[int, list[int]] | None:
    for q in range(cols.shape[1]):
        owners = sorted({part_of[int(r)] for r in np.flatnonzero(cols[:, q])})
        if len(owners) > 1:
            return q, owners
    return None


def vertex_partition(bs: BoundarySystem, report: AssumptionReport | None = None) -> VertexPartition:
    """Split the rows into one part per transient vertex plus the source
    rows, and verify that no column support straddles two parts."""
    report = report or check_assumptions(bs)
    if not report.ok:
        raise ValueError("assumptions failed: " + "; ".join(d.message for d in report.diagnoses))
    cs = report.classes
    xo, xi = bs.out_hat, bs.in_hat
    parts = []
    for i in range(cs.M):
        rows = set()
        for s in cs.v_out[i]:
            rows.update(support(xo[:, s], 0))
        parts.append(tuple(sorted(rows)))
    source_arcs = set(cs.source_arcs)
    source_rows = ()
    if cs.has_source_class:
        source_rows = tuple(r for r in range(bs.size) if set(support(xo[r], 0)) <= source_arcs)

    part_of: dict[int, int] = {}
    for label, rows in enumerate(parts + [source_rows]):
        for r in rows:
            if r in part_of:
                raise PartitionError(f"row {r + 1} lies in two parts")
            part_of[r] = label
    missing = sorted(set(range(bs.size)) - set(part_of))
    if missing:
        raise PartitionError(f"rows {binmat.one_based(missing)} belong to no part")
    for name, mat in (("xi_out", xo), ("xi_in", xi)):
        bad = _closure_violation(mat, part_of)
        if bad:
            raise PartitionError(f"{name} column {bad[0] + 1} meets parts {bad[1]}")
    zero_in = tuple(int(r) for r in np.flatnonzero(~xi.any(axis=1)))
    return VertexPartition(
        tuple(parts), source_rows, cs, match_vertices(report.line_adjacency, cs), zero_in,
        report.line_adjacency,
    )


@dataclass(frozen=True)
class SourceDecomposition:
    blocks: tuple[tuple[int, ...], ...]
    block_rows: tuple[tuple[int, ...], ...]
    connectivity: np.ndarray = field(compare=False, repr=False)

    @property
    def k(self) -> int:
        return len(self.blocks)


def source_decomposition(bs: BoundarySystem, vp: VertexPartition) -> SourceDecomposition:
    """Split the source arcs into flow-connected groups, one per source."""
    cols = list(vp.classes.source_arcs)
    rows = list(vp.source_rows)
    if not cols:
        return SourceDecomposition((), (), np.zeros((0, 0), dtype=np.int64))
    sub = submatrix(bs.out_hat, rows, cols)
    conn = hat(sub.T @ sub, 0)
    blocks = tuple(tuple(cols[c] for c in comp) for comp in binmat.irreducible_components(conn))
    block_rows = tuple(
        tuple(r for r in rows if set(support(bs.out_hat[r], 0)) & set(block)) for block in blocks
    )
    return SourceDecomposition(blocks, block_rows, conn)


@dataclass(frozen=True)
class SinkPart:
    """Sink arcs leaving one non-sink vertex (``owner`` indexes transient
    vertices first, then sources)."""

    owner: int
    arcs: tuple[int, ...]


def sink_parts(bs: BoundarySystem, vp: VertexPartition, sd: SourceDecomposition) -> list[SinkPart]:
    sink_arcs = vp.classes.sink_arcs
    owners = list(vp.parts) + list(sd.block_rows)
    out = []
    for owner, rows in enumerate(owners):
        rows = set(rows)
        arcs = tuple(j for j in sink_arcs if set(support(bs.out_hat[:, j], 0)) & rows)
        if arcs:
            out.append(SinkPart(owner, arcs))
    covered = sorted(j for p in out for j in p.arcs)
    if covered != sorted(sink_arcs):
        raise PartitionError("sink arcs are not split cleanly among the vertices")
    return out


def pairings(items: Sequence[int]) -> Iterator[tuple[tuple[int, int], ...]]:
    """Perfect matchings of ``items`` in lexicographic order."""
    items = list(items)
    if not items:
        yield ()
        return
    if len(items) % 2:
        return
    first, rest = items[0], items[1:]
    for idx, partner in enumerate(rest):
        remaining = rest[:idx] + rest[idx + 1 :]
        for tail in pairings(remaining):
            yield ((first, partner),) + tail


def set_partitions(items: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All set partitions of ``items``; blocks ordered by first element."""
    items = list(items)
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for sub in set_partitions(rest):
        yield ((first,),) + sub
        for i, block in enumerate(sub):
            yield sub[:i] + ((first,) + block,) + sub[i + 1 :]


SinkPartition = tuple  # per SinkPart: tuple of groups


def sink_groupings(
    bs: BoundarySystem,
    vp: VertexPartition,
    sd: SourceDecomposition,
    all_partitions: bool = False,
) -> Iterator[SinkPartition]:
    """Candidate groupings of the sink arcs, one group per sink vertex.

    The default policy pairs arcs (each sink carries one edge); parts with
    an odd number of arcs make the stream empty.
    """
    parts = sink_parts(bs, vp, sd)
    gen = set_partitions if all_partitions else pairings
    if not all_partitions and any(len(p.arcs) % 2 for p in parts):
        return iter(())
    return itertools.product(*[list(gen(p.arcs)) for p in parts])


@dataclass(frozen=True)
class Layout:
    """Incidence matrices of the rebuilt multi digraph.  Vertices are
    ordered transient, sources, sinks; ``sink_owner[z]`` is the non-sink
    vertex feeding sink ``z``."""

    incidence: IncidencePair
    n: int
    k: int
    n_sinks: int
    sink_groups: tuple[tuple[int, ...], ...]
    sink_owner: tuple[int, ...]

    @property
    def roles(self) -> tuple[str, ...]:
        return (TRANSIENT,) * self.n + (SOURCE,) * self.k + (SINK,) * self.n_sinks

    @property
    def digraph(self) -> MultiDigraph:
        return self.incidence.digraph()


def build_incidence(
    bs: BoundarySystem,
    vp: VertexPartition,
    sd: SourceDecomposition,
    partition: SinkPartition,
) -> Layout:
    a_plus, a_minus = collapse(vp.line_adjacency, vp.classes)
    parts = sink_parts(bs, vp, sd)
    groups, owners = [], []
    for part, part_groups in zip(parts, partition):
        for g in part_groups:
            groups.append(tuple(g))
            owners.append(part.owner)
    pair = augment(a_plus, a_minus, sd.blocks, groups)
    layout = Layout(pair, vp.n, sd.k, len(groups), tuple(groups), tuple(owners))
    if pair.n_vertices != layout.n + layout.k + layout.n_sinks:
        raise AssertionError("incidence row count disagrees with the vertex layout")
    return layout


def multi_digraph_adjacency(p: IncidencePair) -> np.ndarray:
    """``A_plus A_minus^T``; entry ``(i, j)`` counts arcs from ``j`` to ``i``."""
    return p.plus @ p.minus.T


def edge_indices(AG: np.ndarray, p: IncidencePair) -> dict[tuple[int, int], tuple[tuple[int, ...], tuple[int, ...]]]:
    """For ``i < j`` joined by an arc: (arcs ``j -> i``, arcs ``i -> j``)."""
    out = {}
    n = AG.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if AG[i, j] + AG[j, i] == 0:
                continue
            ij = tuple(int(q) for q in np.flatnonzero(p.plus[i] & p.minus[j]))
            ji = tuple(int(q) for q in np.flatnonzero(p.plus[j] & p.minus[i]))
            if len(ij) != AG[i, j] or len(ji) != AG[j, i]:
                raise AssertionError(f"arc sets between {i} and {j} disagree with the adjacency")
            out[(i, j)] = (ij, ji)
    return out


ALLOWED_FORMS = {(2, 0), (1, 1), (0, 2), (0, 0)}


def check_conditions(bs: BoundarySystem, AG: np.ndarray, edge_map: dict) -> list[Diagnosis]:
    """Every vertex pair carries 0 or 2 arcs; concurrent pairs share a flow
    direction with distinct speeds, countercurrent pairs have one component
    of each direction.  Returns the failures in vertex-pair order."""
    fails = []
    for i in np.flatnonzero(np.diag(AG)):
        fails.append(
            Diagnosis(PAIR_FORM, f"vertex {i + 1} carries a loop", {"vertex": int(i), "count": int(AG[i, i])})
        )
    n = AG.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            counts = (int(AG[i, j]), int(AG[j, i]))
            if counts not in ALLOWED_FORMS:
                fails.append(
                    Diagnosis(
                        PAIR_FORM,
                        f"vertices ({i + 1},{j + 1}) carry arc counts {counts}",
                        {"vertices": (i, j), "counts": counts},
                    )
                )
                continue
            if counts == (0, 0):
                continue
            ij, ji = edge_map[(i, j)]
            k, l = ij + ji
            w = {"vertices": (i, j), "counts": counts, "components": (k, l)}
            kp, lp = bs.is_plus(k), bs.is_plus(l)
            if counts == (1, 1):
                if kp == lp:
                    side = "J+" if kp else "J-"
                    fails.append(
                        Diagnosis(
                            EDGE_IDENTITY,
                            f"vertices ({i + 1},{j + 1}) counts {counts}: components ({k + 1},{l + 1}) both in {side}",
                            w,
                        )
                    )
            elif kp != lp:
                fails.append(
                    Diagnosis(
                        EDGE_IDENTITY,
                        f"vertices ({i + 1},{j + 1}) counts {counts}: concurrent components ({k + 1},{l + 1}) flow in opposite directions",
                        w,
                    )
                )
            elif abs(bs.speeds[k] - bs.speeds[l]) <= bs.tol:
                fails.append(
                    Diagnosis(
                        EDGE_IDENTITY,
                        f"vertices ({i + 1},{j + 1}) counts {counts}: concurrent components ({k + 1},{l + 1}) share speed {bs.speeds[k]}",
                        w,
                    )
                )
    return fails


CONCURRENT, COUNTERCURRENT = "concurrent", "countercurrent"


@dataclass(frozen=True)
class NetworkEdge:
    x0: int
    x1: int
    components: tuple[int, int]
    kind: str

    @property
    def endpoints(self) -> frozenset:
        return frozenset((self.x0, self.x1))


@dataclass(frozen=True)
class VertexSystem:
    vertex: int
    rows: tuple[int, ...]
    out_components: tuple[int, ...]
    in_components: tuple[int, ...]
    xi_out: np.ndarray = field(compare=False)
    xi_in: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class RealizedNetwork:
    roles: tuple[str, ...]
    edges: tuple[NetworkEdge, ...]
    vertex_systems: tuple[VertexSystem, ...]
    arcs: MultiDigraph
    j_plus: tuple[int, ...]
    speeds: tuple

    @property
    def n_vertices(self) -> int:
        return len(self.roles)

    def edge_pairs(self) -> set[frozenset]:
        return {frozenset(e.components) for e in self.edges}


def assemble_network(
    bs: BoundarySystem,
    vp: VertexPartition,
    sd: SourceDecomposition,
    layout: Layout,
    AG: np.ndarray,
    edge_map: dict,
) -> RealizedNetwork:
    """Glue arc pairs into undirected edges and localize the boundary rows
    at each non-sink vertex."""
    if check_conditions(bs, AG, edge_map):
        raise ValueError("edge conditions fail; nothing to assemble")
    g = layout.digraph
    edges = []
    for (i, j), (ij, ji) in edge_map.items():
        comps = ij + ji
        p = comps[0]
        tail, head = g.arcs[p]
        x0, x1 = (tail, head) if bs.is_plus(p) else (head, tail)
        if len(ij) == 1:
            kind = COUNTERCURRENT
            order = tuple(sorted(comps, key=lambda q: (not bs.is_plus(q), q)))
        else:
            kind = CONCURRENT
            order = tuple(sorted(comps, key=lambda q: (-bs.speeds[q], q)))
        edges.append(NetworkEdge(int(x0), int(x1), order, kind))
    edges.sort(key=lambda e: min(e.components))

    cs = vp.classes
    systems = []
    for i in range(vp.n):
        rows, outs, ins = vp.parts[i], cs.v_out[i], cs.v_in[vp.match[i]]
        systems.append(_vertex_system(bs, i, rows, outs, ins))
    for b in range(sd.k):
        systems.append(_vertex_system(bs, vp.n + b, sd.block_rows[b], sd.blocks[b], ()))
    return RealizedNetwork(layout.roles, tuple(edges), tuple(systems), g, bs.j_plus, bs.speeds)


def _vertex_system(bs, vertex, rows, outs, ins) -> VertexSystem:
    return VertexSystem(
        vertex,
        tuple(rows),
        tuple(outs),
        tuple(ins),
        submatrix(bs.xi_out, rows, outs),
        submatrix(bs.xi_in, rows, ins),
    )


@dataclass
class Attempt:
    partition: SinkPartition
    layout: Layout
    adjacency: np.ndarray
    edge_map: dict
    failures: list[Diagnosis]


@dataclass
class RealizationResult:
    status: str
    report: AssumptionReport
    network: RealizedNetwork | None = None
    diagnoses: list[Diagnosis] = field(default_factory=list)
    partition: VertexPartition | None = None
    sources: SourceDecomposition | None = None
    attempts: list[Attempt] = field(default_factory=list)
    partitions_tried: int = 0
    successes: int = 0
    search_complete: bool = True

    @property
    def realizable(self) -> bool:
        return self.status == REALIZABLE


MAX_RECORDED_ATTEMPTS = 20


def _attempt(bs, vp, sd, partition) -> tuple[Attempt, RealizedNetwork | None]:
    layout = build_incidence(bs, vp, sd, partition)
    AG = multi_digraph_adjacency(layout.incidence)
    edge_map = edge_indices(AG, layout.incidence)
    failures = check_conditions(bs, AG, edge_map)
    net = None if failures else assemble_network(bs, vp, sd, layout, AG, edge_map)
    return Attempt(partition, layout, AG, edge_map, failures), net


def _prepare(bs):
    report = check_assumptions(bs)
    if not report.ok:
        return report, None, None, []
    vp = vertex_partition(bs, report)
    sd = source_decomposition(bs, vp)
    return report, vp, sd, sink_parts(bs, vp, sd)


def iter_realizations(
    bs: BoundarySystem, budget: int | None = None, all_partitions: bool = False
) -> Iterator[tuple[SinkPartition, RealizedNetwork]]:
    """Every successful sink grouping within the budget, in enumeration
    order."""
    budget = default_budget() if budget is None else budget
    report, vp, sd, parts = _prepare(bs)
    if vp is None:
        return
    for tried, partition in enumerate(sink_groupings(bs, vp, sd, all_partitions)):
        if parts and tried >= budget:
            return
        _, net = _attempt(bs, vp, sd, partition)
        if net is not None:
            yield partition, net


def realize(bs: BoundarySystem, budget: int | None = None, all_partitions: bool = False) -> RealizationResult:
    """Run the full pipeline.

    Sink groupings are tried in enumeration order up to ``budget``
    (the grouping of a sink-free system is free); the first success is
    returned and the remaining budget is spent counting further successes.
    """
    budget = default_budget() if budget is None else budget
    report, vp, sd, parts = _prepare(bs)
    result = RealizationResult(NOT_REALIZABLE, report, partition=vp, sources=sd)
    if vp is None:
        result.diagnoses = list(report.diagnoses)
        return result
    odd = [p for p in parts if len(p.arcs) % 2]
    if odd and not all_partitions:
        p = odd[0]
        result.diagnoses.append(
            Diagnosis(
                ODD_SINK_COUNT,
                f"vertex {p.owner + 1} feeds an odd number ({len(p.arcs)}) of sink arcs",
                {"vertex": p.owner, "arcs": p.arcs},
            )
        )
        return result

    stream = sink_groupings(bs, vp, sd, all_partitions)
    for partition in stream:
        if parts and result.partitions_tried >= budget:
            result.search_complete = False
            break
        result.partitions_tried += 1
        attempt, net = _attempt(bs, vp, sd, partition)
        if len(result.attempts) < MAX_RECORDED_ATTEMPTS:
            result.attempts.append(attempt)
        if net is not None:
            result.successes += 1
            if result.network is None:
                result.network = net
                result.status = REALIZABLE
        elif result.network is None:
            result.diagnoses.extend(attempt.failures)

    if result.network is not None:
        result.diagnoses = []
    elif not result.search_complete:
        result.status = BUDGET_EXHAUSTED
        result.diagnoses.append(
            Diagnosis(
                BUDGET_EXHAUSTED,
                f"no realization among the first {result.partitions_tried} sink groupings (budget {budget})",
                {"budget": budget, "tried": result.partitions_tried},
            )
        )
    elif parts and result.partitions_tried > 0:
        result.diagnoses.append(
            Diagnosis(
                SINKS_EXHAUSTED,
                f"all {result.partitions_tried} sink groupings fail",
                {"tried": result.partitions_tried},
            )
        )
    return result
