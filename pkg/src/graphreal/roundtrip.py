"""Compare a realized network against the graph problem it was compiled from.

The flat boundary system carries no rows for sinks, so a sink shared by
several edges cannot be told apart from several leaf sinks.  The reference
graph therefore splits every sink into one leaf per incident edge before
the comparison.
"""
from __future__ import annotations

from dataclasses import dataclass

from graphreal.iso import arc_preserving_map
from graphreal.linedigraph import MultiDigraph
from graphreal.netcompile import CompiledSystem, MetricGraphProblem
from graphreal.realize import SINK, RealizedNetwork, iter_realizations


@dataclass(frozen=True)
class Reference:
    arcs: MultiDigraph
    roles: tuple[str, ...]
    x0: tuple[int, ...]  # per edge, vertex at x=0 after splitting
    edge_pairs: tuple[tuple[int, int], ...]

    @property
    def pairs(self) -> frozenset:
        return frozenset(frozenset(p) for p in self.edge_pairs)


def reference_graph(problem: MetricGraphProblem, compiled: CompiledSystem) -> Reference:
    roles = list(compiled.roles)
    n = problem.n_vertices
    leaf = {}
    for j, e in enumerate(problem.edges):
        for v in (e.x0, e.x1):
            if compiled.roles[v] == SINK:
                leaf[(v, j)] = n + len(leaf)
                roles.append(SINK)

    def place(v, j):
        return leaf.get((v, j), v)

    arcs = []
    for q, (t, h) in enumerate(compiled.arcs.arcs):
        j = compiled.classification.components[q][0]
        arcs.append((place(t, j), place(h, j)))
    x0 = tuple(place(e.x0, j) for j, e in enumerate(problem.edges))
    # original sinks are replaced by their leaves
    keep = [v for v in range(len(roles)) if not (v < n and compiled.roles[v] == SINK)]
    relabel = {v: i for i, v in enumerate(keep)}
    return Reference(
        MultiDigraph(len(keep), tuple((relabel[t], relabel[h]) for t, h in arcs)),
        tuple(roles[v] for v in keep),
        tuple(relabel[v] for v in x0),
        compiled.edge_components,
    )


def matches(ref: Reference, net: RealizedNetwork) -> dict[int, int] | None:
    """Vertex map from the realized network onto the reference that keeps
    arc labels, roles, edge pairs and edge orientations; None if absent."""
    if net.n_vertices != ref.arcs.n_vertices or net.edge_pairs() != ref.pairs:
        return None
    phi = arc_preserving_map(net.arcs, ref.arcs)
    if phi is None or len(phi) != net.n_vertices:
        return None
    if any(net.roles[v] != ref.roles[phi[v]] for v in phi):
        return None
    by_pair = {frozenset(p): j for j, p in enumerate(ref.edge_pairs)}
    for e in net.edges:
        j = by_pair[frozenset(e.components)]
        if phi[e.x0] != ref.x0[j]:
            return None
    return phi


@dataclass
class RoundTrip:
    ok: bool
    stage: str
    detail: str = ""
    tried: int = 0
    mapping: dict | None = None


def roundtrip(problem: MetricGraphProblem, compiled: CompiledSystem, budget: int | None = None) -> RoundTrip:
    ref = reference_graph(problem, compiled)
    tried = 0
    for _, net in iter_realizations(compiled.system, budget=budget):
        tried += 1
        phi = matches(ref, net)
        if phi is not None:
            return RoundTrip(True, "compare", f"matched after {tried} realization(s)", tried, phi)
    if tried == 0:
        return RoundTrip(False, "realize", "no realization found", 0)
    return RoundTrip(False, "compare", f"none of {tried} realization(s) matches the input graph", tried)
