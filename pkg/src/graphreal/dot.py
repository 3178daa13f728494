"""DOT export of realized networks and multi digraphs, plus a reader for
the subset of DOT written here."""
from __future__ import annotations

import re
from dataclasses import dataclass

from graphreal.linedigraph import MultiDigraph
from graphreal.realize import CONCURRENT, SINK, SOURCE, RealizedNetwork

_SHAPES = {SOURCE: "triangle", SINK: "invtriangle"}
_KIND_LABEL = {CONCURRENT: "conc"}


def _node_lines(roles) -> list[str]:
    return [
        f'  v{v + 1} [label="v{v + 1}", role="{r}", shape={_SHAPES.get(r, "circle")}];'
        for v, r in enumerate(roles)
    ]


def network_to_dot(net: RealizedNetwork) -> str:
    """Undirected graph; each edge is written ``x0 -- x1``."""
    lines = ["graph network {"] + _node_lines(net.roles)
    for i, e in enumerate(net.edges):
        j1, j2 = (q + 1 for q in e.components)
        kind = _KIND_LABEL.get(e.kind, "counter")
        lines.append(f'  v{e.x0 + 1} -- v{e.x1 + 1} [label="e_{i + 1}: ({j1},{j2}) {kind}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def digraph_to_dot(g: MultiDigraph, roles=None) -> str:
    roles = roles if roles is not None else g.roles
    lines = ["digraph arcs {"] + _node_lines(roles)
    for q, (t, h) in enumerate(g.arcs):
        lines.append(f'  v{t + 1} -> v{h + 1} [label="{q + 1}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


_NODE_RE = re.compile(r'^\s*v(\d+)\s*\[label="[^"]*",\s*role="(\w+)",\s*shape=(\w+)\];\s*$')
_EDGE_RE = re.compile(r'^\s*v(\d+)\s*(--|->)\s*v(\d+)\s*\[label="([^"]*)"\];\s*$')
_EDGE_LABEL_RE = re.compile(r"^e_(\d+): \((\d+),(\d+)\) (conc|counter)$")


@dataclass(frozen=True)
class DotGraph:
    directed: bool
    roles: dict[int, str]
    shapes: dict[int, str]
    edges: list[tuple[int, int, str]]  # 0-based endpoints, raw label


def parse_dot(text: str) -> DotGraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split()[0]
    if header not in ("graph", "digraph") or lines[-1].strip() != "}":
        raise ValueError("not a graph written by this tool")
    roles, shapes, edges = {}, {}, []
    for ln in lines[1:-1]:
        if m := _NODE_RE.match(ln):
            v = int(m.group(1)) - 1
            roles[v], shapes[v] = m.group(2), m.group(3)
        elif m := _EDGE_RE.match(ln):
            edges.append((int(m.group(1)) - 1, int(m.group(3)) - 1, m.group(4)))
        else:
            raise ValueError(f"unrecognized DOT line: {ln.strip()}")
    return DotGraph(header == "digraph", roles, shapes, edges)


def network_edges(g: DotGraph) -> list[tuple[int, int, tuple[int, int], str]]:
    """``(x0, x1, components (0-based), kind)`` per edge of a network DOT."""
    out = []
    for u, v, label in g.edges:
        m = _EDGE_LABEL_RE.match(label)
        if not m:
            raise ValueError(f"bad edge label {label!r}")
        out.append((u, v, (int(m.group(2)) - 1, int(m.group(3)) - 1), m.group(4)))
    return out
