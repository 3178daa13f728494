"""JSON documents for boundary systems, graph problems and realized networks.

All indices in files are 1-based.  Numbers are integers, decimal
literals or ``{"num": p, "den": q}``; a matrix holding only integers and
rationals is kept exact, a decimal literal anywhere in it switches that
matrix to floating point.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from graphreal.binmat import as_matrix, to_jsonable
from graphreal.netcompile import EdgeData, MetricGraphProblem
from graphreal.realize import BoundarySystem, RealizedNetwork

SCHEMA_VERSION = 1

_NUMBER = {
    "oneOf": [
        {"type": "number"},
        {
            "type": "object",
            "properties": {"num": {"type": "integer"}, "den": {"type": "integer", "not": {"const": 0}}},
            "required": ["num", "den"],
            "additionalProperties": False,
        },
    ]
}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _NUMBER}}
_INDEX_LIST = {"type": "array", "items": {"type": "integer", "minimum": 1}, "uniqueItems": True}
_HEADER = {
    "version": {"type": "integer", "const": SCHEMA_VERSION},
    "index_base": {"const": 1},
}

BOUNDARY_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "boundary_system"},
        **_HEADER,
        "m": {"type": "integer", "minimum": 1},
        "xi_out": _MATRIX,
        "xi_in": _MATRIX,
        "j_plus": _INDEX_LIST,
        "j_minus": _INDEX_LIST,
        "speeds": {"type": "array", "items": _NUMBER},
    },
    "required": ["kind", "m", "xi_out", "xi_in", "j_plus", "j_minus", "speeds"],
    "additionalProperties": False,
}

_EDGE = {
    "type": "object",
    "properties": {
        "id": {"type": "integer", "minimum": 1},
        "tail": {"type": "integer"},
        "head": {"type": "integer"},
        "x0": {"enum": ["tail", "head"]},
        "M": _MATRIX,
        "lambda": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
        "F": _MATRIX,
    },
    "required": ["id", "tail", "head"],
    "oneOf": [{"required": ["M"], "not": {"anyOf": [{"required": ["lambda"]}, {"required": ["F"]}]}},
              {"required": ["lambda", "F"], "not": {"required": ["M"]}}],
    "additionalProperties": False,
}

GRAPH_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "metric_graph"},
        **_HEADER,
        "vertices": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "uniqueItems": True},
        "edges": {"type": "array", "items": _EDGE, "minItems": 1},
        "vertex_conditions": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"vertex": {"type": "integer"}, "phi": _MATRIX},
                "required": ["vertex", "phi"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["kind", "vertices", "edges", "vertex_conditions"],
    "additionalProperties": False,
}


class InputError(ValueError):
    """Unreadable or invalid problem file."""


def _number(x) -> Any:
    if isinstance(x, dict):
        return Fraction(x["num"], x["den"])
    return x


def _matrix(rows, where: str) -> np.ndarray:
    rows = [[_number(x) for x in r] for r in rows]
    if rows and len({len(r) for r in rows}) > 1:
        raise InputError(f"{where}: ragged rows")
    return as_matrix(rows)


def _validate(doc, schema) -> None:
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise InputError(f"schema violation at {where}: {err.message}")


def parse_document(doc: dict) -> BoundarySystem | MetricGraphProblem:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InputError("document must be an object with a 'kind' field")
    kind = doc["kind"]
    if kind == "boundary_system":
        _validate(doc, BOUNDARY_SCHEMA)
        return _parse_boundary(doc)
    if kind == "metric_graph":
        _validate(doc, GRAPH_SCHEMA)
        return _parse_graph(doc)
    raise InputError(f"unknown kind {kind!r}")


def load(path: str | Path) -> BoundarySystem | MetricGraphProblem:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise InputError(f"cannot read {path}: {err.strerror}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise InputError(f"{path}: invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from err
    return parse_document(doc)


def _parse_boundary(doc) -> BoundarySystem:
    m = doc["m"]
    xo = _matrix(doc["xi_out"], "xi_out")
    xi = _matrix(doc["xi_in"], "xi_in")
    for name, mat in (("xi_out", xo), ("xi_in", xi)):
        if mat.shape != (2 * m, 2 * m):
            raise InputError(f"{name} must be {2 * m}x{2 * m}, got {mat.shape[0]}x{mat.shape[1] if mat.ndim == 2 else 0}")
    jp = [j - 1 for j in doc["j_plus"]]
    jm = [j - 1 for j in doc["j_minus"]]
    if sorted(jp + jm) != list(range(2 * m)):
        raise InputError("j_plus and j_minus must partition 1..2m")
    speeds = [_number(c) for c in doc["speeds"]]
    if len(speeds) != 2 * m:
        raise InputError(f"speeds must have {2 * m} entries")
    if any(not c > 0 for c in speeds):
        raise InputError("speeds must be positive")
    return BoundarySystem(xo, xi, tuple(jp), tuple(jm), tuple(speeds))


def _parse_graph(doc) -> MetricGraphProblem:
    ids = doc["vertices"]
    index = {v: i for i, v in enumerate(ids)}
    edges_doc = sorted(doc["edges"], key=lambda e: e["id"])
    if [e["id"] for e in edges_doc] != list(range(1, len(edges_doc) + 1)):
        raise InputError("edge ids must be 1..m")
    edges = []
    for e in edges_doc:
        where = f"edge {e['id']}"
        try:
            t, h = index[e["tail"]], index[e["head"]]
        except KeyError as err:
            raise InputError(f"{where}: unknown vertex {err.args[0]}") from None
        x0, x1 = (t, h) if e.get("x0", "tail") == "tail" else (h, t)
        try:
            if "M" in e:
                edges.append(EdgeData.from_matrix(x0, x1, _matrix(e["M"], where)))
            else:
                lp, lm = (_number(x) for x in e["lambda"])
                edges.append(EdgeData(x0, x1, lp, lm, _matrix(e["F"], where)))
        except ValueError as err:
            raise InputError(f"{where}: {err}") from err
    phi = {}
    for vc in doc["vertex_conditions"]:
        if vc["vertex"] not in index:
            raise InputError(f"conditions for unknown vertex {vc['vertex']}")
        v = index[vc["vertex"]]
        if v in phi:
            raise InputError(f"duplicate conditions for vertex {vc['vertex']}")
        phi[v] = _matrix(vc["phi"], f"phi at vertex {vc['vertex']}")
    try:
        return MetricGraphProblem(len(ids), tuple(edges), phi, tuple(ids))
    except ValueError as err:
        raise InputError(str(err)) from err


def boundary_document(bs: BoundarySystem) -> dict:
    return {
        "kind": "boundary_system",
        "version": SCHEMA_VERSION,
        "m": bs.m,
        "xi_out": to_jsonable(bs.xi_out),
        "xi_in": to_jsonable(bs.xi_in),
        "j_plus": [j + 1 for j in bs.j_plus],
        "j_minus": [j + 1 for j in bs.j_minus],
        "speeds": to_jsonable(list(bs.speeds)),
    }


def graph_document(problem: MetricGraphProblem) -> dict:
    labels = problem.labels
    edges = []
    for j, e in enumerate(problem.edges):
        d = {"id": j + 1, "tail": labels[e.x0], "head": labels[e.x1], "x0": "tail"}
        if e.M is not None:
            d["M"] = to_jsonable(e.M)
        else:
            d["lambda"] = to_jsonable([e.lam_plus, e.lam_minus])
            d["F"] = to_jsonable(e.F)
        edges.append(d)
    return {
        "kind": "metric_graph",
        "version": SCHEMA_VERSION,
        "vertices": list(labels),
        "edges": edges,
        "vertex_conditions": [
            {"vertex": labels[v], "phi": to_jsonable(problem.phi[v])} for v in sorted(problem.phi)
        ],
    }


def document(obj) -> dict:
    if isinstance(obj, BoundarySystem):
        return boundary_document(obj)
    if isinstance(obj, MetricGraphProblem):
        return graph_document(obj)
    raise TypeError(type(obj))


def network_document(net: RealizedNetwork) -> dict:
    return {
        "vertices": [{"id": v + 1, "role": r} for v, r in enumerate(net.roles)],
        "edges": [
            {
                "id": i + 1,
                "x0": e.x0 + 1,
                "x1": e.x1 + 1,
                "components": [q + 1 for q in e.components],
                "kind": e.kind,
            }
            for i, e in enumerate(net.edges)
        ],
        "arcs": [{"component": q + 1, "tail": t + 1, "head": h + 1} for q, (t, h) in enumerate(net.arcs.arcs)],
        "vertex_systems": [
            {
                "vertex": s.vertex + 1,
                "rows": [r + 1 for r in s.rows],
                "out_components": [q + 1 for q in s.out_components],
                "in_components": [q + 1 for q in s.in_components],
                "xi_out": to_jsonable(s.xi_out),
                "xi_in": to_jsonable(s.xi_in),
            }
            for s in net.vertex_systems
        ],
        "j_plus": [q + 1 for q in net.j_plus],
        "speeds": to_jsonable(list(net.speeds)),
    }


def dumps(doc) -> str:
    """Canonical text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
