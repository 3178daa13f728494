"""Compile a metric graph problem into a flat boundary system.

Every edge carries a strictly hyperbolic 2x2 system with eigenvalues
``lam_minus < lam_plus`` and diagonalizer ``F = (f_plus | f_minus)``.  The
Riemann invariants ``u1`` (speed ``lam_plus``) and ``u2`` (speed
``lam_minus``) are outgoing or incoming at each endpoint depending on the
eigenvalue signs and on which endpoint sits at x=0.  Vertex conditions
``Phi_v p(v) = 0`` are rewritten in Riemann form, split into outgoing and
incoming parts and stacked into one global system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from graphreal import binmat
from graphreal.binmat import StructureError, as_matrix, submatrix
from graphreal.flowconn import BlockError, VertexBoundaryBlock, check_block
from graphreal.linedigraph import MultiDigraph
from graphreal.realize import BoundarySystem, SINK, SOURCE, TRANSIENT

DET_RTOL = 1e-9
HYPERBOLIC_TOL = 1e-12


class HyperbolicityError(ValueError):
    """The edge matrix lacks two distinct real eigenvalues."""


class WellPosednessError(ValueError):
    def __init__(self, failures: dict[int, float]):
        detail = ", ".join(f"v{v + 1}: |det|={d:.3g}" for v, d in sorted(failures.items()))
        super().__init__(f"vertex conditions do not determine the outgoing data ({detail})")
        self.failures = failures


def _normalize(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    nz = np.flatnonzero(np.abs(v) > HYPERBOLIC_TOL)
    if v[nz[0]] < 0:
        v = -v
    return v


def diagonalize_edge(M) -> tuple[float, float, np.ndarray]:
    """Closed-form eigen-decomposition of a 2x2 matrix.

    Returns ``(lam_plus, lam_minus, F)`` with ``lam_minus < lam_plus`` and
    ``M F = F diag(lam_plus, lam_minus)``; columns of ``F`` have unit length
    and a positive first nonzero coordinate.
    """
    M = np.asarray(as_matrix(M), dtype=float)
    if M.shape != (2, 2):
        raise StructureError(f"edge matrix must be 2x2, got {M.shape}")
    (a, b), (c, d) = M
    disc = (a - d) ** 2 + 4 * b * c
    scale = max(1.0, float(np.abs(M).max()) ** 2)
    if disc <= HYPERBOLIC_TOL * scale:
        raise HyperbolicityError(f"discriminant {disc:.3g} is not positive")
    root = math.sqrt(disc)
    lam_plus, lam_minus = (a + d + root) / 2, (a + d - root) / 2
    cols = []
    for lam in (lam_plus, lam_minus):
        # pick the better conditioned of the two null-vector formulas
        v1 = np.array([b, lam - a])
        v2 = np.array([lam - d, c])
        v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
        cols.append(_normalize(v))
    return lam_plus, lam_minus, np.column_stack(cols)


@dataclass(frozen=True)
class EdgeData:
    """One edge; ``x0``/``x1`` are the vertices at x=0 and x=1."""

    x0: int
    x1: int
    lam_plus: object
    lam_minus: object
    F: np.ndarray
    M: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.x0 == self.x1:
            raise StructureError("edge endpoints coincide")
        if not self.lam_minus < self.lam_plus:
            raise HyperbolicityError(
                f"need lam_minus < lam_plus, got {self.lam_minus} and {self.lam_plus}"
            )
        if self.lam_plus == 0 or self.lam_minus == 0:
            raise HyperbolicityError("zero eigenvalue: flow direction undefined")
        F = as_matrix(self.F)
        if F.shape != (2, 2):
            raise StructureError("diagonalizer must be 2x2")
        det = F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0]
        if det == 0 or (not binmat.is_exact(F) and abs(det) <= DET_RTOL * np.prod(np.linalg.norm(F, axis=0))):
            raise StructureError("diagonalizer is singular")
        object.__setattr__(self, "F", F)

    @classmethod
    def from_matrix(cls, x0: int, x1: int, M) -> "EdgeData":
        lp, lm, F = diagonalize_edge(M)
        return cls(x0, x1, lp, lm, F, np.asarray(as_matrix(M), dtype=float))

    @property
    def alpha(self) -> int:
        """Number of positive eigenvalues."""
        return int(self.lam_plus > 0) + int(self.lam_minus > 0)

    def endpoint(self, v: int) -> int:
        """Parameter value (0 or 1) of vertex ``v`` on this edge."""
        if v == self.x0:
            return 0
        if v == self.x1:
            return 1
        raise ValueError(f"vertex {v} is not an endpoint")


@dataclass(frozen=True)
class MetricGraphProblem:
    n_vertices: int
    edges: tuple[EdgeData, ...]
    phi: dict = field(default_factory=dict)
    labels: tuple = ()  # external vertex ids, default 1..n

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        labels = tuple(self.labels) or tuple(range(1, self.n_vertices + 1))
        if len(labels) != self.n_vertices or len(set(labels)) != len(labels):
            raise StructureError("vertex labels must be distinct, one per vertex")
        object.__setattr__(self, "labels", labels)
        pairs = set()
        for j, e in enumerate(self.edges):
            for v in (e.x0, e.x1):
                if not 0 <= v < self.n_vertices:
                    raise StructureError(f"edge {j + 1} references an unknown vertex")
            key = frozenset((e.x0, e.x1))
            if key in pairs:
                raise StructureError(f"edge {j + 1} duplicates an earlier edge")
            pairs.add(key)
        if not self.edges:
            raise StructureError("graph has no edges")
        seen, stack = {0}, [0]
        while stack:
            u = stack.pop()
            for v in self.neighbours(u):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != self.n_vertices:
            raise StructureError("graph is not connected")
        object.__setattr__(self, "phi", {int(v): as_matrix(p) for v, p in self.phi.items()})

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbours(self, v: int) -> list[int]:
        return [e.x1 if e.x0 == v else e.x0 for e in self.edges if v in (e.x0, e.x1)]

    def incident(self, v: int) -> tuple[int, ...]:
        """Edge indices at ``v`` in ascending order (the column order of
        ``Phi_v``)."""
        return tuple(j for j, e in enumerate(self.edges) if v in (e.x0, e.x1))


# outgoing flags (u1, u2) by (alpha, endpoint)
_OUTGOING = {
    (2, 0): (True, True),
    (2, 1): (False, False),
    (1, 0): (True, False),
    (1, 1): (False, True),
    (0, 0): (False, False),
    (0, 1): (True, True),
}


@dataclass(frozen=True)
class Classification:
    alpha: tuple[int, ...]
    outgoing: dict  # (vertex, edge) -> (bool, bool)
    k: tuple[int, ...]
    roles: tuple[str, ...]
    components: tuple[tuple[int, int], ...]  # global index -> (edge, 1|2)
    n_plus: int

    @property
    def J1(self):
        return tuple(j for j, a in enumerate(self.alpha) if a == 1)

    @property
    def J2(self):
        return tuple(j for j, a in enumerate(self.alpha) if a == 2)

    @property
    def J0(self):
        return tuple(j for j, a in enumerate(self.alpha) if a == 0)

    def index(self, edge: int, which: int) -> int:
        return self.components.index((edge, which))


def count_outgoing(problem: MetricGraphProblem, v: int, alpha: tuple[int, ...]) -> int:
    """Outgoing value count at ``v``, cross-checked between the per-edge
    sum, the split by endpoint and the flag table."""
    J = problem.incident(v)
    ends = {j: problem.edges[j].endpoint(v) for j in J}
    k1 = sum(2 * (1 - alpha[j]) * ends[j] + alpha[j] for j in J)
    J0v = [j for j in J if ends[j] == 0]
    J1v = [j for j in J if ends[j] == 1]
    k2 = sum(alpha[j] for j in J0v) + sum(2 - alpha[j] for j in J1v)
    k3 = sum(1 for j in J if alpha[j] == 1) + 2 * (
        sum(1 for j in J0v if alpha[j] == 2) + sum(1 for j in J1v if alpha[j] == 0)
    )
    k4 = sum(sum(_OUTGOING[(alpha[j], ends[j])]) for j in J)
    if not k1 == k2 == k3 == k4:
        raise AssertionError(f"outgoing counts disagree at vertex {v}: {k1}, {k2}, {k3}, {k4}")
    return k1


def classify(problem: MetricGraphProblem) -> Classification:
    alpha = tuple(e.alpha for e in problem.edges)
    outgoing = {}
    roles, ks = [], []
    for v in range(problem.n_vertices):
        J = problem.incident(v)
        ends = {j: problem.edges[j].endpoint(v) for j in J}
        for j in J:
            outgoing[(v, j)] = _OUTGOING[(alpha[j], ends[j])]
        if all((alpha[j], ends[j]) in {(2, 1), (0, 0)} for j in J):
            roles.append(SINK)
        elif all((alpha[j], ends[j]) in {(0, 1), (2, 0)} for j in J):
            roles.append(SOURCE)
        else:
            roles.append(TRANSIENT)
        ks.append(count_outgoing(problem, v, alpha))
    J0 = [j for j, a in enumerate(alpha) if a == 0]
    J1 = [j for j, a in enumerate(alpha) if a == 1]
    J2 = [j for j, a in enumerate(alpha) if a == 2]
    plus = [(j, 1) for j in sorted(J1 + J2)] + [(j, 2) for j in J2]
    minus = [(j, 1) for j in J0] + [(j, 2) for j in sorted(J1 + J0)]
    cls = Classification(alpha, outgoing, tuple(ks), tuple(roles), tuple(plus + minus), len(plus))
    total = sum(k for k, r in zip(ks, roles) if r != SINK)
    if total != 2 * problem.m:
        raise AssertionError(f"outgoing counts sum to {total}, expected {2 * problem.m}")
    return cls


@dataclass(frozen=True)
class VertexAssembly:
    """Column selections of ``F(v) = diag(F^j)`` at one vertex.  Columns
    of ``F(v)`` are ``(edge, 1|2)`` in incident-edge order."""

    vertex: int
    columns: tuple[tuple[int, int], ...]
    out_columns: tuple[tuple[int, int], ...]
    in_columns: tuple[tuple[int, int], ...]
    F: np.ndarray
    F_out: np.ndarray
    F_in: np.ndarray


def _blockdiag(blocks: list[np.ndarray]) -> np.ndarray:
    exact = all(binmat.is_exact(b) for b in blocks)
    n = 2 * len(blocks)
    out = binmat.zeros((n, n), exact=exact)
    for i, b in enumerate(blocks):
        out[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = b
    return out


def build_contraction(problem: MetricGraphProblem, cls: Classification, v: int) -> VertexAssembly:
    J = problem.incident(v)
    F = _blockdiag([problem.edges[j].F for j in J])
    columns = tuple((j, c) for j in J for c in (1, 2))
    out_idx, in_idx = [], []
    for pos, (j, c) in enumerate(columns):
        (out_idx if cls.outgoing[(v, j)][c - 1] else in_idx).append(pos)
    rows = range(F.shape[0])
    return VertexAssembly(
        v,
        columns,
        tuple(columns[p] for p in out_idx),
        tuple(columns[p] for p in in_idx),
        F,
        submatrix(F, rows, out_idx),
        submatrix(F, rows, in_idx),
    )


def _to_float(A: np.ndarray) -> np.ndarray:
    return np.asarray(A, dtype=float)


@dataclass(frozen=True)
class WellPosedness:
    ok: bool
    det: float
    threshold: float
    solved_map: np.ndarray | None = None

    def __bool__(self) -> bool:
        return self.ok


def wellposed(phi, asm: VertexAssembly) -> WellPosedness:
    """``Phi F_out`` must be square and nonsingular; on success the map
    ``u_out = -(Phi F_out)^{-1} Phi F_in u_in`` is returned."""
    phi = as_matrix(phi)
    k = asm.F_out.shape[1]
    if phi.shape != (k, asm.F.shape[0]):
        raise StructureError(f"Phi must be {k}x{asm.F.shape[0]}, got {phi.shape}")
    A = _to_float(phi @ asm.F_out)
    B = _to_float(phi @ asm.F_in)
    det = float(np.linalg.det(A)) if k else 1.0
    if not k:
        return WellPosedness(True, det, 0.0, np.zeros((0, B.shape[1])))
    # smallest singular value against the round-off scale of the factors, so
    # a product that vanishes up to rounding is not measured against itself
    sigma_min = float(np.linalg.svd(A, compute_uv=False)[-1])
    threshold = DET_RTOL * float(np.linalg.norm(_to_float(phi), 2) * np.linalg.norm(_to_float(asm.F_out), 2))
    if not sigma_min > threshold:
        return WellPosedness(False, det, threshold)
    return WellPosedness(True, det, threshold, -np.linalg.solve(A, B))


@dataclass(frozen=True)
class CompiledSystem:
    system: BoundarySystem
    classification: Classification
    assemblies: dict
    row_blocks: dict  # vertex -> tuple of global rows
    arcs: MultiDigraph  # component q runs along arcs[q] in flow direction
    edge_components: tuple[tuple[int, int], ...]  # per edge: (u1 index, u2 index)
    wellposedness: dict

    @property
    def roles(self) -> tuple[str, ...]:
        return self.classification.roles


def vertex_blocks(problem: MetricGraphProblem, compiled: "CompiledSystem | None" = None) -> dict:
    """``Psi_v`` split into outgoing and incoming parts for every non-sink
    vertex, with global component labels on the columns."""
    compiled = compiled or assemble_global(problem, check=False)
    cls = compiled.classification
    out = {}
    for v, asm in compiled.assemblies.items():
        phi = problem.phi[v]
        out[v] = (
            phi @ asm.F_out,
            phi @ asm.F_in,
            tuple(cls.index(j, c) for j, c in asm.out_columns),
            tuple(cls.index(j, c) for j, c in asm.in_columns),
        )
    return out


@dataclass(frozen=True)
class VertexCheck:
    vertex: int
    role: str
    tag: str
    verdict: binmat.Verdict


def check_vertices(
    problem: MetricGraphProblem, compiled: "CompiledSystem | None" = None, tol: float | None = None
) -> list[VertexCheck]:
    """Nonzero outgoing block, full connectivity at transient vertices and
    irreducibility at sources."""
    compiled = compiled or assemble_global(problem, check=False)
    roles = compiled.roles
    out = []
    for v, (po, pi, oa, ia) in vertex_blocks(problem, compiled).items():
        try:
            block = VertexBoundaryBlock(po, pi, oa, ia, tol=tol)
        except BlockError as err:
            out.append(VertexCheck(v, roles[v], "outflow-nonzero", binmat.Verdict(False, (err.kind, err.index), str(err))))
            continue
        out.append(VertexCheck(v, roles[v], "outflow-nonzero", binmat.PASS))
        tag = "full-connectivity" if roles[v] == TRANSIENT else "source-irreducible"
        out.append(VertexCheck(v, roles[v], tag, check_block(block)))
    return out


def assemble_global(problem: MetricGraphProblem, check: bool = True) -> CompiledSystem:
    """Stack the per-vertex Riemann-form conditions into ``(xi_out, xi_in)``.

    Rows follow the non-sink vertices in vertex order; column ``q`` is the
    component ``classification.components[q]``.  Components with positive
    speed come first and form ``j_plus``.
    """
    cls = classify(problem)
    size = 2 * problem.m
    exact = all(binmat.is_exact(e.F) for e in problem.edges) and all(
        binmat.is_exact(p) for p in problem.phi.values()
    )
    xi_out = binmat.zeros((size, size), exact=exact)
    xi_in = binmat.zeros((size, size), exact=exact)
    assemblies, row_blocks, wp = {}, {}, {}
    failures = {}
    row = 0
    for v in range(problem.n_vertices):
        if cls.roles[v] == SINK:
            if v in problem.phi and problem.phi[v].shape[0]:
                raise StructureError(f"sink v{v + 1} must not carry conditions")
            continue
        if v not in problem.phi:
            raise StructureError(f"missing conditions at v{v + 1}")
        asm = build_contraction(problem, cls, v)
        phi = problem.phi[v]
        wp[v] = wellposed(phi, asm)
        if check and not wp[v]:
            failures[v] = abs(wp[v].det)
        k = cls.k[v]
        rows = tuple(range(row, row + k))
        row += k
        assemblies[v], row_blocks[v] = asm, rows
        psi_out, psi_in = phi @ asm.F_out, phi @ asm.F_in
        for c, col in enumerate(asm.out_columns):
            xi_out[row - k : row, cls.index(*col)] = psi_out[:, c]
        for c, col in enumerate(asm.in_columns):
            xi_in[row - k : row, cls.index(*col)] = psi_in[:, c]
    if failures:
        raise WellPosednessError(failures)
    if row != size:
        raise AssertionError(f"assembled {row} rows for {size} components")

    speeds, arcs = [], []
    for j, c in cls.components:
        e = problem.edges[j]
        lam = e.lam_plus if c == 1 else e.lam_minus
        speeds.append(abs(lam))
        arcs.append((e.x0, e.x1) if lam > 0 else (e.x1, e.x0))
    n_plus = cls.n_plus
    bs = BoundarySystem(
        xi_out, xi_in, tuple(range(n_plus)), tuple(range(n_plus, size)), tuple(speeds)
    )
    edge_components = tuple((cls.index(j, 1), cls.index(j, 2)) for j in range(problem.m))
    return CompiledSystem(
        bs, cls, assemblies, row_blocks, MultiDigraph(problem.n_vertices, tuple(arcs)), edge_components, wp
    )
