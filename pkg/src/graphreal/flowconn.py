"""Flow connectivity at a single vertex.

A vertex block splits the boundary rows at a vertex into the coefficients
of outgoing data (``psi_out``, one column per outgoing arc) and of incoming
data (``psi_in``, one column per incoming arc).  Two arcs are flow connected
when some row has a nonzero coefficient for both.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from graphreal.binmat import (
    PASS,
    StructureError,
    Verdict,
    as_matrix,
    default_tol,
    hat,
    irreducible_components,
)


class BlockError(ValueError):
    """An outgoing coefficient column or row is identically zero."""

    def __init__(self, kind: str, index: int):
        super().__init__(f"zero {kind} {index + 1} in the outgoing block")
        self.kind = kind
        self.index = index


class VertexKindError(ValueError):
    pass


@dataclass(frozen=True)
class VertexBoundaryBlock:
    psi_out: np.ndarray
    psi_in: np.ndarray
    out_arcs: tuple[int, ...] = ()
    in_arcs: tuple[int, ...] = ()
    tol: float | None = field(default=None, compare=False)

    def __post_init__(self):
        psi_out = as_matrix(self.psi_out)
        if np.size(self.psi_in):
            psi_in = as_matrix(self.psi_in)
        else:
            psi_in = np.zeros((psi_out.shape[0], 0))
        if psi_in.shape[0] != psi_out.shape[0]:
            raise StructureError("outgoing and incoming blocks need the same row count")
        out_arcs = tuple(self.out_arcs) or tuple(range(psi_out.shape[1]))
        in_arcs = tuple(self.in_arcs) or tuple(range(psi_in.shape[1]))
        if len(out_arcs) != psi_out.shape[1] or len(in_arcs) != psi_in.shape[1]:
            raise StructureError("arc labels do not match block widths")
        object.__setattr__(self, "psi_out", psi_out)
        object.__setattr__(self, "psi_in", psi_in)
        object.__setattr__(self, "out_arcs", out_arcs)
        object.__setattr__(self, "in_arcs", in_arcs)
        if self.tol is None:
            tol = default_tol(psi_out)
            if psi_in.size:
                tol = max(tol, default_tol(psi_in))
            object.__setattr__(self, "tol", tol)
        h = self.out_hat
        zero_cols = np.flatnonzero(~h.any(axis=0))
        if zero_cols.size:
            raise BlockError("column", int(zero_cols[0]))
        zero_rows = np.flatnonzero(~h.any(axis=1))
        if zero_rows.size:
            raise BlockError("row", int(zero_rows[0]))

    @property
    def k(self) -> int:
        return self.psi_out.shape[0]

    @property
    def out_hat(self) -> np.ndarray:
        return hat(self.psi_out, self.tol)

    @property
    def in_hat(self) -> np.ndarray:
        return hat(self.psi_in, self.tol)


def transient_connectivity(b: VertexBoundaryBlock) -> np.ndarray:
    """``C[l, j] = 1`` iff outgoing arc ``l`` and incoming arc ``j`` share a
    row."""
    return hat(b.out_hat.T @ b.in_hat, 0)


def source_connectivity(b: VertexBoundaryBlock) -> np.ndarray:
    if b.psi_in.shape[1]:
        raise VertexKindError("a source block has no incoming arcs")
    return hat(b.out_hat.T @ b.out_hat, 0)


def check_full_connectivity(C) -> Verdict:
    C = np.asarray(C)
    zeros = np.argwhere(C == 0)
    if zeros.size:
        i, j = zeros[0]
        return Verdict(False, (int(i), int(j)), "outgoing and incoming arc not flow connected")
    return PASS


def check_irreducible(C) -> Verdict:
    comps = irreducible_components(C)
    if len(comps) == 1:
        return PASS
    return Verdict(False, tuple(comps), f"outflow splits into {len(comps)} groups")


def has_kirchhoff_row(b: VertexBoundaryBlock) -> int | None:
    """First row whose coefficients are nonzero in every column of both
    blocks."""
    full = np.hstack([b.out_hat, b.in_hat])
    for r in range(full.shape[0]):
        if full[r].all():
            return r
    return None


def check_block(b: VertexBoundaryBlock) -> Verdict:
    """Connectivity requirement for the block's vertex kind: full
    connectivity for transient vertices, irreducibility for sources."""
    if b.psi_in.shape[1]:
        return check_full_connectivity(transient_connectivity(b))
    return check_irreducible(source_connectivity(b))
