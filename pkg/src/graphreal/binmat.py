"""Zero-pattern matrix primitives.

Coefficient matrices are kept as numpy arrays.  Exact input (integers and
rationals) lives in ``object`` arrays of :class:`fractions.Fraction`; anything
else is ``float64``.  Binary matrices are ``int64`` arrays of 0/1.

All indices are 0-based here; reports convert to 1-based at the edge.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Rational
from typing import Any, Iterable, Sequence

import numpy as np

FLOAT_TOL = 1e-12


class StructureError(ValueError):
    """Input has the wrong shape or violates a structural precondition."""


@dataclass(frozen=True)
class Verdict:
    """Outcome of a structural check.

    ``witness`` is only set on failure and always names the
    lexicographically smallest offending item.
    """

    ok: bool
    witness: Any = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


PASS = Verdict(True)


def _is_exact(x) -> bool:
    return isinstance(x, (Integral, Rational)) and not isinstance(x, bool)


def as_matrix(rows, *, exact: bool | None = None) -> np.ndarray:
    """Build a coefficient matrix from nested sequences.

    With ``exact=None`` the representation is inferred: all-rational input
    gives a Fraction object array, otherwise float64.
    """
    if isinstance(rows, np.ndarray) and rows.ndim == 2:
        arr = rows
    else:
        rows = [list(r) for r in rows]
        if rows and len({len(r) for r in rows}) > 1:
            raise StructureError("ragged matrix rows")
        ncols = len(rows[0]) if rows else 0
        arr = np.empty((len(rows), ncols), dtype=object)
        for i, r in enumerate(rows):
            for j, x in enumerate(r):
                arr[i, j] = x
    flat = arr.ravel().tolist()
    if exact is None:
        exact = all(_is_exact(x) for x in flat)
    if exact:
        out = np.empty(arr.shape, dtype=object)
        for idx, x in np.ndenumerate(arr):
            if not _is_exact(x):
                raise StructureError(f"non-rational entry {x!r} in exact matrix")
            # numpy integers keep fixed width inside a Fraction; use Python ints
            out[idx] = Fraction(int(x.numerator), int(x.denominator))
        return out
    out = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(out)):
        raise StructureError("matrix has non-finite entries")
    return out


def zeros(shape: tuple[int, int], exact: bool = True) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape)


def is_exact(A: np.ndarray) -> bool:
    return A.dtype == object


def default_tol(A: np.ndarray) -> float:
    """0 for exact matrices, :data:`FLOAT_TOL` for floating ones."""
    return 0.0 if is_exact(A) else FLOAT_TOL


def hat(A, tol: float | None = None) -> np.ndarray:
    """Replace every entry with ``|a| > tol`` by 1 and the rest by 0."""
    A = np.asarray(A)
    if tol is None:
        tol = default_tol(A)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if A.size == 0:
        return np.zeros(A.shape, dtype=np.int64)
    return (np.abs(A) > tol).astype(np.int64)


def support(v, tol: float | None = None) -> tuple[int, ...]:
    """Indices of the entries of ``v`` exceeding ``tol`` in magnitude."""
    v = np.asarray(v)
    if tol is None:
        tol = default_tol(v)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return tuple(int(i) for i in np.flatnonzero(np.abs(v) > tol)) if v.size else ()


def bool_product(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``hat(A @ B)`` for binary operands."""
    return (np.asarray(A, dtype=np.int64) @ np.asarray(B, dtype=np.int64) > 0).astype(np.int64)


def _vectors_equal_or_orthogonal(V: np.ndarray) -> Verdict:
    # V holds the vectors as columns
    n = V.shape[1]
    for j in range(n):
        for k in range(j + 1, n):
            a, b = V[:, j], V[:, k]
            if np.array_equal(a, b):
                continue
            if int(np.dot(a, b)) != 0:
                return Verdict(False, (j, k), "neither equal nor orthogonal")
    return PASS


def columns_equal_or_orthogonal(A) -> Verdict:
    A = hat(A, 0)
    return _vectors_equal_or_orthogonal(A)


def rows_equal_or_orthogonal(A) -> Verdict:
    A = hat(A, 0)
    return _vectors_equal_or_orthogonal(A.T)


def _check_symmetric(S: np.ndarray) -> None:
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise StructureError(f"expected a square matrix, got shape {S.shape}")
    if not np.array_equal(S, S.T):
        raise StructureError("matrix is not symmetric")


def irreducible_components(S) -> list[tuple[int, ...]]:
    """Connected components of the graph with adjacency ``S``.

    The diagonal is ignored.  Components are sorted internally and listed
    by their smallest index.
    """
    S = hat(S, 0)
    _check_symmetric(S)
    n = S.shape[0]
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in np.flatnonzero(S[u]):
                w = int(w)
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
        comps.append(tuple(sorted(comp)))
    return comps


def connecting_path(S, a: int, b: int) -> list[int] | None:
    """Shortest path from ``a`` to ``b`` in the graph of ``S`` (BFS, lowest
    index first), or None if they lie in different components."""
    S = hat(S, 0)
    _check_symmetric(S)
    prev = {a: None}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        if u == b:
            path = [u]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return path[::-1]
        for w in np.flatnonzero(S[u]):
            w = int(w)
            if w not in prev:
                prev[w] = u
                queue.append(w)
    return None


@dataclass(frozen=True)
class Permutation:
    """Bijection on ``range(n)``; ``image[i]`` is where ``i`` goes."""

    image: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "image", tuple(int(i) for i in self.image))
        if sorted(self.image) != list(range(len(self.image))):
            raise StructureError(f"not a permutation: {self.image}")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    def __len__(self) -> int:
        return len(self.image)

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.image)
        for i, j in enumerate(self.image):
            inv[j] = i
        return Permutation(tuple(inv))

    def matrix(self) -> np.ndarray:
        """P with ``P @ x`` moving entry i of x to position ``image[i]``."""
        n = len(self.image)
        P = np.zeros((n, n), dtype=np.int64)
        for i, j in enumerate(self.image):
            P[j, i] = 1
        return P


def permute(A: np.ndarray, row_perm: Permutation, col_perm: Permutation) -> np.ndarray:
    """``B[row_perm(i), col_perm(j)] = A[i, j]``."""
    A = np.asarray(A)
    if len(row_perm) != A.shape[0] or len(col_perm) != A.shape[1]:
        raise StructureError(
            f"permutation sizes ({len(row_perm)}, {len(col_perm)}) do not match shape {A.shape}"
        )
    rinv = np.array(row_perm.inverse().image, dtype=np.intp)
    cinv = np.array(col_perm.inverse().image, dtype=np.intp)
    return A[np.ix_(rinv, cinv)] if A.size else A.copy()


def submatrix(A: np.ndarray, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    rows = np.asarray(list(rows), dtype=np.intp)
    cols = np.asarray(list(cols), dtype=np.intp)
    return A[np.ix_(rows, cols)]


def one_based(indices: Iterable[int]) -> list[int]:
    return [int(i) + 1 for i in indices]


def to_jsonable(x):
    """Entry-wise conversion for JSON output: ints stay ints, other
    rationals become ``{"num", "den"}``, floats stay floats."""
    if isinstance(x, np.ndarray):
        return [to_jsonable(r) for r in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [to_jsonable(r) for r in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return int(x.numerator)
        return {"num": x.numerator, "den": x.denominator}
    return float(x)
