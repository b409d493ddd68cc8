"""ASM representations: matrices, monotone triangles, height functions, six-vertex configurations.

Public coordinates (columns in triangles, eta values) are 1-indexed.
Triangle rows are stored bottom-up: ``rows[0]`` is the length-1 row.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BoundaryMismatch,
    InvalidAsm,
    InvalidTriangle,
    StepViolation,
    TopRowNotFull,
)

FIG1_MATRIX = (
    (0, 0, 0, 1, 0),
    (0, 1, 0, -1, 1),
    (0, 0, 1, 0, 0),
    (1, 0, 0, 0, 0),
    (0, 0, 0, 1, 0),
)


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AsmMatrix:
    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other):
        if not isinstance(other, AsmMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.n, self.entries.tobytes()))

    def tolist(self) -> list[list[int]]:
        return self.entries.astype(int).tolist()

    def __repr__(self):
        return f"AsmMatrix(n={self.n}, entries={self.tolist()})"


def validate_asm(m) -> AsmMatrix:
    """Check the ASM rules and return a typed matrix.

    Raises InvalidAsm whose ``kind`` is one of Shape, Entry, RowSum, ColSum,
    Alternation; ``index`` is the 0-based offending row or column.
    """
    arr = np.asarray(m)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvalidAsm("Shape", None, f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isin(arr, (-1, 0, 1))):
        bad = np.argwhere(~np.isin(arr, (-1, 0, 1)))[0]
        raise InvalidAsm("Entry", tuple(int(x) for x in bad), "entries must be -1, 0 or 1")
    arr = arr.astype(np.int8)
    rows = arr.sum(axis=1)
    for i, s in enumerate(rows):
        if s != 1:
            raise InvalidAsm("RowSum", i, f"row {i} sums to {int(s)}")
    cols = arr.sum(axis=0)
    for j, s in enumerate(cols):
        if s != 1:
            raise InvalidAsm("ColSum", j, f"column {j} sums to {int(s)}")
    # with unit totals, alternation starting at +1 is equivalent to 0/1 partial sums
    rp = np.cumsum(arr, axis=1)
    bad_rows = np.where(((rp < 0) | (rp > 1)).any(axis=1))[0]
    if bad_rows.size:
        i = int(bad_rows[0])
        raise InvalidAsm("Alternation", i, f"nonzero entries of row {i} do not alternate")
    cp = np.cumsum(arr, axis=0)
    bad_cols = np.where(((cp < 0) | (cp > 1)).any(axis=0))[0]
    if bad_cols.size:
        j = int(bad_cols[0])
        raise InvalidAsm("Alternation", ("col", j), f"nonzero entries of column {j} do not alternate")
    return AsmMatrix(_frozen(arr, np.int8))


def is_asm(m) -> bool:
    try:
        validate_asm(m)
    except InvalidAsm:
        return False
    return True


# ---------------------------------------------------------------------------
# Gelfand-Tsetlin rows and monotone triangles


def is_strict(row: Sequence[int]) -> bool:
    return all(a < b for a, b in zip(row, row[1:]))


def interlaces(mu: Sequence, lam: Sequence) -> bool:
    """True when ``mu`` (length k-1) weakly interlaces ``lam`` (length k)."""
    if len(mu) != len(lam) - 1:
        return False
    return all(lam[i] <= mu[i] <= lam[i + 1] for i in range(len(mu)))


@dataclass(frozen=True)
class MonotoneTriangle:
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if not rows:
            raise InvalidTriangle("triangle must have at least one row")
        for k, r in enumerate(rows, start=1):
            if len(r) != k:
                raise InvalidTriangle(f"row {k} has length {len(r)}, expected {k}")
            if not is_strict(r):
                raise InvalidTriangle(f"row {k} = {r} is not strictly increasing")
        for k in range(1, len(rows)):
            if not interlaces(rows[k - 1], rows[k]):
                raise InvalidTriangle(f"rows {k} and {k + 1} do not interlace")

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def top(self) -> tuple[int, ...]:
        return self.rows[-1]

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.rows]


def asm_to_triangle(a: AsmMatrix) -> MonotoneTriangle:
    partial = np.cumsum(a.entries, axis=0)
    rows = [tuple(int(c) + 1 for c in np.flatnonzero(partial[k])) for k in range(a.n)]
    return MonotoneTriangle(tuple(rows))


def triangle_to_asm(t: MonotoneTriangle) -> AsmMatrix:
    n = t.n
    if t.top != tuple(range(1, n + 1)):
        raise TopRowNotFull(f"top row {t.top} is not (1, ..., {n})")
    ind = np.zeros((n + 1, n), dtype=np.int8)
    for k, r in enumerate(t.rows, start=1):
        ind[k, [c - 1 for c in r]] = 1
    return AsmMatrix(_frozen(np.diff(ind, axis=0), np.int8))


# ---------------------------------------------------------------------------
# Height functions


def min_height(n: int) -> np.ndarray:
    i = np.arange(n + 1)[:, None]
    j = np.arange(n + 1)[None, :]
    return np.abs(i - j)


def max_height(n: int) -> np.ndarray:
    i = np.arange(n + 1)[:, None]
    j = np.arange(n + 1)[None, :]
    return np.minimum(i + j, 2 * n - i - j)


@dataclass(frozen=True, eq=False)
class HeightFunction:
    """Corner heights h(i, j) = i + j - 2 * (number of ones minus minus-ones in the top-left i x j block).

    The identity matrix gives the pointwise minimum |i - j|, the anti-identity the maximum.
    """

    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h)
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 2:
            raise BoundaryMismatch(f"height grid must be (n+1)x(n+1) with n >= 1, got {h.shape}")
        n = h.shape[0] - 1
        lo = min_height(n)
        edge = np.zeros_like(lo, dtype=bool)
        edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
        if not np.array_equal(h[edge], lo[edge]):
            raise BoundaryMismatch("boundary heights differ from the domain-wall values")
        if np.any(np.abs(np.diff(h, axis=0)) != 1) or np.any(np.abs(np.diff(h, axis=1)) != 1):
            raise StepViolation("adjacent heights must differ by exactly 1")
        object.__setattr__(self, "h", _frozen(h, np.int32))

    @property
    def n(self) -> int:
        return self.h.shape[0] - 1

    def __eq__(self, other):
        if not isinstance(other, HeightFunction):
            return NotImplemented
        return np.array_equal(self.h, other.h)

    def __hash__(self):
        return hash(self.h.tobytes())

    def __le__(self, other: "HeightFunction") -> bool:
        return bool(np.all(self.h <= other.h))


def asm_to_height(a: AsmMatrix) -> HeightFunction:
    n = a.n
    corner = np.zeros((n + 1, n + 1), dtype=np.int32)
    corner[1:, 1:] = a.entries.cumsum(axis=0).cumsum(axis=1)
    i = np.arange(n + 1)[:, None]
    j = np.arange(n + 1)[None, :]
    return HeightFunction(i + j - 2 * corner)


def heights_to_matrices(h: np.ndarray) -> np.ndarray:
    """Vectorised inverse map on an array of grids with trailing shape (n+1, n+1)."""
    h = np.asarray(h, dtype=np.int32)
    a = h[..., :-1, 1:] + h[..., 1:, :-1] - h[..., :-1, :-1] - h[..., 1:, 1:]
    return (a // 2).astype(np.int8)


def height_to_asm(hf: HeightFunction) -> AsmMatrix:
    return validate_asm(heights_to_matrices(hf.h))


# ---------------------------------------------------------------------------
# Six-vertex configurations

VERTEX_TYPES = ("a1", "a2", "b1", "b2", "c1", "c2")
# (left, right, top, bottom) arrows; horizontal +1 = pointing right, vertical +1 = pointing up.
_VERTEX_ARROWS = {
    "a1": (1, 1, 1, 1),
    "a2": (-1, -1, -1, -1),
    "b1": (1, 1, -1, -1),
    "b2": (-1, -1, 1, 1),
    "c1": (1, -1, 1, -1),   # ASM entry +1, horizontal molecule
    "c2": (-1, 1, -1, 1),   # ASM entry -1, vertical molecule
}
_ARROWS_TO_CODE = {_VERTEX_ARROWS[t]: code for code, t in enumerate(VERTEX_TYPES)}


@dataclass(frozen=True, eq=False)
class SixVertexConfig:
    """Arrow configuration on the n x n grid of vertices.

    ``horizontal[i, j]`` is the arrow on the edge left of vertex column j in row i
    (j = n is the right boundary); ``vertical[i, j]`` the arrow above vertex row i in column j.
    """

    horizontal: np.ndarray
    vertical: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "horizontal", _frozen(self.horizontal, np.int8))
        object.__setattr__(self, "vertical", _frozen(self.vertical, np.int8))

    @property
    def n(self) -> int:
        return self.horizontal.shape[0]

    @property
    def vertices(self) -> np.ndarray:
        n = self.n
        codes = np.empty((n, n), dtype=np.int8)
        for i in range(n):
            for j in range(n):
                arr = (
                    int(self.horizontal[i, j]),
                    int(self.horizontal[i, j + 1]),
                    int(self.vertical[i, j]),
                    int(self.vertical[i + 1, j]),
                )
                codes[i, j] = _ARROWS_TO_CODE.get(arr, -1)
        return codes

    def labels(self) -> list[list[str]]:
        return [[VERTEX_TYPES[c] if c >= 0 else "?" for c in row] for row in self.vertices]

    def ice_rule_holds(self) -> bool:
        hz, vt = self.horizontal.astype(int), self.vertical.astype(int)
        incoming = (
            (hz[:, :-1] == 1).astype(int)
            + (hz[:, 1:] == -1)
            + (vt[:-1, :] == -1)
            + (vt[1:, :] == 1)
        )
        return bool(np.all(incoming == 2))

    def domain_wall(self) -> bool:
        """Horizontal boundary arrows point in, vertical boundary arrows point out."""
        hz, vt = self.horizontal, self.vertical
        return bool(
            np.all(hz[:, 0] == 1) and np.all(hz[:, -1] == -1)
            and np.all(vt[0, :] == 1) and np.all(vt[-1, :] == -1)
        )


def asm_to_sixvertex(a: AsmMatrix) -> SixVertexConfig:
    e = a.entries.astype(np.int32)
    n = a.n
    row_partial = np.zeros((n, n + 1), dtype=np.int32)
    row_partial[:, 1:] = e.cumsum(axis=1)
    col_partial = np.zeros((n + 1, n), dtype=np.int32)
    col_partial[1:, :] = e.cumsum(axis=0)
    return SixVertexConfig(1 - 2 * row_partial, 1 - 2 * col_partial)


def sixvertex_to_asm(c: SixVertexConfig) -> AsmMatrix:
    row_partial = (1 - c.horizontal.astype(np.int32)) // 2
    return validate_asm(np.diff(row_partial, axis=1))


# ---------------------------------------------------------------------------
# Symmetries of the square

DIHEDRAL: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "identity": lambda m: m,
    "rot90": lambda m: np.rot90(m, 1),
    "rot180": lambda m: np.rot90(m, 2),
    "rot270": lambda m: np.rot90(m, 3),
    "flip_rows": lambda m: m[::-1, :],
    "flip_cols": lambda m: m[:, ::-1],
    "transpose": lambda m: m.T,
    "antitranspose": lambda m: np.rot90(m, 2).T,
}


def dihedral_transform(a: AsmMatrix, g: str) -> AsmMatrix:
    try:
        op = DIHEDRAL[g]
    except KeyError:
        raise ValueError(f"unknown symmetry {g!r}; expected one of {sorted(DIHEDRAL)}") from None
    return AsmMatrix(_frozen(op(a.entries), np.int8))


def compose(g: str, h: str) -> str:
    """Name of the symmetry 'apply h, then g'."""
    probe = np.arange(9).reshape(3, 3)
    target = DIHEDRAL[g](DIHEDRAL[h](probe))
    for name, op in DIHEDRAL.items():
        if np.array_equal(op(probe), target):
            return name
    raise AssertionError("dihedral group is not closed")  # pragma: no cover


# ---------------------------------------------------------------------------
# JSON interchange: {"n": n, "matrix": [[...]]} and {"n": n, "triangle": [[...], ...]}


def asm_to_json(a: AsmMatrix) -> dict:
    return {"n": a.n, "matrix": a.tolist()}


def triangle_to_json(t: MonotoneTriangle) -> dict:
    return {"n": t.n, "triangle": t.tolist()}


def asm_from_json(obj) -> AsmMatrix:
    if isinstance(obj, dict):
        if "matrix" not in obj:
            raise InvalidAsm("Shape", None, "JSON object lacks a 'matrix' field")
        a = validate_asm(obj["matrix"])
        if "n" in obj and obj["n"] != a.n:
            raise InvalidAsm("Shape", None, f"declared n={obj['n']} but matrix has size {a.n}")
        return a
    return validate_asm(obj)


def triangle_from_json(obj) -> MonotoneTriangle:
    rows = obj["triangle"] if isinstance(obj, dict) else obj
    t = MonotoneTriangle(tuple(tuple(r) for r in rows))
    if isinstance(obj, dict) and "n" in obj and obj["n"] != t.n:
        raise InvalidTriangle(f"declared n={obj['n']} but triangle has {t.n} rows")
    return t
