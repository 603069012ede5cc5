"""Sparse boolean matrices stored as row and column adjacency lists.

Place graphs are forests, so their relation matrices hold one entry per
parented node.  Keeping both a row-major and a column-major index makes
``chl`` (children) and ``prn`` (parents) constant-time lookups.
"""
from __future__ import annotations

from typing import Iterable, Iterator

__all__ = [
    "BoundsError",
    "ShapeError",
    "SparseBoolMatrix",
    "make",
    "mul",
    "plus",
    "equal",
    "trans",
    "trans_naive",
]


class BoundsError(IndexError):
    """Row or column index outside the matrix shape."""


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class SparseBoolMatrix:
    """Boolean ``rows x cols`` matrix with ordered adjacency lists.

    ``r_major[i]`` holds the true columns of row ``i``; ``c_major[j]`` the
    true rows of column ``j``.  Empty rows and columns are not stored.
    Iteration helpers return sorted output so results are deterministic.
    """

    __slots__ = ("rows", "cols", "r_major", "c_major")

    def __init__(self, rows: int = 0, cols: int = 0) -> None:
        if rows < 0 or cols < 0:
            raise ShapeError(f"negative shape {rows}x{cols}")
        self.rows = rows
        self.cols = cols
        self.r_major: dict[int, set[int]] = {}
        self.c_major: dict[int, set[int]] = {}

    @classmethod
    def from_pairs(cls, rows: int, cols: int, pairs: Iterable[tuple[int, int]]) -> SparseBoolMatrix:
        m = cls(rows, cols)
        for i, j in pairs:
            m.add(i, j)
        return m

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def _check_row(self, i: int) -> None:
        if not 0 <= i < self.rows:
            raise BoundsError(f"row {i} outside [0, {self.rows})")

    def _check_col(self, j: int) -> None:
        if not 0 <= j < self.cols:
            raise BoundsError(f"column {j} outside [0, {self.cols})")

    def add(self, i: int, j: int) -> SparseBoolMatrix:
        """Set cell ``(i, j)`` in place and return the matrix.

        Mutation is meant for the construction phase only; once a matrix
        has been handed to a bigraph it is treated as frozen.
        """
        self._check_row(i)
        self._check_col(j)
        self.r_major.setdefault(i, set()).add(j)
        self.c_major.setdefault(j, set()).add(i)
        return self

    def mem(self, i: int, j: int) -> bool:
        self._check_row(i)
        self._check_col(j)
        row = self.r_major.get(i)
        return row is not None and j in row

    def chl(self, i: int) -> list[int]:
        """Sorted true columns of row ``i``."""
        self._check_row(i)
        return sorted(self.r_major.get(i, ()))

    def prn(self, j: int) -> list[int]:
        """Sorted true rows of column ``j``."""
        self._check_col(j)
        return sorted(self.c_major.get(j, ()))

    def entries(self) -> Iterator[tuple[int, int]]:
        for i in sorted(self.r_major):
            for j in sorted(self.r_major[i]):
                yield (i, j)

    def __len__(self) -> int:
        return sum(len(row) for row in self.r_major.values())

    def copy(self) -> SparseBoolMatrix:
        m = SparseBoolMatrix(self.rows, self.cols)
        m.r_major = {i: set(row) for i, row in self.r_major.items() if row}
        m.c_major = {j: set(col) for j, col in self.c_major.items() if col}
        return m

    def transpose(self) -> SparseBoolMatrix:
        m = SparseBoolMatrix(self.cols, self.rows)
        m.r_major = {j: set(col) for j, col in self.c_major.items() if col}
        m.c_major = {i: set(row) for i, row in self.r_major.items() if row}
        return m

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseBoolMatrix):
            return NotImplemented
        return equal(self, other)

    __hash__ = None  # type: ignore[assignment]

    def __matmul__(self, other: SparseBoolMatrix) -> SparseBoolMatrix:
        return mul(self, other)

    def __or__(self, other: SparseBoolMatrix) -> SparseBoolMatrix:
        return plus(self, other)

    def __repr__(self) -> str:
        cells = list(self.entries())
        return f"SparseBoolMatrix({self.rows}x{self.cols}, {cells})"


def make(rows: int, cols: int) -> SparseBoolMatrix:
    return SparseBoolMatrix(rows, cols)


def mul(a: SparseBoolMatrix, b: SparseBoolMatrix) -> SparseBoolMatrix:
    """Boolean product: cell ``(i, k)`` is the OR over ``j`` of ``a[i,j] and b[j,k]``.

    Evaluated literally as an inner product of row ``i`` of ``a`` with
    column ``k`` of ``b`` for every pair of non-empty row and column, which
    is the cost model the fixed-point closure in :func:`trans_naive` is
    measured against.
    """
    if a.cols != b.rows:
        raise ShapeError(f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}")
    out = SparseBoolMatrix(a.rows, b.cols)
    rows = [(i, r) for i, r in a.r_major.items() if r]
    cols = [(k, c) for k, c in b.c_major.items() if c]
    out_r, out_c = out.r_major, out.c_major
    for i, r in rows:
        for k, c in cols:
            if not r.isdisjoint(c):
                out_r.setdefault(i, set()).add(k)
                out_c.setdefault(k, set()).add(i)
    return out


def plus(a: SparseBoolMatrix, b: SparseBoolMatrix) -> SparseBoolMatrix:
    """Elementwise OR."""
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    out = a.copy()
    for i, row in b.r_major.items():
        if row:
            out.r_major.setdefault(i, set()).update(row)
    for j, col in b.c_major.items():
        if col:
            out.c_major.setdefault(j, set()).update(col)
    return out


def equal(a: SparseBoolMatrix, b: SparseBoolMatrix) -> bool:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    ra = {i: r for i, r in a.r_major.items() if r}
    rb = {i: r for i, r in b.r_major.items() if r}
    return ra == rb


def _require_square(m: SparseBoolMatrix) -> None:
    if m.rows != m.cols:
        raise ShapeError(f"closure needs a square matrix, got {m.rows}x{m.cols}")


def trans_naive(m0: SparseBoolMatrix) -> SparseBoolMatrix:
    """Closure by repeated multiplication until a fixed point.

    Slow on purpose; kept as an oracle for :func:`trans`.
    """
    _require_square(m0)
    acc = m0.copy()
    m = m0
    while True:
        nxt = mul(m0, m)
        if equal(m, nxt):
            return acc
        acc = plus(nxt, acc)
        m = nxt


def trans(m0: SparseBoolMatrix) -> SparseBoolMatrix:
    """Transitive closure by one depth-first search per source row.

    The search for each source walks the closure built so far, so rows of
    sources handled earlier act as shortcuts.  The input must be acyclic;
    on cyclic input the result is unspecified.
    """
    _require_square(m0)
    closure = m0.copy()
    rows, cols = closure.r_major, closure.c_major
    for source in sorted(m0.r_major):
        reach = rows.get(source)
        if not reach:
            continue
        stack = sorted(reach)
        while stack:
            current = stack.pop()
            children = rows.get(current)
            if not children:
                continue
            for child in children:
                if child in reach:
                    continue
                stack.append(child)
                reach.add(child)
                cols.setdefault(child, set()).add(source)
    return closure
