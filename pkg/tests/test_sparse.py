from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bigworld.sparse import (
    BoundsError,
    ShapeError,
    SparseBoolMatrix,
    equal,
    make,
    mul,
    plus,
    trans,
    trans_naive,
)
from helpers import floyd_warshall, forest_matrix, random_dag, random_forest


def dense_mul(a: SparseBoolMatrix, b: SparseBoolMatrix) -> set[tuple[int, int]]:
    n, k = a.shape
    _, m = b.shape
    return {(i, j) for i in range(n) for j in range(m) if any(a.mem(i, t) and b.mem(t, j) for t in range(k))}


def identity(n: int) -> SparseBoolMatrix:
    return SparseBoolMatrix.from_pairs(n, n, [(i, i) for i in range(n)])


@st.composite
def matrices(draw, max_dim: int = 8, square: bool = False):
    rows = draw(st.integers(0, max_dim))
    cols = rows if square else draw(st.integers(0, max_dim))
    if rows == 0 or cols == 0:
        return make(rows, cols)
    cells = draw(st.sets(st.tuples(st.integers(0, rows - 1), st.integers(0, cols - 1)), max_size=rows * cols))
    return SparseBoolMatrix.from_pairs(rows, cols, cells)


@st.composite
def dags(draw, max_n: int = 12):
    n = draw(st.integers(0, max_n))
    pairs = draw(st.sets(st.tuples(st.integers(0, max(n - 1, 0)), st.integers(0, max(n - 1, 0)))))
    return SparseBoolMatrix.from_pairs(n, n, [(i, j) for i, j in pairs if i < j])


class TestMake:
    def test_empty(self):
        m = make(0, 0)
        assert m.shape == (0, 0) and len(m) == 0

    def test_all_false(self):
        assert not make(3, 3).mem(1, 2)

    def test_rectangular(self):
        m = make(2, 5)
        assert m.shape == (2, 5) and len(m) == 0


class TestAdd:
    def test_add_then_mem(self):
        m = make(2, 2).add(0, 1)
        assert m.mem(0, 1) and not m.mem(1, 0)

    def test_idempotent(self):
        m = make(2, 2).add(0, 1).add(0, 1)
        assert len(m) == 1

    def test_children(self):
        assert make(2, 2).add(0, 1).chl(0) == [1]

    @pytest.mark.parametrize("i,j", [(2, 0), (0, 2), (-1, 0)])
    def test_out_of_range(self, i, j):
        with pytest.raises(BoundsError):
            make(2, 2).add(i, j)


class TestChildrenParents:
    def test_empty_row(self):
        assert make(3, 3).chl(1) == []

    def test_chl_prn(self):
        m = SparseBoolMatrix.from_pairs(3, 3, [(0, 1), (0, 2)])
        assert m.chl(0) == [1, 2]
        assert m.prn(2) == [0]

    def test_out_of_range(self):
        with pytest.raises(BoundsError):
            make(2, 2).chl(5)
        with pytest.raises(BoundsError):
            make(2, 2).prn(-1)


class TestAlgebra:
    def test_mul_identity(self):
        m = SparseBoolMatrix.from_pairs(3, 3, [(0, 1), (2, 0)])
        assert equal(mul(identity(3), m), m)

    def test_plus_zero(self):
        m = SparseBoolMatrix.from_pairs(3, 4, [(0, 1), (2, 3)])
        assert equal(plus(m, make(3, 4)), m)

    def test_mul_small(self):
        a = SparseBoolMatrix.from_pairs(3, 3, [(0, 1)])
        b = SparseBoolMatrix.from_pairs(3, 3, [(1, 2)])
        assert sorted(mul(a, b).entries()) == [(0, 2)]

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            mul(make(2, 3), make(2, 3))
        with pytest.raises(ShapeError):
            plus(make(2, 3), make(3, 2))
        with pytest.raises(ShapeError):
            equal(make(2, 3), make(3, 2))

    def test_operators(self):
        a = SparseBoolMatrix.from_pairs(2, 2, [(0, 1)])
        b = SparseBoolMatrix.from_pairs(2, 2, [(1, 0)])
        assert sorted((a @ b).entries()) == [(0, 0)]
        assert sorted((a | b).entries()) == [(0, 1), (1, 0)]
        assert a == a.copy() and a != b

    @settings(max_examples=200, deadline=None)
    @given(st.data())
    def test_mul_matches_dense(self, data):
        a = data.draw(matrices())
        cols = data.draw(st.integers(0, 8))
        b_cells = data.draw(st.sets(st.tuples(st.integers(0, max(a.shape[1] - 1, 0)), st.integers(0, max(cols - 1, 0)))))
        b = SparseBoolMatrix.from_pairs(a.shape[1], cols, b_cells if a.shape[1] and cols else [])
        assert set(mul(a, b).entries()) == dense_mul(a, b)

    @settings(max_examples=200, deadline=None)
    @given(matrices(), st.data())
    def test_plus_is_union(self, a, data):
        rows, cols = a.shape
        cells = data.draw(st.sets(st.tuples(st.integers(0, max(rows - 1, 0)), st.integers(0, max(cols - 1, 0)))))
        b = SparseBoolMatrix.from_pairs(rows, cols, cells if rows and cols else [])
        assert set(plus(a, b).entries()) == set(a.entries()) | set(b.entries())


class TestInvariants:
    @settings(max_examples=200, deadline=None)
    @given(matrices())
    def test_majors_agree(self, m):
        from_rows = {(i, j) for i, js in m.r_major.items() for j in js}
        from_cols = {(i, j) for j, is_ in m.c_major.items() for i in is_}
        assert from_rows == from_cols == set(m.entries())
        assert len(m) == len(from_rows)
        rows, cols = m.shape
        assert all(0 <= i < rows and 0 <= j < cols for i, j in from_rows)

    @settings(max_examples=100, deadline=None)
    @given(matrices())
    def test_transpose_involution(self, m):
        t = m.transpose()
        assert t.shape == (m.shape[1], m.shape[0])
        assert equal(t.transpose(), m)


class TestClosure:
    def test_chain(self):
        m = SparseBoolMatrix.from_pairs(3, 3, [(0, 1), (1, 2)])
        expected = [(0, 1), (0, 2), (1, 2)]
        assert sorted(trans_naive(m).entries()) == expected
        assert sorted(trans(m).entries()) == expected

    def test_empty(self):
        assert len(trans_naive(make(4, 4))) == 0
        assert len(trans(make(4, 4))) == 0
        assert len(trans(make(0, 0))) == 0

    def test_single_edge(self):
        assert sorted(trans(SparseBoolMatrix.from_pairs(2, 2, [(0, 1)])).entries()) == [(0, 1)]

    def test_star_unchanged(self):
        star = SparseBoolMatrix.from_pairs(4, 4, [(0, 1), (0, 2), (0, 3)])
        assert equal(trans(star), star)

    def test_non_square(self):
        with pytest.raises(ShapeError):
            trans(make(2, 3))
        with pytest.raises(ShapeError):
            trans_naive(make(2, 3))

    def test_input_untouched(self):
        m = SparseBoolMatrix.from_pairs(3, 3, [(0, 1), (1, 2)])
        trans(m)
        trans_naive(m)
        assert sorted(m.entries()) == [(0, 1), (1, 2)]

    def test_random_dag_50(self):
        m = random_dag(50, random.Random(50), 0.08)
        assert equal(trans(m), trans_naive(m))
        assert set(trans(m).entries()) == floyd_warshall(m)

    def test_forest_200(self):
        m = forest_matrix(random_forest(200, random.Random(200)))
        assert equal(trans(m), trans_naive(m))

    @settings(max_examples=150, deadline=None)
    @given(dags())
    def test_closure_matches_oracle(self, m):
        t = trans(m)
        assert equal(t, trans_naive(m))
        assert set(t.entries()) == floyd_warshall(m)

    @settings(max_examples=100, deadline=None)
    @given(dags())
    def test_closure_idempotent_and_transitive(self, m):
        t = trans(m)
        assert equal(trans(t), t)
        assert set(mul(t, t).entries()) <= set(t.entries())
        assert set(m.entries()) <= set(t.entries())
