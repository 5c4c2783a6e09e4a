from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from afree.rational import InconsistentSystem, min_norm_solution, nullspace, rank, rref, simplex_max


def test_rref_identity():
    r, piv = rref([[2, 4], [1, 3]])
    assert r == [[1, 0], [0, 1]] and piv == [0, 1]


def test_nullspace_exact():
    basis = nullspace([[1, 1, 0]])
    for v in basis:
        assert v[0] + v[1] == 0
    assert len(basis) == 2


def test_min_norm_inconsistent():
    with pytest.raises(InconsistentSystem):
        min_norm_solution([[1, 0], [0, 2], [2, 0]], [1, 1, 1])


small_matrix = st.integers(1, 4).flatmap(
    lambda rows: st.integers(1, 4).flatmap(
        lambda cols: st.lists(st.lists(st.integers(0, 3), min_size=cols, max_size=cols),
                              min_size=rows, max_size=rows)))


@settings(max_examples=100, deadline=None)
@given(small_matrix)
def test_min_norm_matches_pseudoinverse(a):
    a_np = np.array(a, dtype=float)
    b = np.ones(len(a))
    x_ref = np.linalg.pinv(a_np) @ b
    consistent = np.allclose(a_np @ x_ref, b)
    if not consistent:
        with pytest.raises(InconsistentSystem):
            min_norm_solution(a, [1] * len(a))
        return
    x = min_norm_solution(a, [1] * len(a))
    assert all(sum(Fraction(v) * xi for v, xi in zip(row, x)) == 1 for row in a)
    np.testing.assert_allclose([float(v) for v in x], x_ref, atol=1e-12)
    assert rank(a) == np.linalg.matrix_rank(a_np)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(0, 3), min_size=3, max_size=3), min_size=1, max_size=3),
       st.lists(st.integers(-2, 3), min_size=3, max_size=3))
def test_simplex_matches_linprog(a, c):
    # bounded feasible region: add sum x <= 5 via slack
    a_eq = [row + [0] for row in a] + [[1, 1, 1, 1]]
    b_eq = [1] * len(a) + [5]
    cost = c + [0]
    ref = linprog(-np.array(cost, float), A_eq=np.array(a_eq, float), b_eq=np.array(b_eq, float),
                  bounds=[(0, None)] * 4, method="highs")
    if ref.status == 2:
        with pytest.raises(InconsistentSystem):
            simplex_max(cost, a_eq, b_eq)
        return
    opt, x = simplex_max(cost, a_eq, b_eq)
    assert float(opt) == pytest.approx(-ref.fun, abs=1e-9)
    assert all(v >= 0 for v in x)
    assert all(sum(Fraction(r) * xi for r, xi in zip(row, x)) == b for row, b in zip(a_eq, b_eq))
