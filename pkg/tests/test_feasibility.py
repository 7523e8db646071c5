from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from carcheck.errors import DimensionError
from carcheck.feasibility import (
    FeasibilityOutcome,
    integerize,
    left_null_space,
    linprog_exact,
    solve_exact_feasibility,
    verify_outcome,
)

F = Fraction

FIGURE3 = [
    [1, 1, 0, 0, 0],
    [0, 0, 1, 1, 1],
    [1, 0, 1, 0, 0],
    [0, 1, 0, 1, 0],
    [0, 0, 0, 0, 1],
]

binary = st.integers(1, 4).flatmap(
    lambda l: st.lists(st.lists(st.integers(0, 1), min_size=l, max_size=l), min_size=1, max_size=5)
)


def scipy_strict(A):
    """Float oracle: maximise t with A nu = 1, nu >= t, t <= 1."""
    A = np.array(A, dtype=float)
    k, l = A.shape
    # variables nu_1..nu_l, t ; minimise -t
    c = np.zeros(l + 1)
    c[-1] = -1
    a_eq = np.hstack([A, np.zeros((k, 1))])
    a_ub = np.hstack([-np.eye(l), np.ones((l, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(l), A_eq=a_eq, b_eq=np.ones(k),
                  bounds=[(0, None)] * l + [(None, 1)], method="highs")
    return res.status == 0 and -res.fun > 1e-9


def test_figure3_certificate():
    out = solve_exact_feasibility(FIGURE3)
    assert not out.feasible
    assert out.certificate == (1, 1, -1, -1, -1)
    assert verify_outcome(FIGURE3, out)


def test_feasible_witness_is_strictly_positive():
    A = [[1, 1, 0], [0, 1, 1]]
    out = solve_exact_feasibility(A)
    assert out.feasible and all(v > 0 for v in out.witness)
    assert verify_outcome(A, out)


def test_nested_rows_are_infeasible():
    # {1,2} and {1}: nu_2 would have to be 0
    out = solve_exact_feasibility([[1, 1], [1, 0]])
    assert not out.feasible and verify_outcome([[1, 1], [1, 0]], out)


def test_nonstrict_mode():
    ok = solve_exact_feasibility([[1, 1, -1]], strict=False)
    assert ok.feasible and sum(ok.witness) == 1
    bad = solve_exact_feasibility([[1, 1, 1]], strict=False)
    assert not bad.feasible and verify_outcome([[1, 1, 1]], bad)


def test_dimension_errors():
    with pytest.raises(DimensionError):
        solve_exact_feasibility([])
    with pytest.raises(DimensionError):
        solve_exact_feasibility([[1, 0], [1]])


def test_verify_rejects_bad_outcomes():
    assert not verify_outcome([[1, 1]], FeasibilityOutcome(witness=(F(1), F(0))))
    assert not verify_outcome([[1, 1]], FeasibilityOutcome())
    assert not verify_outcome(FIGURE3, FeasibilityOutcome(certificate=(1, 0, 0, 0, 0)))


def test_linprog_exact_optimum():
    # min -x1 - x2 s.t. x1 + x2 + s = 4, x1 + 3 x2 + s' = 6
    res = linprog_exact([[1, 1, 1, 0], [1, 3, 0, 1]], [4, 6], [-1, -1, 0, 0])
    assert res.status == "optimal" and res.value == -4


def test_linprog_exact_infeasible_farkas():
    A, b = [[1, 1], [1, 1]], [1, 2]
    res = linprog_exact(A, b, [0, 0])
    assert res.status == "infeasible"
    y = res.y
    assert all(sum(y[i] * A[i][j] for i in range(2)) <= 0 for j in range(2))
    assert sum(y[i] * b[i] for i in range(2)) > 0


def test_left_null_space_and_integerize():
    basis = left_null_space(FIGURE3)
    assert len(basis) == 1
    y = basis[0]
    assert all(sum(y[i] * FIGURE3[i][j] for i in range(5)) == 0 for j in range(5))
    assert integerize([F(1, 2), F(-1, 3)]) == (3, -2)
    assert integerize([F(4), F(6)]) == (2, 3)


@settings(max_examples=150, deadline=None)
@given(binary)
def test_agrees_with_scipy(A):
    out = solve_exact_feasibility(A)
    assert verify_outcome(A, out)
    assert out.feasible == scipy_strict(A)


@settings(max_examples=100, deadline=None)
@given(binary)
def test_exactly_one_side(A):
    out = solve_exact_feasibility(A)
    assert (out.witness is None) != (out.certificate is None)
    if out.certificate is not None:
        assert all(isinstance(c, int) for c in out.certificate)
