"""Exact rational linear feasibility with Farkas certificates.

Two call modes share one two-phase simplex (Bland's rule, exact Fractions):

* ``strict=True``: is there nu with ``A nu = 1`` and every ``nu_j > 0``?
  The answer is a positive witness, or an integer row vector ``z`` with
  ``zA = 0, z.1 != 0`` or ``zA <= 0, zA != 0, z.1 >= 0``.
* ``strict=False``: the last column of the matrix holds ``-b``; is there
  ``nu >= 0`` with ``A nu = b``?  A certificate here satisfies
  ``zA <= 0`` and ``z.b > 0``.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import DimensionError, InternalInconsistency

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class FeasibilityOutcome:
    witness: Optional[tuple] = None
    certificate: Optional[tuple] = None
    strict: bool = True

    @property
    def feasible(self) -> bool:
        return self.witness is not None


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: Optional[list] = None
    y: Optional[list] = None
    value: Optional[Fraction] = None


def _as_matrix(rows) -> list:
    return [[Fraction(v) for v in row] for row in rows]


def _pivot(tab, rhs, r, c):
    piv = tab[r][c]
    row = [v / piv for v in tab[r]]
    tab[r] = row
    rhs[r] = rhs[r] / piv
    for i in range(len(tab)):
        if i != r:
            f = tab[i][c]
            if f:
                ti = tab[i]
                for j, v in enumerate(row):
                    if v:
                        ti[j] -= f * v
                rhs[i] -= f * rhs[r]


def _run(tab, rhs, basis, cost, allowed):
    """Bland-rule primal simplex on a feasible tableau. Returns 'optimal' or 'unbounded'."""
    k = len(tab)
    while True:
        cb = [cost[basis[i]] for i in range(k)]
        entering = None
        in_basis = set(basis)
        for j in allowed:
            if j in in_basis:
                continue
            red = cost[j] - sum((cb[i] * tab[i][j] for i in range(k) if cb[i] and tab[i][j]), ZERO)
            if red < 0:
                entering = j
                break
        if entering is None:
            return "optimal"
        best = None
        for i in range(k):
            a = tab[i][entering]
            if a > 0:
                ratio = rhs[i] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded"
        r = best[1]
        _pivot(tab, rhs, r, entering)
        basis[r] = entering


def _duals(tab, basis, cost, n, signs):
    k = len(tab)
    y = []
    for i in range(k):
        v = sum((cost[basis[r]] * tab[r][n + i] for r in range(k) if cost[basis[r]]), ZERO)
        y.append(v * signs[i])
    return y


def linprog_exact(A, b, c) -> LPResult:
    """Minimise ``c.x`` subject to ``A x = b, x >= 0`` exactly.

    For infeasible problems ``y`` is a Farkas vector with ``yA <= 0`` and
    ``y.b > 0``; for optimal ones ``y`` is a dual optimum (``c - yA >= 0``).
    """
    A = _as_matrix(A)
    b = [Fraction(v) for v in b]
    c = [Fraction(v) for v in c]
    k = len(A)
    n = len(c)
    if len(b) != k or any(len(row) != n for row in A):
        raise DimensionError("inconsistent LP dimensions")
    signs = [(-1 if b[i] < 0 else 1) for i in range(k)]
    tab = []
    rhs = []
    for i in range(k):
        s = signs[i]
        tab.append([s * v for v in A[i]] + [ONE if j == i else ZERO for j in range(k)])
        rhs.append(s * b[i])
    basis = [n + i for i in range(k)]

    phase1 = [ZERO] * n + [ONE] * k
    _run(tab, rhs, basis, phase1, range(n + k))
    infeas = sum((rhs[i] for i in range(k) if basis[i] >= n), ZERO)
    if infeas > 0:
        return LPResult("infeasible", y=_duals(tab, basis, phase1, n, signs), value=infeas)

    for r in range(k):
        if basis[r] >= n:
            for j in range(n):
                if tab[r][j] != 0:
                    _pivot(tab, rhs, r, j)
                    basis[r] = j
                    break

    phase2 = c + [ZERO] * k
    status = _run(tab, rhs, basis, phase2, range(n))
    x = [ZERO] * n
    for i in range(k):
        if basis[i] < n:
            x[basis[i]] = rhs[i]
    if status == "unbounded":
        return LPResult("unbounded", x=x)
    y = _duals(tab, basis, phase2, n, signs)
    value = sum((ci * xi for ci, xi in zip(c, x)), ZERO)
    return LPResult("optimal", x=x, y=y, value=value)


def left_null_space(A) -> list:
    """Basis of {y : yA = 0} from the reduced row echelon form of A^T."""
    A = _as_matrix(A)
    k = len(A)
    l = len(A[0]) if k else 0
    # rows of M are the columns of A
    M = [[A[i][j] for i in range(k)] for j in range(l)]
    pivots = []
    r = 0
    for c in range(k):
        p = next((i for i in range(r, l) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        pv = M[r][c]
        M[r] = [v / pv for v in M[r]]
        for i in range(l):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * bb for a, bb in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == l:
            break
    free = [c for c in range(k) if c not in pivots]
    basis = []
    for fcol in free:
        y = [ZERO] * k
        y[fcol] = ONE
        for row, pc in enumerate(pivots):
            y[pc] = -M[row][fcol]
        basis.append(y)
    return basis


def integerize(vec) -> tuple:
    """Scale a rational vector to the smallest integer vector on the same ray."""
    vec = [Fraction(v) for v in vec]
    lcm = 1
    for v in vec:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    ints = [int(v * lcm) for v in vec]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    if g > 1:
        ints = [v // g for v in ints]
    return tuple(ints)


def _row_times(z, A):
    l = len(A[0]) if A else 0
    return [sum((z[i] * A[i][j] for i in range(len(A))), ZERO) for j in range(l)]


def _check_dims(A, min_cols):
    if not A or not isinstance(A, (list, tuple)):
        raise DimensionError("matrix needs at least one row")
    width = len(A[0])
    if width < min_cols or any(len(row) != width for row in A):
        raise DimensionError(f"matrix rows must have equal length >= {min_cols}")


def solve_exact_feasibility(A: Sequence[Sequence], strict: bool = True) -> FeasibilityOutcome:
    if strict:
        _check_dims(A, 1)
        out = _solve_strict(_as_matrix(A))
    else:
        _check_dims(A, 1)
        out = _solve_nonstrict(_as_matrix(A))
    if not verify_outcome(A, out):
        raise InternalInconsistency("solver produced an outcome that fails re-verification")
    return out


def _solve_strict(A) -> FeasibilityOutcome:
    k, l = len(A), len(A[0])
    ones = [ONE] * k
    # free solvability of A nu = 1 first: an obstruction here is a zA = 0 certificate
    for y in left_null_space(A):
        if sum(y) != 0:
            z = list(integerize(y))
            first = next(v for v in z if v != 0)
            if first < 0:
                z = [-v for v in z]
            return FeasibilityOutcome(certificate=tuple(z), strict=True)

    # nu = s + t*1 with s >= 0, 0 <= t <= 1; maximise t
    rowsum = [sum(row, ZERO) for row in A]
    M = [A[i] + [rowsum[i], ZERO] for i in range(k)]
    M.append([ZERO] * l + [ONE, ONE])
    b = ones + [ONE]
    c = [ZERO] * l + [-ONE, ZERO]
    res = linprog_exact(M, b, c)
    if res.status == "optimal" and res.x[l] > 0:
        t = res.x[l]
        return FeasibilityOutcome(witness=tuple(res.x[j] + t for j in range(l)), strict=True)
    if res.status == "unbounded":  # cannot happen with t <= 1
        raise InternalInconsistency("bounded LP reported unbounded")
    z = integerize(res.y[:k])
    return FeasibilityOutcome(certificate=z, strict=True)


def _solve_nonstrict(Ah) -> FeasibilityOutcome:
    l = len(Ah[0]) - 1
    A = [row[:l] for row in Ah]
    b = [-row[l] for row in Ah]
    res = linprog_exact(A, b, [ZERO] * l)
    if res.status == "infeasible":
        return FeasibilityOutcome(certificate=integerize(res.y), strict=False)
    return FeasibilityOutcome(witness=tuple(res.x), strict=False)


def verify_outcome(A, outcome: FeasibilityOutcome) -> bool:
    """Independent substitution check of a witness or certificate."""
    A = _as_matrix(A)
    k = len(A)
    if (outcome.witness is None) == (outcome.certificate is None):
        return False
    if outcome.strict:
        if outcome.witness is not None:
            nu = outcome.witness
            if len(nu) != len(A[0]) or any(v <= 0 for v in nu):
                return False
            return all(sum((a * v for a, v in zip(row, nu)), ZERO) == 1 for row in A)
        z = outcome.certificate
        if len(z) != k:
            return False
        zA = _row_times(z, A)
        z1 = sum(z)
        if all(v == 0 for v in zA):
            return z1 != 0
        return all(v <= 0 for v in zA) and z1 >= 0
    l = len(A[0]) - 1
    if outcome.witness is not None:
        nu = outcome.witness
        if len(nu) != l or any(v < 0 for v in nu):
            return False
        return all(sum((row[j] * nu[j] for j in range(l)), ZERO) + row[l] == 0 for row in A)
    z = outcome.certificate
    if len(z) != k:
        return False
    zA = _row_times(z, A)
    return all(v <= 0 for v in zA[:l]) and zA[l] < 0
