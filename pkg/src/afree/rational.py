"""Exact linear algebra over the rationals.

Small dense routines on lists of ``Fraction``: row reduction, consistency
checks, minimum-norm solutions, and a two-phase simplex with Bland's rule.
Sizes here are tiny (at most a few dozen rows), so clarity wins over speed.
"""

from __future__ import annotations

from fractions import Fraction


class InconsistentSystem(Exception):
    pass


class Unbounded(Exception):
    pass


def _frac_matrix(rows):
    return [[Fraction(v) for v in row] for row in rows]


def rref(rows):
    """Reduced row echelon form. Returns ``(matrix, pivot_columns)``."""
    a = _frac_matrix(rows)
    if not a:
        return a, []
    n_rows, n_cols = len(a), len(a[0])
    pivots = []
    r = 0
    for c in range(n_cols):
        piv = next((i for i in range(r, n_rows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        p = a[r][c]
        a[r] = [v / p for v in a[r]]
        for i in range(n_rows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return a, pivots


def rank(rows):
    return len(rref(rows)[1])


def nullspace(rows, n_cols=None):
    """Rational basis of ``{x : A x = 0}``."""
    if not rows:
        n = n_cols or 0
        return [[Fraction(int(i == k)) for i in range(n)] for k in range(n)]
    r, pivots = rref(rows)
    n = len(r[0])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -r[i][f]
        basis.append(v)
    return basis


def solve_square(a, b):
    """Solve a nonsingular square system exactly."""
    aug = [list(row) + [bi] for row, bi in zip(_frac_matrix(a), b)]
    r, pivots = rref(aug)
    n = len(a)
    if pivots[:n] != list(range(n)):
        raise InconsistentSystem("matrix is singular")
    return [r[i][n] for i in range(n)]


def min_norm_solution(a, b):
    """Minimum Euclidean norm solution of ``A x = b``.

    The solution lies in the row space of ``A``: with ``R`` an independent set
    of rows spanning it, ``x = R^T y`` where ``(R R^T) y = c``.

    Raises ``InconsistentSystem`` when no solution exists.
    """
    a = _frac_matrix(a)
    b = [Fraction(v) for v in b]
    n = len(a[0])
    aug = [row + [bi] for row, bi in zip(a, b)]
    r, pivots = rref(aug)
    if n in pivots:
        raise InconsistentSystem("right-hand side is not in the column space")
    k = len(pivots)
    rows = [r[i][:n] for i in range(k)]
    rhs = [r[i][n] for i in range(k)]
    if k == 0:
        return [Fraction(0)] * n
    gram = [[sum(x * y for x, y in zip(ri, rj)) for rj in rows] for ri in rows]
    y = solve_square(gram, rhs)
    return [sum(y[i] * rows[i][c] for i in range(k)) for c in range(n)]


def simplex_max(c, a_eq, b_eq):
    """Maximise ``c.x`` subject to ``A x = b``, ``x >= 0`` exactly.

    Two-phase tableau simplex with Bland's anticycling rule. Returns
    ``(optimum, x)``; raises ``InconsistentSystem`` if infeasible and
    ``Unbounded`` if the objective is unbounded.
    """
    a = _frac_matrix(a_eq)
    b = [Fraction(v) for v in b_eq]
    m = len(a)
    n = len(c)
    for i in range(m):
        if b[i] < 0:
            a[i] = [-v for v in a[i]]
            b[i] = -b[i]
    # phase one: artificial variables n..n+m-1
    tab = [a[i] + [Fraction(int(i == k)) for k in range(m)] + [b[i]] for i in range(m)]
    basis = [n + i for i in range(m)]
    total = n + m

    def pivot(row, col):
        p = tab[row][col]
        tab[row] = [v / p for v in tab[row]]
        for i in range(m):
            if i != row and tab[i][col] != 0:
                f = tab[i][col]
                tab[i] = [vi - f * vr for vi, vr in zip(tab[i], tab[row])]
        basis[row] = col

    def run(cost, allowed):
        while True:
            # reduced costs for maximisation: cost_j - c_B B^-1 A_j
            entering = None
            for j in range(total):
                if j not in allowed or j in basis:
                    continue
                red = cost[j] - sum(cost[basis[i]] * tab[i][j] for i in range(m))
                if red > 0:
                    entering = j
                    break
            if entering is None:
                return
            best = None
            for i in range(m):
                if tab[i][entering] > 0:
                    ratio = tab[i][-1] / tab[i][entering]
                    if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                raise Unbounded("objective is unbounded")
            pivot(best[1], entering)

    phase1 = [Fraction(0)] * n + [Fraction(-1)] * m
    run(phase1, set(range(total)))
    if any(basis[i] >= n and tab[i][-1] != 0 for i in range(m)):
        raise InconsistentSystem("no feasible point")
    # drive remaining (zero-level) artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            col = next((j for j in range(n) if tab[i][j] != 0), None)
            if col is not None:
                pivot(i, col)
    cost = [Fraction(v) for v in c] + [Fraction(0)] * m
    run(cost, set(range(n)))
    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tab[i][-1]
    return sum(ci * xi for ci, xi in zip(cost, x)), x
