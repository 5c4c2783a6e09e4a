"""Principal parts, homogeneity weights, symbols and anisotropic geometry."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionError, HomogeneityViolated, Infeasible, NoPositiveSolution, ZeroFrequency
from .operators import MultiIndex, OperatorSystem, PolyCoefficient, evaluate_coefficient
from .rational import InconsistentSystem, min_norm_solution, simplex_max

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PrincipalPart:
    """Non-dominated terms ``I'_j`` of each equation, with their coefficients."""

    d: int
    m: int
    equations: tuple[Mapping[MultiIndex, tuple[PolyCoefficient, ...]], ...]
    operator: OperatorSystem | None = None

    @property
    def n(self):
        return len(self.equations)

    def dominating_set(self, j):
        return list(self.equations[j].keys())

    def lower_order(self, j):
        """Terms of equation ``j`` left out of the principal part."""
        if self.operator is None:
            return {}
        return {a: c for a, c in self.operator.equations[j].items() if a not in self.equations[j]}

    def coefficient_table(self, x):
        """Per equation: ``(exponents (K, d), orders (K,), coefficients (K, m))`` at ``x``."""
        x = _as_point(x, self.d, "x")
        return [_coeff_table(eq, x, self.d, self.m) for eq in self.equations]


def _coeff_table(eq, x, d, m):
    if not eq:
        return np.zeros((0, d), dtype=int), np.zeros(0, dtype=int), np.zeros((0, m))
    exps = np.array([a.exponents for a in eq], dtype=int)
    coefs = np.array([[float(evaluate_coefficient(c, x)) for c in cs] for cs in eq.values()])
    return exps, exps.sum(axis=1), coefs


def _as_point(p, d, name):
    if isinstance(p, np.ndarray):
        if p.shape != (d,):
            raise DimensionError(f"{name} must have length {d}, got shape {p.shape}")
        return tuple(float(v) for v in p)
    p = tuple(p)
    if len(p) != d:
        raise DimensionError(f"{name} must have length {d}, got {len(p)}")
    return p


def principal_part(op: OperatorSystem) -> PrincipalPart:
    """Keep, per equation, the multi-indices not dominated by another one.

    ``alpha`` is dominated by ``alpha'`` when ``alpha <= alpha'`` componentwise
    and the two differ. The zero multi-index never enters a principal part.
    """
    eqs = []
    for eq in op.equations:
        idx = list(eq.keys())
        keep = {a: eq[a] for a in idx
                if not a.is_zero() and not any(a.dominated_by(b) for b in idx)}
        eqs.append(keep)
    return PrincipalPart(op.d, op.m, tuple(eqs), op)


@dataclass(frozen=True)
class HomogeneityWeights:
    """One positive rational weight vector ``beta^j`` per equation."""

    rows: tuple[tuple[Fraction, ...], ...]

    def __getitem__(self, j):
        return self.rows[j]

    def __len__(self):
        return len(self.rows)

    def frames(self):
        return [AnisotropicFrame(row) for row in self.rows]


def _solve_one(exps, d, j):
    if not exps:
        raise Infeasible(f"equation {j + 1} has no derivative terms in its principal part",
                         equation=j, system=[])
    rows = [list(a) for a in exps]
    system = [(r, 1) for r in rows]
    try:
        beta = min_norm_solution(rows, [1] * len(rows))
    except InconsistentSystem:
        raise Infeasible(
            f"equation {j + 1}: <alpha, beta> = 1 has no solution for I' = "
            + ", ".join(str(tuple(r)) for r in rows), equation=j, system=system) from None
    if all(b > 0 for b in beta):
        return tuple(beta)
    # max t s.t. A beta = 1, beta_k - t - s_k = 0, t + s_t = 1, all variables >= 0
    nv = 2 * d + 2
    t_col, st_col = d, 2 * d + 1
    a_eq, b_eq = [], []
    for r in rows:
        a_eq.append(r + [0] * (d + 2))
        b_eq.append(1)
    for k in range(d):
        row = [0] * nv
        row[k], row[t_col], row[d + 1 + k] = 1, -1, -1
        a_eq.append(row)
        b_eq.append(0)
    row = [0] * nv
    row[t_col] = row[st_col] = 1
    a_eq.append(row)
    b_eq.append(1)
    cost = [0] * nv
    cost[t_col] = 1
    opt, x = simplex_max(cost, a_eq, b_eq)
    if opt <= 0:
        raise NoPositiveSolution(
            f"equation {j + 1}: <alpha, beta> = 1 is solvable but has no strictly positive solution",
            equation=j, system=system)
    return tuple(x[:d])


def solve_weights(pp: PrincipalPart) -> HomogeneityWeights:
    """Positive rational ``beta^j`` with ``<alpha, beta^j> = 1`` on every ``I'_j``.

    The minimum-norm solution is preferred; if it is not strictly positive an
    exact LP maximising ``min_k beta_k`` picks a positive vertex instead.
    """
    rows = []
    for j, eq in enumerate(pp.equations):
        exps = [a.exponents for a in eq]
        beta = _solve_one(exps, pp.d, j)
        assert all(MultiIndex(a).weighted_order(beta) == 1 for a in exps)
        rows.append(tuple(beta))
    return HomogeneityWeights(tuple(rows))


@dataclass(frozen=True)
class AnisotropicFrame:
    """Dilation ``xi_k -> lam^beta_k xi_k`` with its quasi-norm, unit manifold and projection."""

    beta: tuple[Fraction, ...]

    def __post_init__(self):
        beta = tuple(Fraction(b) for b in self.beta)
        if any(b <= 0 for b in beta):
            raise ValueError("weights must be strictly positive")
        object.__setattr__(self, "beta", beta)

    @property
    def d(self):
        return len(self.beta)

    @property
    def weights(self):
        return np.array([float(b) for b in self.beta])

    def dilate(self, xi, lam):
        return np.asarray(xi, dtype=float) * float(lam) ** self.weights

    def quasi_norm(self, xi):
        return quasi_norm(self, xi)

    def project(self, xi):
        return project_to_manifold(self, xi)

    def literal_denominator(self, xi):
        """``sum_k |xi_k|^beta_k``: the alternative multiplier denominator, kept for comparison."""
        xi = np.asarray(xi, dtype=float)
        return np.sum(np.abs(xi) ** self.weights, axis=-1)

    def describe(self):
        terms = " + ".join(f"|xi{k + 1}|^{_fmt(1 / b)}" for k, b in enumerate(self.beta))
        return f"P = {{ xi in R^{self.d} : {terms} = 1 }}"


def _fmt(q):
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"({q.numerator}/{q.denominator})"


def quasi_norm(frame: AnisotropicFrame, xi):
    """``sum_k |xi_k|^(1/beta_k)``; accepts a point or an ``(N, d)`` batch."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != frame.d:
        raise DimensionError(f"xi must have trailing length {frame.d}")
    return np.sum(np.abs(xi) ** (1.0 / frame.weights), axis=-1)


def project_to_manifold(frame: AnisotropicFrame, xi):
    """``pi(xi) = (xi_k / r(xi)^beta_k)_k`` with ``r`` the quasi-norm."""
    xi = np.asarray(xi, dtype=float)
    r = quasi_norm(frame, xi)
    if np.any(r == 0):
        raise ZeroFrequency("cannot project xi = 0 onto the homogeneity manifold")
    return xi / np.power.outer(r, frame.weights) if xi.ndim > 1 else xi / r ** frame.weights


def sample_manifold(frame: AnisotropicFrame, n_points: int, seed: int = 0):
    """``n_points`` deterministic points on ``P``: Gaussian directions pushed through ``pi``."""
    if n_points < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n_points, frame.d))
    tiny = np.linalg.norm(g, axis=1) == 0
    g[tiny, 0] = 1.0
    return project_to_manifold(frame, g)


def symbol_batch(pp: PrincipalPart, x, xis):
    """Principal symbols at one ``x`` for many frequencies: shape ``(N, n, m)``."""
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    if xis.shape[1] != pp.d:
        raise DimensionError(f"xi must have length {pp.d}")
    out = np.zeros((xis.shape[0], pp.n, pp.m), dtype=complex)
    for j, (exps, orders, coefs) in enumerate(pp.coefficient_table(x)):
        if len(orders) == 0:
            continue
        mono = np.prod(xis[:, None, :] ** exps[None, :, :], axis=2)      # (N, K)
        factor = (2j * np.pi) ** orders                                    # (K,)
        out[:, j, :] = (mono * factor) @ coefs
    return out


def evaluate_symbol(pp: PrincipalPart, x, xi):
    """``A(x, xi)``: entry ``(j, k)`` is ``sum_{alpha in I'_j} a^alpha_jk(x) (2 pi i xi)^alpha``."""
    xi = _as_point(xi, pp.d, "xi")
    return symbol_batch(pp, x, [xi])[0]


@dataclass
class HomogeneityReport:
    trials: int
    max_error: float
    worst: tuple | None = None


def check_homogeneity(pp: PrincipalPart, weights: HomogeneityWeights, trials=100, seed=0, tol=1e-12):
    """Randomised check of ``A_j(x, lam^beta xi) = lam A_j(x, xi)``.

    The error of entry ``(j, k)`` is measured relative to
    ``lam * sum_alpha |a^alpha_jk(x)| |2 pi xi|^alpha``, the size of the
    terms being summed, which avoids spurious blow-up when they cancel.
    """
    rng = np.random.default_rng(seed)
    worst_err, worst = 0.0, None
    for _ in range(trials):
        x = tuple(rng.uniform(-1, 1, pp.d))
        xi = rng.standard_normal(pp.d)
        lam = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        table = pp.coefficient_table(x)
        for j in range(pp.n):
            exps, orders, coefs = table[j]
            if len(orders) == 0:
                continue
            frame = AnisotropicFrame(weights[j])
            xl = frame.dilate(xi, lam)
            lhs = ((2j * np.pi) ** orders * np.prod(xl ** exps, axis=1)) @ coefs
            rhs = lam * (((2j * np.pi) ** orders * np.prod(xi ** exps, axis=1)) @ coefs)
            scale = lam * ((TWO_PI ** orders * np.abs(np.prod(xi ** exps, axis=1))) @ np.abs(coefs))
            err = np.abs(lhs - rhs) / np.where(scale > 0, scale, 1.0)
            e = float(err.max())
            if e > worst_err:
                worst_err, worst = e, (x, tuple(xi), lam, j)
    if worst_err >= tol:
        raise HomogeneityViolated(f"homogeneity error {worst_err:.3e} exceeds {tol:.1e}", witness=worst)
    return HomogeneityReport(trials, worst_err, worst)
