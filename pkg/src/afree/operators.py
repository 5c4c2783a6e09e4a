"""Data model for linear differential operator systems with polynomial coefficients.

An operator system acts on a measure ``mu = (mu_1, ..., mu_m)`` on ``R^d`` as

    (A mu)_j = sum_{alpha in I_j} sum_k d^alpha (a^alpha_jk(x) mu_k),   j = 1..n

Equations are stored 0-based internally; the textual DSL uses 1-based
component names ``u1 .. um``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True, order=False)
class MultiIndex:
    """Derivative order ``alpha = (alpha_1, ..., alpha_d)``."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if any(e < 0 for e in exps):
            raise ValueError(f"negative exponent in multi-index {exps}")
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def zero(cls, d):
        return cls((0,) * d)

    @classmethod
    def unit(cls, d, k):
        e = [0] * d
        e[k] = 1
        return cls(tuple(e))

    @property
    def dim(self):
        return len(self.exponents)

    @property
    def order(self):
        return sum(self.exponents)

    def is_zero(self):
        return self.order == 0

    def _check(self, other):
        if not isinstance(other, MultiIndex):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionError(f"multi-index lengths differ: {self.dim} vs {other.dim}")
        return other

    def __add__(self, other):
        other = self._check(other)
        return MultiIndex(tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    # componentwise partial order
    def __le__(self, other):
        other = self._check(other)
        return all(a <= b for a, b in zip(self.exponents, other.exponents))

    def __ge__(self, other):
        other = self._check(other)
        return all(a >= b for a, b in zip(self.exponents, other.exponents))

    def __lt__(self, other):
        return self <= other and self != other

    def __gt__(self, other):
        return self >= other and self != other

    def dominated_by(self, other):
        """True when ``other`` is componentwise >= ``self`` and differs from it."""
        return self < other

    def weighted_order(self, weights):
        return sum(Fraction(a) * Fraction(w) for a, w in zip(self.exponents, weights))

    def __iter__(self):
        return iter(self.exponents)

    def __len__(self):
        return len(self.exponents)

    def __getitem__(self, k):
        return self.exponents[k]

    def __repr__(self):
        return "(" + ",".join(str(e) for e in self.exponents) + ")"

    def sort_key(self):
        return (-self.order, tuple(-e for e in self.exponents))


@dataclass(frozen=True)
class PolyCoefficient:
    """Polynomial ``x -> sum_c q_c x^c`` with rational coefficients.

    Stored as a sorted tuple of ``(exponent tuple, Fraction)`` pairs with no
    zero entries, so structural equality and hashing are exact.
    """

    dim: int
    terms: tuple[tuple[tuple[int, ...], Fraction], ...] = ()

    def __post_init__(self):
        acc: dict[tuple[int, ...], Fraction] = {}
        raw = self.terms.items() if isinstance(self.terms, Mapping) else self.terms
        for exps, coef in raw:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.dim:
                raise DimensionError(
                    f"monomial {exps} has length {len(exps)}, expected {self.dim}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in monomial {exps}")
            acc[exps] = acc.get(exps, Fraction(0)) + Fraction(coef)
        cleaned = tuple(sorted((e, c) for e, c in acc.items() if c != 0))
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def constant(cls, dim, value):
        return cls(dim, {(0,) * dim: Fraction(value)})

    @classmethod
    def zero(cls, dim):
        return cls(dim, ())

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return all(sum(e) == 0 for e, _ in self.terms)

    @property
    def degree(self):
        return max((sum(e) for e, _ in self.terms), default=0)

    def as_dict(self):
        return dict(self.terms)

    def __add__(self, other):
        if self.dim != other.dim:
            raise DimensionError("cannot add polynomials in different dimensions")
        return PolyCoefficient(self.dim, list(self.terms) + list(other.terms))

    def __neg__(self):
        return PolyCoefficient(self.dim, [(e, -c) for e, c in self.terms])

    def __mul__(self, other):
        if isinstance(other, PolyCoefficient):
            if self.dim != other.dim:
                raise DimensionError("cannot multiply polynomials in different dimensions")
            out = []
            for e1, c1 in self.terms:
                for e2, c2 in other.terms:
                    out.append((tuple(a + b for a, b in zip(e1, e2)), c1 * c2))
            return PolyCoefficient(self.dim, out)
        scalar = Fraction(other)
        return PolyCoefficient(self.dim, [(e, c * scalar) for e, c in self.terms])

    __rmul__ = __mul__

    def __call__(self, x):
        return evaluate_coefficient(self, x)

    def evaluate_many(self, points):
        """Float evaluation at an ``(N, d)`` array of points."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise DimensionError(f"expected points of shape (N, {self.dim}), got {pts.shape}")
        out = np.zeros(pts.shape[0])
        for exps, coef in self.terms:
            out += float(coef) * np.prod(pts ** np.asarray(exps), axis=1)
        return out

    def __str__(self):
        from .dsl import format_poly
        return format_poly(self)


def evaluate_coefficient(c: PolyCoefficient, x: Sequence) -> Fraction | float:
    """Evaluate a polynomial coefficient at a point.

    Exact (``Fraction``) when every coordinate of ``x`` is an int or
    ``Fraction``, otherwise a float computed from the exact coefficients.
    """
    x = tuple(x)
    if len(x) != c.dim:
        raise DimensionError(f"point has length {len(x)}, coefficient lives in R^{c.dim}")
    exact = all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in x)
    if exact:
        total = Fraction(0)
        for exps, coef in c.terms:
            term = coef
            for v, e in zip(x, exps):
                if e:
                    term *= Fraction(v) ** e
            total += term
        return total
    xf = [float(v) for v in x]
    total = 0.0
    for exps, coef in c.terms:
        term = float(coef)
        for v, e in zip(xf, exps):
            if e:
                term *= v ** e
        total += term
    return total


@dataclass(frozen=True)
class OperatorSystem:
    """Linear operator system of ``n`` equations on ``m``-vector measures in ``R^d``.

    ``equations[j]`` maps each multi-index ``alpha`` of equation ``j`` to the
    length-``m`` tuple of coefficients ``(a^alpha_j1, ..., a^alpha_jm)``.
    """

    d: int
    m: int
    equations: tuple[Mapping[MultiIndex, tuple[PolyCoefficient, ...]], ...] = field(default=())

    def __post_init__(self):
        if self.d < 1 or self.m < 1:
            raise DimensionError("d and m must be positive")
        if not self.equations:
            raise ValueError("an operator system needs at least one equation")
        eqs = []
        for j, eq in enumerate(self.equations):
            clean = {}
            for alpha, coeffs in eq.items():
                if not isinstance(alpha, MultiIndex):
                    alpha = MultiIndex(tuple(alpha))
                if alpha.dim != self.d:
                    raise DimensionError(
                        f"equation {j + 1}: multi-index {alpha} has length {alpha.dim}, expected {self.d}")
                coeffs = tuple(coeffs)
                if len(coeffs) != self.m:
                    raise DimensionError(
                        f"equation {j + 1}: coefficient vector has {len(coeffs)} entries, expected {self.m}")
                for c in coeffs:
                    if c.dim != self.d:
                        raise DimensionError(f"equation {j + 1}: coefficient lives in R^{c.dim}")
                if any(not c.is_zero() for c in coeffs):
                    clean[alpha] = coeffs
            if not clean:
                raise ValueError(f"equation {j + 1} has no nonzero term")
            eqs.append(dict(sorted(clean.items(), key=lambda kv: kv[0].sort_key())))
        object.__setattr__(self, "equations", tuple(eqs))

    @property
    def n(self):
        return len(self.equations)

    def index_set(self, j):
        """The multi-index set ``I_j`` of equation ``j`` (0-based)."""
        return list(self.equations[j].keys())

    @property
    def max_order(self):
        return max(a.order for eq in self.equations for a in eq)

    def coefficient_matrix(self, j, alpha, x):
        """Float vector ``(a^alpha_jk(x))_k``; zeros if ``alpha`` not in ``I_j``."""
        coeffs = self.equations[j].get(alpha)
        if coeffs is None:
            return np.zeros(self.m)
        return np.array([float(evaluate_coefficient(c, x)) for c in coeffs])

    def __eq__(self, other):
        if not isinstance(other, OperatorSystem):
            return NotImplemented
        return (self.d, self.m, self.equations) == (other.d, other.m, other.equations)

    def __hash__(self):
        return hash((self.d, self.m, tuple(tuple(sorted(eq.items(), key=lambda kv: kv[0].exponents))
                                           for eq in self.equations)))

    def __str__(self):
        from .dsl import serialize_operator
        return serialize_operator(self)


def constant_operator(d, m, equations):
    """Build an operator from plain numbers.

    ``equations`` is a list of dicts ``{alpha_tuple: [c_1, ..., c_m]}``.
    Convenience for tests and the random corpus.
    """
    eqs = []
    for eq in equations:
        eqs.append({MultiIndex(tuple(a)): tuple(PolyCoefficient.constant(d, c) for c in cs)
                    for a, cs in eq.items()})
    return OperatorSystem(d, m, tuple(eqs))
