"""Random operator systems with solvable homogeneity weights, for property tests and benchmarks."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .operators import MultiIndex, OperatorSystem, PolyCoefficient

_WEIGHT_CHOICES = (Fraction(1), Fraction(1, 2), Fraction(1, 3))


def _weight_one_indices(beta):
    """All multi-indices with ``<alpha, beta> = 1``."""
    bounds = [int(1 / b) for b in beta]
    out = []
    for exps in itertools.product(*(range(b + 1) for b in bounds)):
        if sum(Fraction(e) * b for e, b in zip(exps, beta)) == 1:
            out.append(exps)
    return out


def _random_poly(rng, d, constant_only):
    c = int(rng.integers(-3, 4)) or 1
    terms = {(0,) * d: Fraction(c)}
    if not constant_only and rng.random() < 0.5:
        k = int(rng.integers(d))
        e = [0] * d
        e[k] = int(rng.integers(1, 3))
        terms[tuple(e)] = Fraction(int(rng.integers(-2, 3)), int(rng.integers(1, 3)))
    return PolyCoefficient(d, terms)


def random_operator(rng, max_d=3, max_m=3, max_n=2, max_terms=5, polynomial=True):
    """Draw an operator whose principal parts are antichains of weight-one multi-indices.

    Coefficient vectors are drawn from a random subspace of rank below ``m``
    about half of the time, so intersection cones are often nontrivial.
    """
    d = int(rng.integers(1, max_d + 1))
    m = int(rng.integers(1, max_m + 1))
    n = int(rng.integers(1, max_n + 1))
    rank = int(rng.integers(1, m + 1)) if rng.random() < 0.5 else m
    span = rng.integers(-2, 3, size=(rank, m))
    for row in span:
        if not np.any(row):
            row[int(rng.integers(m))] = 1
    equations = []
    for _ in range(n):
        beta = tuple(_WEIGHT_CHOICES[i] for i in rng.integers(len(_WEIGHT_CHOICES), size=d))
        candidates = _weight_one_indices(beta)
        n_lead = int(rng.integers(1, min(len(candidates), max_terms) + 1))
        lead = [candidates[i] for i in rng.choice(len(candidates), n_lead, replace=False)]
        eq = {}
        for a in lead:
            vec = rng.integers(-2, 3, size=rank) @ span
            if not np.any(vec):
                vec = span[int(rng.integers(rank))]
            # a shared polynomial factor keeps every coefficient vector in the span
            scale = _random_poly(rng, d, not polynomial or rng.random() < 0.7)
            coeffs = [scale * int(v) for v in vec]
            eq[MultiIndex(a)] = tuple(coeffs)
        # dominated lower-order terms
        extra = int(rng.integers(0, max(1, max_terms - n_lead) + 1))
        for _ in range(extra):
            top = lead[int(rng.integers(len(lead)))]
            low = tuple(int(rng.integers(0, e + 1)) for e in top)
            if low == top:
                continue
            eq.setdefault(MultiIndex(low), tuple(_random_poly(rng, d, not polynomial) for _ in range(m)))
        equations.append(eq)
    return OperatorSystem(d, m, tuple(equations))


def operator_corpus(size=20, seed=0, **kwargs):
    rng = np.random.default_rng(seed)
    return [random_operator(rng, **kwargs) for _ in range(size)]
