"""Intersection and union kernel cones of principal symbols."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import subspace_angles
from scipy.optimize import minimize

from .symbols import PrincipalPart, sample_manifold, symbol_batch

SVD_RTOL = 1e-10


@dataclass
class ConeResult:
    """Orthonormal basis of a subspace of ``R^m``."""

    basis: np.ndarray  # (dimension, m)
    method: str
    m: int
    residuals: dict = field(default_factory=dict)
    per_equation: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def dimension(self):
        return self.basis.shape[0]

    def projector(self):
        return self.basis.T @ self.basis

    def contains(self, f, tol=1e-8):
        f = np.asarray(f, dtype=float)
        return float(np.linalg.norm(f - self.projector() @ f)) <= tol * max(1.0, np.linalg.norm(f))

    def to_dict(self):
        return {
            "dimension": self.dimension,
            "basis": self.basis.tolist(),
            "method": self.method,
            "residuals": self.residuals,
            "per_equation": self.per_equation,
            "warnings": self.warnings,
        }


def numerical_nullspace(mat, rtol=SVD_RTOL):
    """Right nullspace of ``mat`` via SVD; singular values <= ``rtol * s_max`` count as zero.

    Returns ``(basis rows, singular values)``. Each basis vector is sign-fixed
    so its first entry above ``1e-8`` in magnitude is positive.
    """
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    m = mat.shape[1]
    if mat.size == 0:
        return np.eye(m), np.zeros(0)
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * smax)) if smax > 0 else 0
    basis = vh[rank:].copy()
    for row in basis:
        k = int(np.argmax(np.abs(row) > 1e-8))
        if row[k] < 0:
            row *= -1
    return basis, s


def _stack_real(rows):
    rows = np.asarray(rows)
    if np.iscomplexobj(rows):
        return np.vstack([rows.real, rows.imag])
    return rows


def intersection_cone_exact(pp: PrincipalPart, x) -> ConeResult:
    """Nullspace of the matrix whose rows are ``(a^alpha_jk(x))_k`` for all ``j`` and ``alpha in I'_j``.

    Every monomial of a principal symbol has anisotropic degree one, so the
    symbol vanishes on the whole manifold only if each monomial coefficient
    does.
    """
    table = pp.coefficient_table(x)
    rows = [c for _, _, coefs in table for c in coefs]
    mat = np.array(rows).reshape(-1, pp.m)
    basis, s = numerical_nullspace(mat)
    per_eq = {j + 1: {"rows": int(len(table[j][2])),
                      "rank": int(np.linalg.matrix_rank(table[j][2])) if len(table[j][2]) else 0}
              for j in range(pp.n)}
    return ConeResult(basis, "exact", pp.m, {"singular_values": s.tolist()}, per_eq)


def intersection_cone_sampled(pp: PrincipalPart, frames, x, n_samples=64, seed=0, tol=SVD_RTOL) -> ConeResult:
    """Nullspace of symbols stacked over ``n_samples`` points of every manifold ``P_j``.

    Real and imaginary parts enter as separate real rows, so the basis is real.
    """
    blocks = []
    per_eq = {}
    for j, frame in enumerate(frames):
        xis = sample_manifold(frame, n_samples, seed=seed + j)
        sym = symbol_batch(pp, x, xis)[:, j, :]
        block = _stack_real(sym)
        blocks.append(block)
        per_eq[j + 1] = {"samples": n_samples, "rank": int(np.linalg.matrix_rank(block)) if block.size else 0}
    mat = np.vstack(blocks) if blocks else np.zeros((0, pp.m))
    basis, s = numerical_nullspace(mat, tol)
    warnings = []
    if n_samples < pp.m:
        warnings.append(f"only {n_samples} samples for m = {pp.m}: dimension may be overestimated")
    return ConeResult(basis, "sampled", pp.m, {"singular_values": s.tolist()}, per_eq, warnings)


def principal_angles(a: ConeResult, b: ConeResult):
    """Largest principal angle between two cones; ``inf`` if dimensions differ."""
    if a.dimension != b.dimension:
        return float("inf")
    if a.dimension == 0:
        return 0.0
    return float(np.max(subspace_angles(a.basis.T, b.basis.T)))


@dataclass
class UnionMembership:
    member: bool
    min_residual: float
    witness: np.ndarray


def union_wave_cone_membership(pp: PrincipalPart, frame, x, f, n_samples=256, tol=1e-6, seed=0):
    """Is ``f`` annihilated by the full symbol ``A(x, xi)`` for some ``xi`` on ``P``?

    Minimises ``|A(x, xi) f| / |f|`` over manifold samples, then polishes the
    best few candidates with BFGS in the unnormalised variable before
    projecting back onto ``P``.
    """
    f = np.asarray(f, dtype=float)
    nf = np.linalg.norm(f)
    if nf == 0:
        raise ValueError("f must be nonzero")
    f = f / nf
    xis = sample_manifold(frame, n_samples, seed=seed)

    def residual(batch):
        return np.linalg.norm(symbol_batch(pp, x, batch) @ f, axis=1)

    res = residual(xis)
    order = np.argsort(res)[: min(4, len(res))]
    best_xi, best = xis[order[0]], float(res[order[0]])

    def objective(v):
        if not np.any(v):
            return 1e300
        return float(residual(frame.project(v)[None, :])[0] ** 2)

    for i in order:
        if best < tol * 1e-3:
            break
        out = minimize(objective, xis[i], method="BFGS", options={"gtol": 1e-14})
        if np.any(out.x):
            cand = frame.project(out.x)
            r = float(residual(cand[None, :])[0])
            if r < best:
                best, best_xi = r, cand
    return UnionMembership(best < tol, best, best_xi)


@dataclass
class PointwiseReport:
    passed: bool
    max_residual: float
    per_equation: dict
    n_samples: int
    tol: float

    def to_dict(self):
        return {"passed": self.passed, "max_residual": self.max_residual,
                "per_equation": self.per_equation, "samples": self.n_samples, "tol": self.tol}


def check_theorem_pointwise(pp: PrincipalPart, frames, x, f, n_samples=64, tol=1e-10, seed=0):
    """Max over manifold samples of ``|A_j(x, xi) f|``, for each equation on its own ``P_j``."""
    f = np.asarray(f, dtype=float)
    if abs(np.linalg.norm(f) - 1.0) > 1e-12:
        raise ValueError("f must be a unit vector")
    per_eq = {}
    worst = 0.0
    for j, frame in enumerate(frames):
        xis = sample_manifold(frame, n_samples, seed=seed + j)
        vals = np.abs(symbol_batch(pp, x, xis)[:, j, :] @ f)
        r = float(vals.max())
        per_eq[j + 1] = r
        worst = max(worst, r)
    return PointwiseReport(worst < tol, worst, per_eq, n_samples, tol)
