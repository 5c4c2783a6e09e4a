"""Discrete vector-valued Radon measures: atoms plus a grid density.

The singular part of a :class:`DiscreteMeasure` is its atoms and the
absolutely continuous part is its density grid, so the Lebesgue
decomposition is read off the representation. Lower-dimensional singular
measures (lines, curves) are approximated by dense chains of atoms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, MeasureOutsideWindow, ZeroSingularPart
from .kernels import TensorBump
from .operators import OperatorSystem


@dataclass(frozen=True)
class DensityGrid:
    """Cell values of an absolutely continuous density on a uniform grid.

    ``origin`` is the lower corner; cell ``i`` has center ``origin + (i + 1/2) h``.
    ``values`` has shape ``shape + (m,)``.
    """

    origin: np.ndarray
    h: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        if self.values.ndim != self.origin.size + 1:
            raise DimensionError("density values must have shape grid_shape + (m,)")

    @property
    def shape(self):
        return self.values.shape[:-1]

    @property
    def d(self):
        return self.origin.size

    @property
    def m(self):
        return self.values.shape[-1]

    @property
    def cell_volume(self):
        return self.h ** self.d

    def axes(self):
        return [self.origin[k] + (np.arange(n) + 0.5) * self.h for k, n in enumerate(self.shape)]

    def centers(self):
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    def flat_values(self):
        return self.values.reshape(-1, self.m)

    def box(self):
        return self.origin, self.origin + self.h * np.asarray(self.shape)


@dataclass(frozen=True)
class DiscreteMeasure:
    d: int
    m: int
    locations: np.ndarray = None  # (K, d)
    weights: np.ndarray = None    # (K, m)
    density: DensityGrid | None = None

    def __post_init__(self):
        loc = np.zeros((0, self.d)) if self.locations is None else np.asarray(self.locations, dtype=float)
        w = np.zeros((0, self.m)) if self.weights is None else np.asarray(self.weights, dtype=float)
        loc = loc.reshape(-1, self.d)
        w = w.reshape(-1, self.m)
        if loc.shape[0] != w.shape[0]:
            raise DimensionError("one weight vector per atom is required")
        if loc.shape[0] and np.unique(loc, axis=0).shape[0] != loc.shape[0]:
            raise ValueError("atom locations must be distinct")
        if self.density is not None and (self.density.d != self.d or self.density.m != self.m):
            raise DimensionError("density grid dimensions do not match the measure")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @classmethod
    def atoms(cls, locations, weights):
        loc = np.atleast_2d(np.asarray(locations, dtype=float))
        w = np.atleast_2d(np.asarray(weights, dtype=float))
        return cls(loc.shape[1], w.shape[1], loc, w)

    @property
    def n_atoms(self):
        return self.locations.shape[0]

    def quadrature_points(self):
        """Atoms and density cells as one weighted point cloud ``(points, weights)``."""
        pts, wts = [self.locations], [self.weights]
        if self.density is not None:
            pts.append(self.density.centers())
            wts.append(self.density.flat_values() * self.density.cell_volume)
        return np.vstack(pts), np.vstack(wts)

    def support_box(self):
        boxes = []
        if self.n_atoms:
            boxes.append((self.locations.min(axis=0), self.locations.max(axis=0)))
        if self.density is not None:
            boxes.append(self.density.box())
        if not boxes:
            return None
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def total_mass(self):
        """``mu(R^d)`` as an ``m``-vector."""
        _, w = self.quadrature_points()
        return w.sum(axis=0)

    def to_dict(self):
        out = {"d": self.d, "m": self.m,
               "atoms": [{"x": x.tolist(), "w": w.tolist()} for x, w in zip(self.locations, self.weights)]}
        if self.density is not None:
            g = self.density
            out["density"] = {"origin": g.origin.tolist(), "h": g.h, "shape": list(g.shape),
                              "values": g.values.tolist()}
        return out

    @classmethod
    def from_dict(cls, data):
        d, m = int(data["d"]), int(data["m"])
        atoms = data.get("atoms", [])
        loc = np.array([a["x"] for a in atoms], dtype=float).reshape(-1, d)
        w = np.array([a["w"] for a in atoms], dtype=float).reshape(-1, m)
        dens = None
        if data.get("density"):
            g = data["density"]
            vals = np.asarray(g["values"], dtype=float).reshape(tuple(g["shape"]) + (m,))
            dens = DensityGrid(np.asarray(g["origin"], dtype=float), float(g["h"]), vals)
        return cls(d, m, loc, w, dens)


def load_measure(path):
    return DiscreteMeasure.from_dict(json.loads(Path(path).read_text()))


def save_measure(mu, path):
    Path(path).write_text(json.dumps(mu.to_dict()))


def atom_chain(d, m, start, end, spacing, direction=None, component=0, density=1.0):
    """Atoms every ``spacing`` along the segment ``start -> end``, each of mass ``spacing * density``.

    Approximates ``density`` times arc length on the segment in component ``component``.
    """
    start, end = np.asarray(start, dtype=float), np.asarray(end, dtype=float)
    length = np.linalg.norm(end - start)
    count = int(round(length / spacing))
    t = np.arange(count + 1) * spacing
    pts = start + np.outer(t / length, end - start)
    w = np.zeros((pts.shape[0], m))
    if direction is None:
        w[:, component] = spacing * density
    else:
        w[:] = spacing * density * np.asarray(direction, dtype=float)
    return DiscreteMeasure(d, m, pts, w)


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def contains(self, points):
        pts = np.atleast_2d(points)
        return np.linalg.norm(pts - np.asarray(self.center, dtype=float), axis=1) <= self.radius


def total_variation(mu: DiscreteMeasure, region: Ball | None = None) -> float:
    """``|mu|(region)``: Euclidean norms of atoms plus midpoint rule over density cells."""
    total = 0.0
    if mu.n_atoms:
        norms = np.linalg.norm(mu.weights, axis=1)
        mask = np.ones(mu.n_atoms, bool) if region is None else region.contains(mu.locations)
        total += float(norms[mask].sum())
    if mu.density is not None:
        g = mu.density
        norms = np.linalg.norm(g.flat_values(), axis=1)
        if region is not None:
            norms = norms[region.contains(g.centers())]
        total += float(norms.sum()) * g.cell_volume
    return total


def lebesgue_decompose(mu: DiscreteMeasure):
    """``(absolutely continuous part, singular part)``."""
    ac = DiscreteMeasure(mu.d, mu.m, density=mu.density)
    sing = DiscreteMeasure(mu.d, mu.m, mu.locations, mu.weights)
    return ac, sing


@dataclass
class RadonNikodymField:
    """Unit direction ``f = d mu_s / d|mu_s|`` at every atom of the singular part."""

    locations: np.ndarray
    directions: np.ndarray

    def at(self, x, tol=1e-12):
        dist = np.linalg.norm(self.locations - np.asarray(x, dtype=float), axis=1)
        i = int(np.argmin(dist))
        if dist[i] > tol:
            raise KeyError(f"no singular atom at {tuple(x)}")
        return self.directions[i]


def radon_nikodym(singular: DiscreteMeasure) -> RadonNikodymField:
    norms = np.linalg.norm(singular.weights, axis=1)
    keep = norms > 0
    if not np.any(keep):
        raise ZeroSingularPart("the singular part carries no mass")
    return RadonNikodymField(singular.locations[keep], singular.weights[keep] / norms[keep, None])


# ---------------------------------------------------------------------------
# A-free residual

@dataclass
class AfreeReport:
    residual: float
    passed: bool
    tol: float
    per_equation: dict
    witness: dict | None
    n_tests: int

    def to_dict(self):
        return {"residual": self.residual, "passed": self.passed, "tol": self.tol,
                "per_equation": self.per_equation, "witness": self.witness, "tests": self.n_tests}


def _default_window(mu):
    box = mu.support_box()
    if box is None:
        return -np.ones(mu.d), np.ones(mu.d)
    lo, hi = box
    pad = max(0.25 * float(np.max(hi - lo)), 1.0)
    return lo - pad, hi + pad


def test_family(window, resolution=5, n_scales=3):
    """Tensor bumps at dyadic scales of the window size, centred on a translation grid."""
    lo, hi = (np.asarray(v, dtype=float) for v in window)
    side = float(np.max(hi - lo))
    axes = [np.linspace(l, h, resolution) for l, h in zip(lo, hi)]
    centers = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    for s in range(1, n_scales + 1):
        scale = side / 2 ** s
        for c in centers:
            yield TensorBump(c, scale)


# keep pytest from collecting the generator above
test_family.__test__ = False


def check_afree(op: OperatorSystem, mu: DiscreteMeasure, resolution=5, tol=1e-10, window=None):
    """Largest normalised weak residual ``|<A mu, phi>| / |phi|_{C^K}`` over a bump family.

    ``<A mu, phi>_j = sum_alpha (-1)^|alpha| sum_k <mu_k, a^alpha_jk d^alpha phi>``, summed
    exactly over atoms and by the midpoint rule over density cells.
    """
    if op.d != mu.d or op.m != mu.m:
        raise DimensionError(f"operator acts on R^{op.d} x {op.m} components, measure is R^{mu.d} x {mu.m}")
    if window is None:
        window = _default_window(mu)
    else:
        lo, hi = (np.asarray(v, dtype=float) for v in window)
        box = mu.support_box()
        if box is not None and (np.any(box[0] < lo) or np.any(box[1] > hi)):
            raise MeasureOutsideWindow("measure support leaves the test window")
    pts, wts = mu.quadrature_points()
    order = op.max_order
    # effective weight per (equation, alpha): sum_k a^alpha_jk(y) w_k(y)
    terms = []
    for j, eq in enumerate(op.equations):
        for alpha, coeffs in eq.items():
            if len(pts):
                eff = sum(c.evaluate_many(pts) * wts[:, k] for k, c in enumerate(coeffs) if not c.is_zero())
            else:
                eff = np.zeros(0)
            terms.append((j, alpha, (-1) ** alpha.order * np.asarray(eff, dtype=float)))
    worst, witness, count = 0.0, None, 0
    per_eq = {j + 1: 0.0 for j in range(op.n)}
    for phi in test_family(window, resolution):
        count += 1
        norm = phi.ck_norm(order)
        vals = np.zeros(op.n)
        for j, alpha, eff in terms:
            if eff.size:
                vals[j] += float(eff @ phi.derivative(alpha.exponents, pts))
        r = np.abs(vals) / norm
        for j in range(op.n):
            per_eq[j + 1] = max(per_eq[j + 1], float(r[j]))
        if r.max() > worst:
            worst = float(r.max())
            witness = {"center": phi.center.tolist(), "scale": float(phi.scale[0]),
                       "equation": int(np.argmax(r)) + 1}
    return AfreeReport(worst, worst <= tol, tol, per_eq, witness, count)


# ---------------------------------------------------------------------------
# uniform singularity

@dataclass
class SingularityCertificate:
    point: tuple
    p: float
    q: float
    strategy: str
    epsilons: list
    inner_masses: list
    outer_masses: list
    ratios: list
    verdict: bool
    tol: float
    reason: str = ""
    alphas: list = field(default_factory=list)
    betas: list = field(default_factory=list)

    def inner_mass(self, eps):
        for e, v in zip(self.epsilons, self.inner_masses):
            if np.isclose(e, eps, rtol=1e-12, atol=0):
                return v
        raise KeyError(f"epsilon {eps} not in certificate")

    def to_dict(self):
        return {"point": list(self.point), "p": self.p, "q": self.q, "strategy": self.strategy,
                "verdict": "pass" if self.verdict else "fail", "reason": self.reason, "tol": self.tol,
                "table": [{"epsilon": e, "alpha": a, "beta": b, "inner": i, "outer": o, "ratio": r}
                          for e, a, b, i, o, r in zip(self.epsilons, self.alphas, self.betas,
                                                      self.inner_masses, self.outer_masses, self.ratios)]}

    def csv_rows(self):
        yield ["epsilon", "alpha", "beta", "inner", "outer", "ratio"]
        for row in zip(self.epsilons, self.alphas, self.betas, self.inner_masses,
                       self.outer_masses, self.ratios):
            yield [repr(float(v)) for v in row]


STRATEGIES = ("ball", "point")


def check_uniform_singularity(mu: DiscreteMeasure, x, p=2.0, q=0.5, strategy="ball", epsilons=None,
                              tol=1e-6, scales=None) -> SingularityCertificate:
    """Empirical test of the uniform singularity condition at ``x``.

    For each ``eps`` the inner set ``E`` lies in ``B(x, eps^p)``: the singular
    atoms of that ball (``"ball"``) or only the atom at ``x`` (``"point"``).
    The ratio is ``|mu_s|(B(x, eps^q) \\ E) / |mu_s|(E)``. The verdict passes when
    the last three ratios are below ``tol`` and non-increasing.

    ``scales=(alpha_fn, beta_fn)`` replaces the power-law scale functions.
    """
    if scales is None and not (p > 1 and 0 < q < 1):
        raise ValueError("need p > 1 and 0 < q < 1")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if epsilons is None:
        epsilons = [2.0 ** -k for k in range(2, 10)]
    epsilons = [float(e) for e in epsilons]
    if any(e <= 0 for e in epsilons) or any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError("epsilons must be positive and strictly decreasing")
    alpha_fn, beta_fn = scales if scales is not None else (lambda e: e ** p, lambda e: e ** q)

    _, sing = lebesgue_decompose(mu)
    x = np.asarray(x, dtype=float)
    dist = np.linalg.norm(sing.locations - x, axis=1) if sing.n_atoms else np.zeros(0)
    norms = np.linalg.norm(sing.weights, axis=1) if sing.n_atoms else np.zeros(0)

    inner, outer, ratios, alphas, betas = [], [], [], [], []
    reason = ""
    for eps in epsilons:
        a, b = float(alpha_fn(eps)), float(beta_fn(eps))
        if strategy == "ball":
            in_e = dist <= a
        else:
            in_e = dist <= 1e-12 * max(1.0, float(np.linalg.norm(x)))
        in_b = dist <= b
        mi = float(norms[in_e].sum())
        mo = float(norms[in_b & ~in_e].sum())
        inner.append(mi)
        outer.append(mo)
        alphas.append(a)
        betas.append(b)
        if mi == 0:
            ratios.append(float("inf"))
            if not reason:
                reason = f"EmptyInnerSet at epsilon={eps:g}"
        else:
            ratios.append(mo / mi)
    tail = ratios[-3:]
    verdict = (len(tail) == 3 and all(r < tol for r in tail)
               and all(b <= a for a, b in zip(tail, tail[1:])) and not reason)
    if not verdict and not reason:
        reason = "ratio tail not below tolerance" if len(tail) == 3 else "need at least 3 epsilons"
    return SingularityCertificate(tuple(x.tolist()), p, q, strategy, epsilons, inner, outer, ratios,
                                  verdict, tol, reason, alphas, betas)
