"""Numerical blow-up of the operator equation around a singular point.

The mollified equation is tested against ``phi`` rescaled anisotropically
around ``z``. After the change of variables ``x = z + eps^beta w`` and
multiplication by ``eps``, a term of order ``alpha`` in equation ``j`` reads

    (-1)^|alpha| eps^(1 - <alpha, beta>) sum_l int <prod_k rho((z_k - y_k)/eps^beta_k + w_k),
                                                   a^alpha_jl(y) mu_l(y)> d^alpha phi(w) dw

Principal terms have ``<alpha, beta> = 1`` and survive; the others form the
remainder ``R_eps``, which vanishes as ``eps -> 0``. Dividing by
``|mu_s|(E_eps)`` and letting ``eps -> 0`` gives the pointwise identity
checked in :func:`normalized_limit`; Fourier multiplier test functions turn
it into a statement about the symbol on the homogeneity manifold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cones import check_theorem_pointwise, intersection_cone_exact
from .errors import CertificateFailed, NotAFree
from .kernels import TensorBump, mollifier_profile
from .measures import (DiscreteMeasure, SingularityCertificate, check_afree, check_uniform_singularity,
                       lebesgue_decompose, radon_nikodym)
from .operators import OperatorSystem
from .parallel import parallel_map
from .symbols import AnisotropicFrame, PrincipalPart, principal_part, project_to_manifold, solve_weights


@dataclass(frozen=True)
class MollifierSpec:
    """Tensorised unit-mass bump with anisotropic scaling."""

    def profile(self, t, n=0):
        return mollifier_profile(t, n)

    def tensor(self, w):
        """``prod_k rho(w_k)`` at an ``(N, d)`` array."""
        w = np.atleast_2d(w)
        return np.prod(self.profile(w), axis=1)

    def scaled(self, x, eps, beta):
        """``rho_eps(x) = eps^-(sum beta) prod_k rho(x_k / eps^beta_k)``."""
        beta = np.asarray([float(b) for b in beta])
        x = np.atleast_2d(np.asarray(x, dtype=float))
        widths = eps ** beta
        return np.prod(self.profile(x / widths), axis=1) / np.prod(widths)


@dataclass(frozen=True)
class Grid:
    """Tensor grid of node coordinates with a uniform spacing per axis."""

    axes: tuple

    @classmethod
    def midpoint(cls, lo, hi, n):
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        n = np.broadcast_to(n, lo.shape)
        return cls(tuple(l + (np.arange(k) + 0.5) * (h - l) / k for l, h, k in zip(lo, hi, n)))

    @property
    def d(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def spacing(self):
        return np.array([a[1] - a[0] if len(a) > 1 else 1.0 for a in self.axes])

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def nodes(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)


def _tensor_kernel(profile, offsets, axes):
    """``K[a, node] = prod_k profile(offsets[a, k] + axes[k][i_k])`` flattened over nodes (C order)."""
    out = None
    for k, ax in enumerate(axes):
        fk = profile(offsets[:, k:k + 1] + ax[None, :])      # (A, N_k)
        out = fk if out is None else (out[:, :, None] * fk[:, None, :]).reshape(len(offsets), -1)
    return out


def mollify(mu: DiscreteMeasure, spec: MollifierSpec, eps, frame: AnisotropicFrame, grid: Grid):
    """``mu * rho_eps`` on ``grid`` nodes; shape ``grid.shape + (m,)``.

    Atoms are summed exactly; density cells enter as midpoint-rule point masses.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    beta = frame.weights
    widths = eps ** beta
    pts, wts = mu.quadrature_points()
    out = np.zeros((int(np.prod(grid.shape)), mu.m))
    scaled_axes = [ax / w for ax, w in zip(grid.axes, widths)]
    for start in range(0, len(pts), 512):
        y = pts[start:start + 512]
        kern = _tensor_kernel(spec.profile, -y / widths, scaled_axes)
        out += kern.T @ wts[start:start + 512]
    out /= np.prod(widths)
    return out.reshape(grid.shape + (mu.m,))


# ---------------------------------------------------------------------------
# test functions

class BumpTestFunction:
    """Tensor bump ``phi`` with analytic derivatives, integrated on a midpoint grid over its support."""

    def __init__(self, center, scale=1.0, resolution=128):
        self.bump = TensorBump(center, scale)
        lo, hi = self.bump.support_box()
        self.grid = Grid.midpoint(lo, hi, resolution)
        self._nodes = self.grid.nodes()

    def nodes(self):
        return self._nodes

    def derivative(self, alpha):
        return self.bump.derivative(alpha, self._nodes)


class GridFunction:
    """Function sampled on a periodic grid; derivatives are spectral."""

    def __init__(self, grid: Grid, values):
        self.grid = grid
        self.values = np.asarray(values)
        self._nodes = grid.nodes()
        self._hat = np.fft.fftn(self.values.reshape(grid.shape))
        self._freqs = [np.fft.fftfreq(n, d=h) for n, h in zip(grid.shape, grid.spacing)]

    def nodes(self):
        return self._nodes

    def derivative(self, alpha):
        if not any(alpha):
            return self.values.ravel()
        factor = np.ones(self.grid.shape, dtype=complex)
        for k, a in enumerate(alpha):
            if a:
                shape = [1] * self.grid.d
                shape[k] = -1
                factor = factor * ((2j * np.pi * self._freqs[k]) ** a).reshape(shape)
        return np.fft.ifftn(factor * self._hat).ravel()


@dataclass(frozen=True)
class FourierGrid:
    """Periodic grid ``[-padding, padding)^d`` with ``resolution`` nodes per axis."""

    d: int
    resolution: int = 128
    padding: float = 4.0

    def __post_init__(self):
        n = self.resolution
        if n < 2 or n & (n - 1):
            raise ValueError("resolution must be a power of two")
        if self.padding < 4:
            raise ValueError("padding factor must be at least 4")

    @property
    def h(self):
        return 2 * self.padding / self.resolution

    def grid(self):
        ax = -self.padding + self.h * np.arange(self.resolution)
        return Grid(tuple(ax for _ in range(self.d)))

    def frequencies(self):
        """Frequency nodes ``(N^d, d)`` in FFT order, and a mask of Nyquist modes."""
        f = np.fft.fftfreq(self.resolution, d=self.h)
        mesh = np.meshgrid(*([f] * self.d), indexing="ij")
        xi = np.stack([g.ravel() for g in mesh], axis=1)
        nyq = np.any(np.isclose(np.abs(xi), 0.5 / self.h), axis=1)
        return xi, nyq

    @property
    def dxi(self):
        return 1.0 / (2 * self.padding) ** self.d


def coordinate_psi(r):
    """``psi(eta) = eta_r`` on the manifold."""
    def psi(eta):
        return eta[:, r]
    psi.__name__ = f"xi{r + 1}"
    return psi


def product_psi(r, s):
    def psi(eta):
        return eta[:, r] * eta[:, s]
    psi.__name__ = f"xi{r + 1}*xi{s + 1}"
    return psi


def default_psi_family(d, products=False):
    fam = [coordinate_psi(r) for r in range(d)]
    if products:
        fam += [product_psi(r, s) for r in range(d) for s in range(r, d)]
    return fam


@dataclass
class MultiplierSpec:
    """Multiplier ``m(xi) = psi(pi(xi)) / r(xi)`` with ``m(0) = 0``.

    ``r`` is the quasi-norm ``sum |xi_k|^(1/beta_k)``; ``literal_denominator``
    swaps in ``sum |xi_k|^beta_k`` for comparison runs.
    """

    psi: Callable
    frame: AnisotropicFrame
    literal_denominator: bool = False

    def symbol(self, xi):
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        out = np.zeros(xi.shape[0])
        nz = np.any(xi != 0, axis=1)
        if np.any(nz):
            eta = project_to_manifold(self.frame, xi[nz])
            if self.literal_denominator:
                denom = self.frame.literal_denominator(xi[nz])
            else:
                denom = self.frame.quasi_norm(xi[nz])
            out[nz] = np.asarray(self.psi(eta), dtype=float) / denom
        return out


def _multiplier_on_grid(spec: MultiplierSpec, fgrid: FourierGrid):
    xi, nyq = fgrid.frequencies()
    mvals = spec.symbol(xi)
    mvals[nyq] = 0.0  # keeps the discrete transform conjugate-symmetric
    return mvals.reshape((fgrid.resolution,) * fgrid.d)


def multiplier_test_function(spec: MultiplierSpec, mollifier: MollifierSpec, fgrid: FourierGrid) -> GridFunction:
    """``phi = conj(T_m rho)`` sampled on the Fourier grid."""
    grid = fgrid.grid()
    rho = mollifier.tensor(grid.nodes()).reshape(grid.shape)
    mvals = _multiplier_on_grid(spec, fgrid)
    phi = np.conj(np.fft.ifftn(mvals * np.fft.fftn(rho)))
    return GridFunction(grid, phi.ravel())


# ---------------------------------------------------------------------------
# blow-up functional

@dataclass
class BlowupValue:
    principal: np.ndarray   # (n,)
    remainder: np.ndarray   # (n,)


def _pick(phi, j):
    return phi[j] if isinstance(phi, (list, tuple)) else phi


def _term_integrals(terms, pts, wts, z, widths, phi, mollifier):
    """``int <prod rho((z - y)/w + s), a^alpha(y) mu(y)> d^alpha phi(s) ds`` for each term."""
    nodes = phi.nodes()
    vol = phi.grid.cell_volume
    lo, hi = nodes.min(axis=0), nodes.max(axis=0)
    offsets = (z - pts) / widths
    # skip atoms whose rescaled kernel misses the phi grid
    hit = np.all((offsets + hi >= -1) & (offsets + lo <= 1), axis=1)
    out = np.zeros(len(terms), dtype=complex)
    if not np.any(hit):
        return out
    offsets, pts_h, wts_h = offsets[hit], pts[hit], wts[hit]
    derivs = np.stack([np.asarray(phi.derivative(alpha.exponents)) for alpha, _ in terms], axis=1)
    effs = np.stack([sum(c.evaluate_many(pts_h) * wts_h[:, l] for l, c in enumerate(coeffs) if not c.is_zero())
                     * np.ones(len(pts_h)) for _, coeffs in terms], axis=1)             # (A, T)
    axes = phi.grid.axes
    for start in range(0, len(offsets), 256):
        kern = _tensor_kernel(mollifier.profile, offsets[start:start + 256], axes)      # (A, P)
        out += np.einsum("at,at->t", kern @ derivs, effs[start:start + 256])
    return out * vol


def blowup_functional(op: OperatorSystem, pp: PrincipalPart, frames, mu: DiscreteMeasure, z, phi, eps,
                      mollifier: MollifierSpec | None = None) -> BlowupValue:
    """Rescaled, ``eps``-multiplied pairing of equation ``j`` around ``z``, split into principal part and remainder.

    ``phi`` is a test function (``nodes``, ``grid``, ``derivative``) or one per equation.
    """
    mollifier = mollifier or MollifierSpec()
    z = np.asarray(z, dtype=float)
    pts, wts = mu.quadrature_points()
    principal = np.zeros(op.n, dtype=complex)
    remainder = np.zeros(op.n, dtype=complex)
    for j, frame in enumerate(frames):
        beta = frame.weights
        widths = eps ** beta
        terms = list(op.equations[j].items())
        if not len(pts):
            continue
        ints = _term_integrals(terms, pts, wts, z, widths, _pick(phi, j), mollifier)
        lead = pp.equations[j]
        for (alpha, _), val in zip(terms, ints):
            sign = (-1) ** alpha.order
            if alpha in lead:
                principal[j] += sign * val
            else:
                power = 1.0 - float(alpha.weighted_order(frame.beta))
                remainder[j] += sign * eps ** power * val
    return BlowupValue(_maybe_real(principal), _maybe_real(remainder))


def _maybe_real(a):
    a = np.asarray(a)
    if np.iscomplexobj(a) and np.all(a.imag == 0):
        return a.real
    return a


def limit_target(pp: PrincipalPart, z, f, phi, mollifier: MollifierSpec | None = None):
    """``sum_{alpha in I'_j} (-1)^|alpha| sum_l f_l a^alpha_jl(z) int rho(w) d^alpha phi(w) dw`` per equation."""
    mollifier = mollifier or MollifierSpec()
    f = np.asarray(f, dtype=float)
    table = pp.coefficient_table(tuple(float(v) for v in z))
    out = np.zeros(pp.n, dtype=complex)
    for j in range(pp.n):
        ph = _pick(phi, j)
        rho = mollifier.tensor(ph.nodes())
        vol = ph.grid.cell_volume
        for alpha, coefs in zip(pp.equations[j], table[j][2]):
            integral = vol * np.sum(rho * ph.derivative(alpha.exponents))
            out[j] += (-1) ** alpha.order * float(coefs @ f) * integral
    return _maybe_real(out)


def richardson(values):
    """Extrapolate the last three values of a dyadic sequence, componentwise.

    Returns ``(limit, order)``; ``order`` is the smallest estimated convergence
    order, ``inf`` when the tail is constant and ``None`` when no convergence is
    visible (then the last value is returned as the limit).
    """
    v = np.asarray(values)
    if v.shape[0] < 3:
        return v[-1], None
    v1, v2, v3 = v[-3:]
    d1, d2 = v2 - v1, v3 - v2
    limit = np.array(v3, dtype=v.dtype, copy=True)
    orders = []
    for i in np.ndindex(v3.shape):
        scale = max(1.0, abs(v3[i]))
        if abs(d2[i]) <= 1e-14 * scale:
            orders.append(np.inf)
            continue
        ratio = abs(d1[i]) / abs(d2[i])
        if ratio <= 1.0:
            orders.append(None)
            continue
        p = np.log2(ratio)
        orders.append(float(p))
        limit[i] = v3[i] + d2[i] / (2.0 ** p - 1.0)
    if any(o is None for o in orders):
        return limit, None
    return limit, float(min(orders)) if orders else np.inf


def _jsonable(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {"re": a.real.tolist(), "im": a.imag.tolist()}
    return a.tolist()


@dataclass
class BlowupReport:
    z: tuple
    epsilons: list
    values: list          # normalised principal pairing per eps, each (n,)
    remainders: list      # normalised remainder per eps
    extrapolated: np.ndarray
    order: float | None
    target: np.ndarray
    gap: float
    label: str = ""

    def to_dict(self):
        return {"z": list(self.z), "label": self.label, "epsilons": self.epsilons,
                "values": [_jsonable(v) for v in self.values],
                "remainders": [_jsonable(r) for r in self.remainders],
                "extrapolated": _jsonable(self.extrapolated),
                "order": None if self.order is None else (None if np.isinf(self.order) else self.order),
                "target": _jsonable(self.target), "gap": self.gap}

    def csv_rows(self):
        n = len(np.atleast_1d(self.target))
        head = ["epsilon"] + [f"value_re_{j + 1}" for j in range(n)] + [f"value_im_{j + 1}" for j in range(n)] \
            + [f"remainder_{j + 1}" for j in range(n)]
        yield head
        for e, v, r in zip(self.epsilons, self.values, self.remainders):
            v = np.atleast_1d(np.asarray(v, dtype=complex))
            r = np.atleast_1d(np.asarray(r, dtype=complex))
            yield [repr(e)] + [repr(float(x)) for x in v.real] + [repr(float(x)) for x in v.imag] \
                + [repr(float(abs(x))) for x in r]


def normalized_limit(op, pp, frames, mu, z, phi, cert: SingularityCertificate, epsilons=None,
                     mollifier=None, label="") -> BlowupReport:
    """Blow-up values divided by the certificate's ``|mu_s|(E_eps)``, with their extrapolated limit."""
    if not cert.verdict:
        raise CertificateFailed(f"certificate at {cert.point} failed: {cert.reason}", cert)
    z = np.asarray(z, dtype=float)
    if not np.allclose(z, cert.point, rtol=0, atol=1e-12):
        raise ValueError("certificate was issued for a different point")
    epsilons = list(cert.epsilons if epsilons is None else epsilons)
    if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    inner = [cert.inner_mass(e) for e in epsilons]
    _, sing = lebesgue_decompose(mu)
    f = radon_nikodym(sing).at(z)

    def one(e):
        return blowup_functional(op, pp, frames, mu, z, phi, e, mollifier)

    raw = parallel_map(one, epsilons)
    values = [r.principal / m for r, m in zip(raw, inner)]
    rems = [r.remainder / m for r, m in zip(raw, inner)]
    target = limit_target(pp, z, f, phi, mollifier)
    limit, order = richardson(values)
    gap = float(np.max(np.abs(np.asarray(limit) - target))) if np.size(target) else 0.0
    return BlowupReport(tuple(z.tolist()), epsilons, values, rems, limit, order, target, gap, label)


# ---------------------------------------------------------------------------
# Plancherel form

@dataclass
class PlancherelReport:
    space: np.ndarray
    frequency: np.ndarray
    residual: float
    relative: float

    def to_dict(self):
        return {"space": _jsonable(self.space), "frequency": _jsonable(self.frequency),
                "residual": self.residual, "relative": self.relative}


def plancherel_identity_check(pp: PrincipalPart, frames, z, f, psi, mollifier=None, fgrid=None,
                              literal_denominator=False) -> PlancherelReport:
    """Compare the space-side limit pairing with its frequency-side form, per equation.

    Space side: ``sum (-1)^|alpha| f_l a^alpha_jl(z) int rho d^alpha phi`` with ``phi = conj(T_m rho)``.
    Frequency side: ``sum f_l a^alpha_jl(z) sum_xi (2 pi i xi)^alpha m(xi) |rho_hat(xi)|^2 dxi``.
    The ``(-1)^|alpha|`` of the space side cancels against conjugating ``(2 pi i xi)^alpha``.
    ``relative`` divides the gap by the sum of absolute frequency-side terms, so
    pairings that vanish by symmetry are not judged on rounding noise.
    """
    mollifier = mollifier or MollifierSpec()
    fgrid = fgrid or FourierGrid(pp.d)
    f = np.asarray(f, dtype=float)
    table = pp.coefficient_table(tuple(float(v) for v in z))
    grid = fgrid.grid()
    rho = mollifier.tensor(grid.nodes()).reshape(grid.shape)
    rho_hat2 = (np.abs(np.fft.fftn(rho)) * grid.cell_volume) ** 2
    xi, _ = fgrid.frequencies()
    space = np.zeros(pp.n, dtype=complex)
    freq = np.zeros(pp.n, dtype=complex)
    size = np.zeros(pp.n)
    for j, frame in enumerate(frames):
        spec = MultiplierSpec(psi, frame, literal_denominator)
        phi = multiplier_test_function(spec, mollifier, fgrid)
        mvals = _multiplier_on_grid(spec, fgrid).ravel()
        weight = mvals * rho_hat2.ravel()
        space[j] = limit_target(pp, z, f, [phi] * pp.n, mollifier)[j] if pp.n else 0
        for alpha, coefs in zip(pp.equations[j], table[j][2]):
            sym = np.prod((2j * np.pi * xi) ** np.asarray(alpha.exponents), axis=1)
            c = float(coefs @ f)
            freq[j] += c * np.sum(sym * weight) * fgrid.dxi
            size[j] += abs(c) * np.sum(np.abs(sym * weight)) * fgrid.dxi
    gaps = np.abs(space - freq)
    resid = float(np.max(gaps)) if pp.n else 0.0
    rel = float(np.max(np.where(size > 0, gaps / np.where(size > 0, size, 1.0), gaps))) if pp.n else 0.0
    return PlancherelReport(_maybe_real(space), _maybe_real(freq), resid, rel)


# ---------------------------------------------------------------------------
# end-to-end verification

@dataclass
class VerifyConfig:
    p: float = 2.0
    q: float = 0.5
    strategy: str = "ball"
    epsilons: list = field(default_factory=lambda: [2.0 ** -k for k in range(4, 10)])
    samples: int = 64
    seed: int = 0
    resolution: int = 64
    padding: float = 4.0
    afree_resolution: int = 5
    residual_tol: float = 1e-10
    certificate_tol: float = 1e-6
    pointwise_tol: float = 1e-10
    blowup_tol: float = 1e-8
    plancherel_tol: float = 1e-8
    cone_tol: float = 1e-8
    psi_products: bool = False


@dataclass
class VerifyRow:
    z: tuple
    f: list
    clauses: dict
    passed: bool
    certificate: SingularityCertificate
    blowups: list
    plancherel: list

    def to_dict(self):
        return {"z": list(self.z), "f": self.f, "passed": self.passed, "clauses": self.clauses,
                "certificate": self.certificate.to_dict(),
                "blowup": [b.to_dict() for b in self.blowups],
                "plancherel": [p.to_dict() for p in self.plancherel]}


@dataclass
class VerifyTable:
    afree: object
    rows: list

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    def to_dict(self):
        return {"afree": self.afree.to_dict() if self.afree is not None else None,
                "passed": self.passed, "points": [r.to_dict() for r in self.rows]}


def verify_theorem(op: OperatorSystem, mu: DiscreteMeasure, points: Sequence, config: VerifyConfig | None = None):
    """Check every clause of the structure theorem at each point.

    Raises ``NotAFree`` if the measure does not solve the system and
    ``CertificateFailed`` if a point fails the uniform singularity test.
    """
    cfg = config or VerifyConfig()
    points = [tuple(float(v) for v in z) for z in points]
    if not points:
        return VerifyTable(None, [])
    pp = principal_part(op)
    frames = solve_weights(pp).frames()
    afree = check_afree(op, mu, cfg.afree_resolution, cfg.residual_tol)
    if not afree.passed:
        raise NotAFree(f"weak residual {afree.residual:.3e} exceeds {cfg.residual_tol:.1e}", afree)
    certs = []
    for z in points:
        cert = check_uniform_singularity(mu, z, cfg.p, cfg.q, cfg.strategy, cfg.epsilons, cfg.certificate_tol)
        if not cert.verdict:
            raise CertificateFailed(f"uniform singularity fails at {z}: {cert.reason}", cert)
        certs.append(cert)
    _, sing = lebesgue_decompose(mu)
    rn = radon_nikodym(sing)
    mollifier = MollifierSpec()
    fgrid = FourierGrid(op.d, cfg.resolution, cfg.padding)
    family = default_psi_family(op.d, cfg.psi_products)
    phis = {psi.__name__: [multiplier_test_function(MultiplierSpec(psi, fr), mollifier, fgrid) for fr in frames]
            for psi in family}

    def check_point(args):
        z, cert = args
        f = rn.at(z)
        pw = check_theorem_pointwise(pp, frames, z, f, cfg.samples, cfg.pointwise_tol, cfg.seed)
        cone = intersection_cone_exact(pp, z)
        cone_dist = float(np.linalg.norm(f - cone.projector() @ f))
        blowups, planch = [], []
        for psi in family:
            blowups.append(normalized_limit(op, pp, frames, mu, z, phis[psi.__name__], cert,
                                            mollifier=mollifier, label=psi.__name__))
            planch.append(plancherel_identity_check(pp, frames, z, f, psi, mollifier, fgrid))
        gap = max(b.gap for b in blowups)
        target = max(float(np.max(np.abs(b.target))) for b in blowups)
        prel = max(p.relative for p in planch)
        clauses = {
            "pointwise": {"passed": pw.passed, "residual": pw.max_residual},
            "cone_membership": {"passed": cone_dist <= cfg.cone_tol, "distance": cone_dist,
                                "cone_dimension": cone.dimension},
            "blowup_limit": {"passed": gap <= cfg.blowup_tol, "gap": gap},
            "limit_vanishes": {"passed": target <= cfg.blowup_tol, "max_target": target},
            "plancherel": {"passed": prel <= cfg.plancherel_tol, "relative": prel},
        }
        passed = all(c["passed"] for c in clauses.values())
        return VerifyRow(z, f.tolist(), clauses, passed, cert, blowups, planch)

    rows = parallel_map(check_point, list(zip(points, certs)))
    return VerifyTable(afree, rows)
