from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from afree.blowup import (BumpTestFunction, FourierGrid, Grid, GridFunction, MollifierSpec, MultiplierSpec,
                          VerifyConfig, blowup_functional, coordinate_psi, limit_target, mollify,
                          multiplier_test_function, normalized_limit, plancherel_identity_check, richardson,
                          verify_theorem)
from afree.dsl import parse_operator
from afree.errors import CertificateFailed, NotAFree
from afree.measures import DiscreteMeasure, atom_chain, check_uniform_singularity
from afree.symbols import AnisotropicFrame, principal_part, solve_weights

MOL = MollifierSpec()
DELTA = DiscreteMeasure.atoms([[0.0, 0.0]], [[1.0]])
DIPOLE = DiscreteMeasure.atoms([[0.0, 0.0]], [[1.0, -1.0]])


# independent closed forms of the standard bump
def _b(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def _db(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti ** 2)) * (-2 * ti / (1 - ti ** 2) ** 2)
    return out


MASS = quad(lambda t: float(_b(t)), -1, 1, epsabs=0, epsrel=1e-13)[0]


def _rho(t):
    return float(_b(t)) / MASS


def _setup(source):
    op = parse_operator(source)
    pp = principal_part(op)
    return op, pp, solve_weights(pp).frames()


def test_mollifier_mass_and_support():
    grid = Grid.midpoint((-1, -1), (1, 1), 256)
    vals = MOL.tensor(grid.nodes())
    assert abs(vals.sum() * grid.cell_volume - 1.0) < 1e-10
    outside = Grid.midpoint((1.0, -3.0), (3.0, 3.0), 32)
    assert np.all(MOL.tensor(outside.nodes()) == 0)


@pytest.mark.parametrize("beta", [(1, 1), (1, Fraction(1, 2)), (Fraction(1, 3), Fraction(1, 2))])
def test_scaled_mollifier_mass(beta):
    eps = 0.25
    widths = [eps ** float(b) for b in beta]
    grid = Grid.midpoint([-w for w in widths], widths, 256)
    vals = MOL.scaled(grid.nodes(), eps, beta)
    assert abs(vals.sum() * grid.cell_volume - 1.0) < 1e-10


def test_mollify_point_mass_is_kernel():
    frame = AnisotropicFrame((1, Fraction(1, 2)))
    grid = Grid.midpoint((-1, -1), (1, 1), 32)
    y = np.array([0.1, -0.2])
    mu = DiscreteMeasure.atoms([y], [[2.0]])
    out = mollify(mu, MOL, 0.5, frame, grid)
    expected = 2.0 * MOL.scaled(grid.nodes() - y, 0.5, frame.beta)
    np.testing.assert_allclose(out.reshape(-1), expected, rtol=1e-12, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(0.1, 1.0))
def test_mollify_is_linear(seed, eps):
    rng = np.random.default_rng(seed)
    frame = AnisotropicFrame((1, Fraction(1, 2)))
    grid = Grid.midpoint((-1, -1), (1, 1), 16)
    a = DiscreteMeasure.atoms(rng.uniform(-1, 1, (3, 2)), rng.standard_normal((3, 2)))
    b = DiscreteMeasure.atoms(rng.uniform(-1, 1, (2, 2)) + 5, rng.standard_normal((2, 2)))
    both = DiscreteMeasure.atoms(np.vstack([a.locations, b.locations]), np.vstack([a.weights, b.weights]))
    np.testing.assert_allclose(mollify(both, MOL, eps, frame, grid),
                               mollify(a, MOL, eps, frame, grid) + mollify(b, MOL, eps, frame, grid),
                               rtol=1e-10, atol=1e-12)


def _transport_oracle(center, scale):
    # -int rho(w) d1 phi(w) dw for phi(w) = b((w1 - c1)/s) b((w2 - c2)/s)
    c1, c2 = center
    i1 = quad(lambda t: _rho(t) * float(_db((t - c1) / scale)) / scale, -1, 1, epsabs=0, epsrel=1e-12)[0]
    i2 = quad(lambda t: _rho(t) * float(_b((t - c2) / scale)), -1, 1, epsabs=0, epsrel=1e-12)[0]
    return -i1 * i2


@pytest.mark.parametrize("eps", [2.0 ** -4, 2.0 ** -7])
def test_blowup_transport_matches_quadrature(transport_op, eps):
    op, pp, frames = _setup("D[1,0] u1 = 0")
    center, scale = (0.3, -0.1), 0.9
    phi = BumpTestFunction(center, scale, resolution=256)
    val = blowup_functional(op, pp, frames, DELTA, (0.0, 0.0), phi, eps)
    assert val.principal[0] == pytest.approx(_transport_oracle(center, scale), rel=1e-9)
    assert val.remainder[0] == 0
    assert limit_target(pp, (0, 0), [1.0], phi)[0] == pytest.approx(val.principal[0], rel=1e-12)


def test_principal_part_is_epsilon_independent():
    op, pp, frames = _setup("D[1,0] u1 + D[0,1] u1 + D[0,2] u1 = 0")
    phi = BumpTestFunction((0.2, 0.1), 1.0, resolution=96)
    vals = [blowup_functional(op, pp, frames, DELTA, (0.0, 0.0), phi, 2.0 ** -k) for k in range(3, 9)]
    ref = vals[0].principal[0]
    for v in vals:
        assert v.principal[0] == pytest.approx(ref, rel=1e-12)
    # the dominated D[0,1] term scales like eps^(1 - 1/2)
    rems = np.abs([v.remainder[0] for v in vals])
    slopes = np.diff(np.log2(rems))
    np.testing.assert_allclose(slopes, -0.5, atol=1e-12)


def test_remainder_slope_zero_order_term():
    op, pp, frames = _setup("D[1,0] u1 + D[0,1] u1 + 3*D[0,0] u1 = 0")
    phi = BumpTestFunction((0.0, 0.0), 1.0, resolution=64)
    eps = [2.0 ** -k for k in range(4, 11)]
    rems = [abs(blowup_functional(op, pp, frames, DELTA, (0.0, 0.0), phi, e).remainder[0]) for e in eps]
    slope = np.polyfit(np.log(eps), np.log(rems), 1)[0]
    assert slope == pytest.approx(1.0, abs=1e-9)


def test_blowup_far_from_support_vanishes():
    op, pp, frames = _setup("D[1,0] u1 = 0")
    phi = BumpTestFunction((0.0, 0.0), 1.0, resolution=32)
    val = blowup_functional(op, pp, frames, DELTA, (5.0, 5.0), phi, 2.0 ** -4)
    assert val.principal[0] == 0


def test_richardson():
    vals = [3.0 + 2.0 ** -k for k in range(4, 8)]
    limit, order = richardson(vals)
    assert limit == pytest.approx(3.0, abs=1e-13) and order == pytest.approx(1.0)
    limit, order = richardson([2.0, 2.0, 2.0])
    assert limit == 2.0 and order == np.inf
    _, order = richardson([1.0, 2.0, 4.0])
    assert order is None


def test_normalized_limit_single_atom():
    op, pp, frames = _setup("D[1,0] u1 = 0")
    mu = DiscreteMeasure.atoms([[0.0, 0.0]], [[2.5]])
    cert = check_uniform_singularity(mu, (0.0, 0.0), epsilons=[2.0 ** -k for k in range(4, 8)])
    phi = BumpTestFunction((0.3, -0.1), 0.9, resolution=256)
    rep = normalized_limit(op, pp, frames, mu, (0.0, 0.0), phi, cert)
    for v in rep.values:
        assert v[0] == pytest.approx(_transport_oracle((0.3, -0.1), 0.9), rel=1e-9)
    assert rep.gap < 1e-8
    assert rep.to_dict()["epsilons"] == cert.epsilons


def test_normalized_limit_dipole_vanishes():
    op, pp, frames = _setup("D[1,0] u1 + D[1,0] u2 = 0")
    cert = check_uniform_singularity(DIPOLE, (0.0, 0.0), epsilons=[2.0 ** -k for k in range(4, 8)])
    phi = BumpTestFunction((0.0, 0.0), 1.0, resolution=64)
    rep = normalized_limit(op, pp, frames, DIPOLE, (0.0, 0.0), phi, cert)
    assert np.max(np.abs(rep.values)) < 1e-14 and rep.gap < 1e-14


def test_normalized_limit_requires_certificate():
    op, pp, frames = _setup("components 1; D[1,0] u1 = 0")
    line = atom_chain(2, 1, (0.0, -1.0), (0.0, 1.0), 2.0 ** -8)
    cert = check_uniform_singularity(line, (0.0, 0.0))
    assert not cert.verdict
    with pytest.raises(CertificateFailed):
        normalized_limit(op, pp, frames, line, (0.0, 0.0), BumpTestFunction((0, 0)), cert)


def test_fourier_grid_validation():
    with pytest.raises(ValueError):
        FourierGrid(2, resolution=60)
    with pytest.raises(ValueError):
        FourierGrid(2, resolution=64, padding=2)


def test_spectral_derivative():
    fg = FourierGrid(1, resolution=64, padding=4)
    grid = fg.grid()
    x = grid.nodes()[:, 0]
    g = GridFunction(grid, np.sin(2 * np.pi * x / 8))
    np.testing.assert_allclose(g.derivative((1,)).real, 2 * np.pi / 8 * np.cos(2 * np.pi * x / 8), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=2).filter(lambda v: max(map(abs, v)) > 1e-2),
       st.floats(0.1, 10))
def test_multiplier_is_minus_one_homogeneous(xi, lam):
    frame = AnisotropicFrame((1, Fraction(1, 2)))
    spec = MultiplierSpec(coordinate_psi(0), frame)
    xi = np.array(xi)
    assert spec.symbol(frame.dilate(xi, lam))[0] == pytest.approx(spec.symbol(xi)[0] / lam, rel=1e-9, abs=1e-14)


def test_multiplier_zero_at_origin_and_zero_psi():
    frame = AnisotropicFrame((1, 1))
    assert MultiplierSpec(coordinate_psi(0), frame).symbol([0.0, 0.0])[0] == 0
    zero = MultiplierSpec(lambda eta: 0 * eta[:, 0], frame)
    phi = multiplier_test_function(zero, MOL, FourierGrid(2, 32))
    assert np.all(phi.values == 0)


def test_multiplier_of_odd_psi_is_imaginary():
    # rho is real and even, m is real and odd, so T_m rho is purely imaginary
    frame = AnisotropicFrame((1, Fraction(1, 2)))
    phi = multiplier_test_function(MultiplierSpec(coordinate_psi(0), frame), MOL, FourierGrid(2, 64))
    assert np.max(np.abs(phi.values.real)) < 1e-14 * np.max(np.abs(phi.values.imag))


@pytest.mark.parametrize("source, f", [
    ("D[1,0] u1 = 0", [1.0]),
    ("D[1,0] u1 + D[0,1] u1 + D[0,2] u1 = 0", [1.0]),
    ("D[1,0] u1 + D[0,1] u2 = 0", [0.6, 0.8]),
])
@pytest.mark.parametrize("literal", [False, True])
def test_plancherel_identity(source, f, literal):
    _, pp, frames = _setup(source)
    for r in range(pp.d):
        rep = plancherel_identity_check(pp, frames, (0.0, 0.0), f, coordinate_psi(r), MOL,
                                        FourierGrid(2, 64), literal)
        assert rep.relative < 1e-8


def test_plancherel_extra_sign_would_break_odd_terms():
    # keeping (-1)^|alpha| on the frequency side flips the sign of first-order terms
    _, pp, frames = _setup("D[1,0] u1 = 0")
    rep = plancherel_identity_check(pp, frames, (0.0, 0.0), [1.0], coordinate_psi(0), MOL, FourierGrid(2, 64))
    assert abs(rep.space[0]) > 0.1
    assert abs(rep.space[0] - (-rep.frequency[0])) > abs(rep.space[0])


def test_verify_dipole_passes():
    op = parse_operator("D[1,0] u1 + D[1,0] u2 = 0")
    table = verify_theorem(op, DIPOLE, [(0.0, 0.0)])
    assert table.passed
    row = table.rows[0]
    assert set(row.clauses) == {"pointwise", "cone_membership", "blowup_limit", "limit_vanishes", "plancherel"}
    np.testing.assert_allclose(row.f, [1 / np.sqrt(2), -1 / np.sqrt(2)])


def test_verify_rejects_non_afree():
    op = parse_operator("D[1,0] u1 = 0")
    with pytest.raises(NotAFree):
        verify_theorem(op, DELTA, [(0.0, 0.0)])


def test_verify_rejects_non_uniform_singular_point():
    op = parse_operator("components 2; D[1,0] u2 + D[0,1] u2 = 0")
    line = atom_chain(2, 2, (0.0, -1.0), (0.0, 1.0), 2.0 ** -8)
    with pytest.raises(CertificateFailed):
        verify_theorem(op, line, [(0.0, 0.0)], VerifyConfig(residual_tol=10.0))


def test_verify_empty_points():
    table = verify_theorem(parse_operator("D[1,0] u1 = 0"), DELTA, [])
    assert table.passed and table.rows == []


def test_mollified_point_mass_has_unit_mass():
    frame = AnisotropicFrame((1, Fraction(1, 2)))
    eps = 0.25
    grid = Grid.midpoint((-0.25, -0.5), (0.25, 0.5), 256)
    out = mollify(DELTA, MOL, eps, frame, grid)
    assert abs(out.sum() * grid.cell_volume - 1.0) < 1e-8


def test_zero_measure_gives_zero_functional():
    op, pp, frames = _setup("D[1,0] u1 + D[0,1] u1 + D[0,2] u1 = 0")
    zero = DiscreteMeasure(2, 1)
    val = blowup_functional(op, pp, frames, zero, (0.0, 0.0), BumpTestFunction((0, 0), 1.0, 32), 0.1)
    assert val.principal[0] == 0 and val.remainder[0] == 0


def test_single_component_atom_target():
    # (delta_0, 0) under d1(u1 + u2): f = (1, 0) and the target is -int rho d1 phi
    op, pp, frames = _setup("D[1,0] u1 + D[1,0] u2 = 0")
    mu = DiscreteMeasure.atoms([[0.0, 0.0]], [[1.0, 0.0]])
    cert = check_uniform_singularity(mu, (0.0, 0.0), epsilons=[2.0 ** -k for k in range(4, 8)])
    phi = BumpTestFunction((0.3, -0.1), 0.9, resolution=256)
    rep = normalized_limit(op, pp, frames, mu, (0.0, 0.0), phi, cert)
    assert rep.target[0] == pytest.approx(_transport_oracle((0.3, -0.1), 0.9), rel=1e-9)
    assert rep.gap < 1e-8


def test_discrete_parseval_for_multiplier():
    frame = AnisotropicFrame((1, Fraction(1, 2)))
    fg = FourierGrid(2, 64)
    spec = MultiplierSpec(coordinate_psi(0), frame)
    grid = fg.grid()
    rho = MOL.tensor(grid.nodes())
    t_rho = np.conj(multiplier_test_function(spec, MOL, fg).values)
    space = np.sum(t_rho * rho) * grid.cell_volume
    xi, nyq = fg.frequencies()
    m = spec.symbol(xi)
    m[nyq] = 0
    rho_hat = np.fft.fftn(rho.reshape(grid.shape)).ravel() * grid.cell_volume
    freq = np.sum(m * np.abs(rho_hat) ** 2) * fg.dxi
    assert abs(space - freq) <= 1e-10 * np.sum(np.abs(m) * np.abs(rho_hat) ** 2) * fg.dxi


def test_even_psi_gives_real_test_function():
    from afree.blowup import product_psi
    frame = AnisotropicFrame((1, Fraction(1, 2)))
    phi = multiplier_test_function(MultiplierSpec(product_psi(0, 0), frame), MOL, FourierGrid(2, 64))
    assert np.max(np.abs(phi.values.imag)) < 1e-12 * max(1.0, np.max(np.abs(phi.values.real)))


def test_plancherel_vanishes_on_cone():
    _, pp, frames = _setup("D[1,0] u1 + D[1,0] u2 = 0")
    f = np.array([1.0, -1.0]) / np.sqrt(2)
    for r in range(2):
        rep = plancherel_identity_check(pp, frames, (0.0, 0.0), f, coordinate_psi(r), MOL, FourierGrid(2, 64))
        assert np.max(np.abs(rep.space)) < 1e-8 and np.max(np.abs(rep.frequency)) < 1e-8
