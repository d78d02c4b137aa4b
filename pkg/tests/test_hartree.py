import numpy as np
import pytest
from scipy.special import erf

from spsim.hartree import KernelMode, coulomb_symbol, newton_radial_potential, solve_potential
from spsim.spectral import make_grid


def _gaussian_density(grid, sigma=1.0, center=(0.0, 0.0, 0.0)):
    x, y, z = grid.coords
    r2 = (x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2
    return np.exp(-r2 / (2 * sigma**2)) / (2 * np.pi * sigma**2) ** 1.5


def test_periodic_symbol_value():
    g = make_grid(8, 2 * np.pi)
    assert coulomb_symbol(g, KernelMode.periodic()).symbol[2, 0, 0] == pytest.approx(-np.pi)
    assert coulomb_symbol(g, KernelMode.periodic()).symbol[0, 0, 0] == 0.0


def test_truncated_zero_mode_is_small_k_limit():
    g = make_grid(16, 10.0)
    R = 5.0
    sym = coulomb_symbol(g, KernelMode.truncated(R)).symbol
    assert sym[0, 0, 0] == pytest.approx(-2 * np.pi * R**2)
    k = 1e-4
    assert -8 * np.pi * np.sin(R * k / 2) ** 2 / k**2 == pytest.approx(sym[0, 0, 0], rel=1e-6)


def test_truncated_at_half_period():
    # R |k| = pi  ->  cos = -1
    g = make_grid(16, 2 * np.pi)
    R = np.pi / 2
    sym = coulomb_symbol(g, KernelMode.truncated(R)).symbol
    assert sym[2, 0, 0] == pytest.approx(-8 * np.pi / 4)


def test_truncation_radius_validation():
    g = make_grid(8, 2.0)
    with pytest.raises(ValueError):
        coulomb_symbol(g, KernelMode.truncated(10.0))
    with pytest.raises(ValueError):
        KernelMode.truncated(-1.0)
    with pytest.raises(ValueError):
        KernelMode("spherical")


def test_periodic_constant_density_gauged_away():
    g = make_grid(16, 5.0)
    v = solve_potential(np.full(g.shape, 3.0), KernelMode.periodic(), g)
    assert np.abs(v).max() < 1e-12


def test_gaussian_against_error_function():
    g = make_grid(64, 32.0)
    v = solve_potential(_gaussian_density(g), KernelMode.truncated(), g)
    inside = (g.r < 8) & (g.r > 0)
    exact = -erf(g.r[inside] / np.sqrt(2)) / g.r[inside]
    assert np.max(np.abs(v[inside] - exact)) / np.max(np.abs(exact)) <= 1e-3


def test_two_separated_bumps_far_field():
    g = make_grid(64, 32.0)
    c1, c2 = (-3.0, 0.0, 0.0), (3.0, 0.0, 0.0)
    n = _gaussian_density(g, 0.7, c1) + _gaussian_density(g, 0.7, c2)
    v = solve_potential(n, KernelMode.truncated(), g)
    x, y, z = g.coords
    x, y, z = np.broadcast_arrays(x, y, z)
    d1 = np.sqrt((x - c1[0]) ** 2 + y**2 + z**2)
    d2 = np.sqrt((x - c2[0]) ** 2 + y**2 + z**2)
    far = (np.minimum(d1, d2) > 6) & (g.r < 8)
    expected = -(1 / d1[far] + 1 / d2[far])
    assert np.max(np.abs(v[far] - expected) / np.abs(expected)) <= 0.01


def test_linearity(rng):
    g = make_grid(16, 8.0)
    n1, n2 = rng.random(g.shape), rng.random(g.shape)
    for mode in (KernelMode.periodic(), KernelMode.truncated()):
        lhs = solve_potential(2.5 * n1 - 0.7 * n2, mode, g)
        rhs = 2.5 * solve_potential(n1, mode, g) - 0.7 * solve_potential(n2, mode, g)
        assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()


def test_complex_input_path():
    g = make_grid(16, 8.0)
    n = _gaussian_density(g)
    mode = KernelMode.truncated()
    np.testing.assert_allclose(solve_potential(n.astype(complex), mode, g).real,
                               solve_potential(n, mode, g), atol=1e-13)


def test_solve_needs_grid_or_symbol():
    with pytest.raises(ValueError):
        solve_potential(np.zeros((8, 8, 8)), KernelMode.periodic())


def test_newton_point_like():
    r = np.linspace(0, 0.05, 2001)
    rho = np.full_like(r, 1.0 / (4 / 3 * np.pi * 0.05**3))
    ev = np.array([1.0, 2.0, 5.0])
    np.testing.assert_allclose(newton_radial_potential(r, rho, ev), -1 / ev, rtol=1e-5)


def test_newton_gaussian_error_function():
    r = np.linspace(0, 12, 40001)
    rho = np.exp(-r * r / 2) / (2 * np.pi) ** 1.5
    ev = np.linspace(0.01, 8, 50)
    v, dv, mass = newton_radial_potential(r, rho, ev, return_gradient=True)
    np.testing.assert_allclose(v, -erf(ev / np.sqrt(2)) / ev, rtol=1e-6)
    np.testing.assert_allclose(dv, mass / ev**2)


def test_newton_zero_density():
    r = np.linspace(0, 1, 11)
    assert np.all(newton_radial_potential(r, np.zeros(11), r) == 0)


def test_newton_rejects_bad_nodes():
    with pytest.raises(ValueError):
        newton_radial_potential([0, 2, 1], [1, 1, 1], [0.5])
    with pytest.raises(ValueError):
        newton_radial_potential([0, 1], [1, 1, 1], [0.5])
