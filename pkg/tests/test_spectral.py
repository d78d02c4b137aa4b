import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spsim.spectral import (
    Multiplier,
    apply_multiplier,
    apply_real_multiplier,
    forward_transform,
    frac_laplacian_symbol,
    inverse_transform,
    kinetic_symbol,
    l2_norm_sq,
    make_grid,
)

from conftest import plane_wave


def _index_of(grid, k_int):
    return tuple(int(v) % grid.n for v in k_int)


def test_grid_unit_frequency_step():
    g = make_grid(8, 2 * np.pi)
    assert sorted(np.round(g.freq_axes[0]).astype(int)) == list(range(-4, 4))


def test_grid_spacing_and_frequency_step():
    g = make_grid(16, 32.0)
    assert g.spacing == 2.0
    assert g.dk == pytest.approx(np.pi / 16)
    assert g.spacing * g.n == g.box_length


@pytest.mark.parametrize("n", [7, 6, 0, -8, 9])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        make_grid(n, 1.0)


def test_grid_rejects_non_positive_box():
    with pytest.raises(ValueError):
        make_grid(8, 0.0)


def test_each_frequency_once():
    g = make_grid(16, 5.0)
    ints = np.round(g.freq_axes[0] / g.dk).astype(int)
    assert len(set(ints)) == 16


def test_constant_field_transform():
    g = make_grid(8, 3.0)
    c = forward_transform(np.ones(g.shape))
    assert c[0, 0, 0] == pytest.approx(g.n**3)
    c[0, 0, 0] = 0
    assert np.abs(c).max() < 1e-10


def test_plane_wave_single_coefficient():
    g = make_grid(8, 3.0)
    c = forward_transform(plane_wave(g, (1, -2, 3)))
    idx = _index_of(g, (1, -2, 3))
    assert abs(c[idx]) > 1
    c[idx] = 0
    assert np.abs(c).max() < 1e-10


def test_transform_matches_direct_dft(rng):
    g = make_grid(8, 1.0)
    f = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    j = np.arange(8)
    w = np.exp(-2j * np.pi * np.outer(j, j) / 8)
    direct = np.einsum("ai,bj,ck,ijk->abc", w, w, w, f)
    np.testing.assert_allclose(forward_transform(f), direct, atol=1e-11)
    np.testing.assert_allclose(inverse_transform(forward_transform(f)), f, atol=1e-12)


def test_kinetic_symbol_values():
    g = make_grid(8, 2 * np.pi)
    assert kinetic_symbol(g, 2.0).symbol[0, 0, 0] == 2.0
    assert kinetic_symbol(g, 0.0).symbol[3, 0, 0] == pytest.approx(3.0)
    assert kinetic_symbol(g, 1.0).symbol[1, 2, 2] == pytest.approx(np.sqrt(10.0))
    with pytest.raises(ValueError):
        kinetic_symbol(g, -1.0)


def test_frac_laplacian_values():
    g = make_grid(16, 2 * np.pi)
    assert frac_laplacian_symbol(g, 0.5).symbol[4, 0, 0] == pytest.approx(4.0)
    assert frac_laplacian_symbol(g, 1.0).symbol[1, 1, 1] == pytest.approx(3.0)
    ones = frac_laplacian_symbol(g, 0.0).symbol
    assert np.all(ones == 1.0)


def test_multiplier_rejects_non_finite():
    g = make_grid(8, 1.0)
    sym = np.ones(g.shape)
    sym[0, 0, 0] = np.inf
    with pytest.raises(ValueError):
        Multiplier(g, sym)


def test_kinetic_eigenfunction():
    g = make_grid(16, 2 * np.pi)
    f = plane_wave(g, (2, 0, 0))
    out = apply_multiplier(f, kinetic_symbol(g, 1.0))
    np.testing.assert_allclose(out, np.sqrt(5) * f, atol=1e-12)


def test_zero_and_identity(rng):
    g = make_grid(8, 1.0)
    assert np.all(apply_multiplier(np.zeros(g.shape, complex), kinetic_symbol(g, 1.0)) == 0)
    f = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    np.testing.assert_allclose(apply_multiplier(f, Multiplier(g, np.ones(g.shape))), f, atol=1e-12)


def test_real_path_matches_complex_path(rng):
    g = make_grid(16, 4.0)
    f = rng.standard_normal(g.shape)
    m = kinetic_symbol(g, 0.3)
    np.testing.assert_allclose(apply_real_multiplier(f, m), apply_multiplier(f, m).real, atol=1e-12)


def test_shape_mismatch():
    g = make_grid(8, 1.0)
    with pytest.raises(ValueError):
        apply_multiplier(np.zeros((4, 4, 4)), kinetic_symbol(g, 1.0))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 5.0), st.integers(0, 2**31 - 1))
def test_unitary_phase_preserves_norm(tau, seed):
    g = make_grid(8, 3.0)
    r = np.random.default_rng(seed)
    f = r.standard_normal(g.shape) + 1j * r.standard_normal(g.shape)
    u = Multiplier(g, np.exp(-1j * tau * kinetic_symbol(g, 1.0).symbol))
    assert l2_norm_sq(g, apply_multiplier(f, u)) == pytest.approx(l2_norm_sq(g, f), rel=1e-12)


def test_composition_is_product():
    g = make_grid(8, 1.0)
    a, b = kinetic_symbol(g, 1.0), frac_laplacian_symbol(g, 0.5)
    np.testing.assert_allclose((a * b).symbol, a.symbol * b.symbol)
