import numpy as np
import pytest

from spsim.initial import InitialRecipe, build_initial_state
from spsim.mixed_state import (
    MixedState,
    density,
    gram_matrix,
    read_snapshot,
    sobolev_norm,
    weighted_inner,
    write_snapshot,
)
from spsim.spectral import make_grid

from conftest import plane_wave


def _random_state(grid, rng, k=3):
    comps = rng.standard_normal((k, *grid.shape)) + 1j * rng.standard_normal((k, *grid.shape))
    return MixedState(grid, comps, rng.uniform(0.1, 2.0, k))


def test_plane_wave_density_uniform():
    g = make_grid(8, 4.0)
    st = MixedState(g, plane_wave(g, (1, 0, 0)), [1.0])
    np.testing.assert_allclose(density(st), 1 / g.box_length**3, rtol=1e-12)


def test_two_orthogonal_halves_integrate_to_one():
    g = make_grid(8, 4.0)
    st = MixedState(g, np.stack([plane_wave(g, (1, 0, 0)), plane_wave(g, (0, 1, 0))]), [0.5, 0.5])
    assert density(st).sum() * g.cell_volume == pytest.approx(1.0)


def test_density_matches_loop(rng):
    g = make_grid(8, 2.0)
    st = _random_state(g, rng)
    ref = np.zeros(g.shape)
    for lam, psi in zip(st.weights, st.components):
        for idx in np.ndindex(g.shape):
            ref[idx] += lam * abs(psi[idx]) ** 2
    np.testing.assert_allclose(density(st), ref, rtol=1e-13)


def test_weighted_inner(rng):
    g = make_grid(8, 2.0)
    a = _random_state(g, rng)
    b = MixedState(g, _random_state(g, rng).components, a.weights)
    ref = sum(w * np.vdot(x, y) * g.cell_volume for w, x, y in zip(a.weights, a.components, b.components))
    assert weighted_inner(a, b) == pytest.approx(ref)
    self_ = weighted_inner(a, a)
    assert self_.imag == pytest.approx(0) and self_.real > 0
    on = MixedState(g, np.stack([plane_wave(g, (1, 0, 0)), plane_wave(g, (0, 1, 0))]), [1, 1])
    assert weighted_inner(on, on).real == pytest.approx(2.0)


def test_sobolev_norms(rng):
    g = make_grid(16, 2 * np.pi)
    st = _random_state(g, rng, 2)
    assert sobolev_norm(st, 0.0) == pytest.approx(np.sqrt(weighted_inner(st, st).real))
    pw = MixedState(g, plane_wave(g, (3, 0, 4)), [1.0])
    assert sobolev_norm(pw, 0.5, homogeneous=True) == pytest.approx(np.sqrt(5.0))


def test_sobolev_matches_symbol_sum():
    g = make_grid(32, 16.0)
    st = build_initial_state(g, InitialRecipe(widths=[1.0]))
    c = np.fft.fftn(st.components[0]) * g.cell_volume
    ref = np.sqrt(np.sum((1 + g.k_squared) ** 0.5 * abs(c) ** 2) / g.box_length**3)
    assert sobolev_norm(st, 0.5) == pytest.approx(ref, rel=1e-10)


def test_gram_identity_and_duplicate():
    g = make_grid(16, 8.0)
    st = build_initial_state(g, InitialRecipe(widths=[1.0, 1.3, 0.8], weights=[1, 1, 1]))
    assert np.abs(gram_matrix(st) - np.eye(3)).max() < 1e-10
    dup = MixedState(g, np.stack([st.components[0], st.components[0]]), [1, 1])
    np.testing.assert_allclose(gram_matrix(dup), np.ones((2, 2)), atol=1e-12)


def test_weighted_inner_rejects_mismatched_weights(rng):
    g = make_grid(8, 2.0)
    with pytest.raises(ValueError):
        weighted_inner(_random_state(g, rng), _random_state(g, rng))


@pytest.mark.parametrize("weights", [[0.0], [-1.0], [1.0, 2.0]])
def test_rejects_bad_weights(weights):
    g = make_grid(8, 1.0)
    with pytest.raises(ValueError):
        MixedState(g, np.ones((1, *g.shape)), weights)


def test_snapshot_round_trip(tmp_path, rng):
    g = make_grid(8, 3.5)
    st = _random_state(g, rng)
    write_snapshot(tmp_path / "s.sps", st)
    assert (tmp_path / "s.sps").read_bytes()[:4] == b"SPS1"
    back = read_snapshot(tmp_path / "s.sps")
    assert back.grid.n == 8 and back.grid.box_length == 3.5
    np.testing.assert_array_equal(back.components, st.components)
    np.testing.assert_array_equal(back.weights, st.weights)


def test_snapshot_bad_magic(tmp_path):
    p = tmp_path / "bad.sps"
    p.write_bytes(b"NOPE" + bytes(64))
    with pytest.raises(ValueError):
        read_snapshot(p)
