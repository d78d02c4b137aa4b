import numpy as np
import pytest

from spsim.initial import InitialRecipe, build_initial_state, radial_taper
from spsim.mixed_state import gram_matrix, write_snapshot
from spsim.spectral import make_grid


def test_gaussian_stack_is_orthonormal_and_radial():
    g = make_grid(32, 16.0)
    st = build_initial_state(g, InitialRecipe(widths=[0.8, 1.0, 1.4], weights=[1, 2, 3]))
    assert np.abs(gram_matrix(st) - np.eye(3)).max() <= 1e-10
    # radial symmetry: invariant under axis permutation and reflection
    for psi in st.components:
        np.testing.assert_allclose(psi, np.transpose(psi, (1, 2, 0)), atol=1e-12)
        np.testing.assert_allclose(psi[1:, 1:, 1:], psi[1:, 1:, 1:][::-1, :, :], atol=1e-12)


def test_amplitude_scales_weights():
    g = make_grid(16, 8.0)
    a = build_initial_state(g, InitialRecipe(widths=[1.0], weights=[2.0]))
    b = build_initial_state(g, InitialRecipe(widths=[1.0], weights=[2.0], amplitude=3.0))
    assert b.weights[0] == pytest.approx(9 * a.weights[0])
    np.testing.assert_array_equal(a.components, b.components)


def test_taper_profile():
    g = make_grid(32, 16.0)
    t = radial_taper(g)
    assert np.all(t[g.r <= 4.0] == 1.0)
    assert np.all(t[g.r >= 6.0] == 0.0)
    assert np.all((t >= 0) & (t <= 1))


def test_plane_wave_stack():
    g = make_grid(16, 8.0)
    st = build_initial_state(g, InitialRecipe(kind="plane_wave_stack", wavevectors=[[1, 0, 0], [0, 2, 0]],
                                              weights=[1.0, 1.0]))
    np.testing.assert_allclose(st.masses(), 1.0)
    assert np.abs(gram_matrix(st) - np.eye(2)).max() <= 1e-12


def test_snapshot_recipe(tmp_path):
    g = make_grid(16, 8.0)
    st = build_initial_state(g, InitialRecipe(widths=[1.0]))
    write_snapshot(tmp_path / "a.sps", st)
    back = build_initial_state(g, InitialRecipe(kind="snapshot", path=str(tmp_path / "a.sps")))
    np.testing.assert_array_equal(back.components, st.components)
    with pytest.raises(ValueError):
        build_initial_state(make_grid(8, 8.0), InitialRecipe(kind="snapshot", path=str(tmp_path / "a.sps")))


@pytest.mark.parametrize("kw", [dict(weights=[0.0]), dict(widths=[1.0, 2.0], weights=[1.0]),
                                dict(kind="cube"), dict(amplitude=0.0), dict(widths=[-1.0]),
                                dict(kind="snapshot"), dict(kind="plane_wave_stack", weights=[1.0])])
def test_recipe_validation(kw):
    with pytest.raises(ValueError):
        InitialRecipe(**kw)
