import numpy as np
import pytest

from spsim.diagnostics import energy
from spsim.evolution import (
    EvolutionParams,
    convergence_study,
    evolve,
    linear_half_step_symbol,
    step_lie,
    step_strang,
)
from spsim.hartree import KernelMode
from spsim.initial import InitialRecipe, build_initial_state
from spsim.mixed_state import MixedState, gram_matrix
from spsim.spectral import make_grid

from conftest import plane_wave


@pytest.fixture(scope="module")
def small_state():
    g = make_grid(32, 16.0)
    return build_initial_state(g, InitialRecipe(widths=[1.0, 1.5], weights=[1.0, 0.5]))


def test_half_step_symbol_unitary_without_dissipation():
    g = make_grid(16, 8.0)
    sym = linear_half_step_symbol(g, EvolutionParams(m=1.0, dt=0.3, t_end=1.0)).symbol
    np.testing.assert_allclose(np.abs(sym), 1.0, atol=1e-15)
    assert linear_half_step_symbol(g, EvolutionParams(m=0.0, dt=0.3, t_end=1.0)).symbol[0, 0, 0] == 1.0


def test_half_step_symbol_damping():
    g = make_grid(16, 2 * np.pi)
    p = EvolutionParams(epsilon=1.0, alpha=0.5, dt=0.2, t_end=1.0)
    assert abs(linear_half_step_symbol(g, p).symbol[1, 0, 0]) == pytest.approx(np.exp(-0.1))


@pytest.mark.parametrize("kw", [dict(alpha=0.4), dict(epsilon=-0.1), dict(dt=2.0, t_end=1.0),
                                dict(m=-1.0), dict(splitting="yoshida"), dict(dt=0.0)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        EvolutionParams(**kw)


def test_zero_state_stays_zero():
    g = make_grid(16, 8.0)
    z = MixedState(g, np.zeros((1, *g.shape)), [1.0])
    assert np.all(step_strang(z, EvolutionParams()).components == 0)


def test_plane_wave_modulus_preserved():
    g = make_grid(16, 8.0)
    pw = MixedState(g, plane_wave(g, (1, 0, -1)), [3.0])
    out = step_strang(pw, EvolutionParams(dt=0.1), )
    np.testing.assert_allclose(np.abs(out.components), np.abs(pw.components), rtol=1e-12)


def test_single_step_mass(small_state):
    st = MixedState(small_state.grid, small_state.components[:1], [4.0])
    out = step_strang(st, EvolutionParams(dt=0.01))
    assert abs(out.total_mass() / st.total_mass() - 1) <= 1e-13


def test_fused_loop_matches_plain_steps(small_state):
    p = EvolutionParams(m=1.0, epsilon=0.05, dt=0.02, t_end=0.2)
    tr = evolve(small_state, p, record_stride=4, thresholds=None)
    st = small_state
    for _ in range(p.n_steps):
        st = step_strang(st, p)
    np.testing.assert_allclose(tr.final_state.components, st.components, atol=1e-12)

    pl = EvolutionParams(m=1.0, epsilon=0.05, dt=0.02, t_end=0.2, splitting="lie")
    tr = evolve(small_state, pl, record_stride=3, thresholds=None)
    st = small_state
    for _ in range(pl.n_steps):
        st = step_lie(st, pl)
    np.testing.assert_allclose(tr.final_state.components, st.components, atol=1e-12)


def test_step_masses_match_records(small_state):
    p = EvolutionParams(epsilon=0.1, dt=0.02, t_end=0.2)
    tr = evolve(small_state, p, record_stride=5, thresholds=None)
    for rec in tr.records:
        np.testing.assert_allclose(tr.step_masses[rec.step], rec.masses, rtol=1e-12)
        assert tr.step_ledger[rec.step] == pytest.approx(rec.ledger, rel=1e-12)
    assert tr.steps == p.n_steps and tr.final_time == pytest.approx(p.t_end)
    assert np.allclose(tr.times, [0, 0.1, 0.2])


def test_conservative_run_short_horizon(small_state):
    km = KernelMode.truncated()
    e0 = energy(small_state, 1.0, km)[0]
    assert e0 > 0
    p = EvolutionParams(dt=0.02, t_end=0.4, kernel_mode=km)
    tr = evolve(small_state, p, record_stride=5)
    assert tr.status == "Completed"
    assert abs(tr.records[-1].energy - e0) < 1e-5 * abs(e0)
    assert np.abs(gram_matrix(tr.final_state) - np.eye(2)).max() < 1e-10


def test_determinism(small_state):
    p = EvolutionParams(epsilon=0.1, dt=0.02, t_end=0.2)
    a = evolve(small_state, p, record_stride=2)
    b = evolve(small_state, p, record_stride=2)
    assert np.array_equal(a.final_state.components, b.final_state.components)
    assert [r.as_dict() for r in a.records] == [r.as_dict() for r in b.records]


def test_non_finite_data_trips_sentinel():
    g = make_grid(16, 8.0)
    comps = np.ones((1, *g.shape), complex)
    comps[0, 3, 3, 3] = np.nan
    st = MixedState(g, comps, [1.0])
    tr = evolve(st, EvolutionParams(dt=0.1, t_end=0.5), record_stride=1, diagnostics=False)
    assert tr.status == "BlowupDetected" and "non-finite" in tr.sentinel_reason


def test_large_dt_warns(small_state):
    with pytest.warns(RuntimeWarning):
        evolve(small_state, EvolutionParams(dt=0.5, t_end=0.5), diagnostics=False)


def test_observer_sees_every_record(small_state):
    seen = []
    evolve(small_state, EvolutionParams(dt=0.02, t_end=0.1), record_stride=1,
           observers=[lambda rec, st: seen.append((rec.step, st.rank))])
    assert seen == [(i, 2) for i in range(6)]


def test_linear_convergence_exact():
    g = make_grid(16, 8.0)
    st = build_initial_state(g, InitialRecipe(widths=[1.0]))
    res = convergence_study(st, EvolutionParams(epsilon=0.1, dt=0.1, t_end=0.4, linear_only=True),
                            [0.1, 0.05, 0.025])
    assert res.errors.max() < 1e-13


def test_dissipative_second_order(small_state):
    st = MixedState(small_state.grid, small_state.components, 2.25 * small_state.weights)
    p = EvolutionParams(epsilon=0.1, dt=0.04, t_end=0.8)
    res = convergence_study(st, p, [0.04, 0.02, 0.01, 0.0025])
    assert res.order >= 1.8
    assert len(res.table()) == 3


def test_convergence_study_validation(small_state):
    with pytest.raises(ValueError):
        convergence_study(small_state, EvolutionParams(dt=0.1, t_end=0.4), [0.1, 0.05])
    with pytest.raises(ValueError):
        convergence_study(small_state, EvolutionParams(dt=0.1, t_end=0.4), [0.1, 0.05, 0.03])
