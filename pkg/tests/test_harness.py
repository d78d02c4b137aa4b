import json
import logging

import numpy as np
import pytest

from spsim.config import parse_config
from spsim.diagnostics import energy
from spsim.harness import NonBracketingError, blowup_study, run, tune_negative_energy
from spsim.hartree import KernelMode
from spsim.initial import InitialRecipe, build_initial_state
from spsim.spectral import make_grid


def _cfg(tmp_path, **physics):
    return parse_config({
        "grid": {"n": 16, "L": 8.0},
        "physics": {"m": 1.0, "epsilon": 0.0, "alpha": 0.5, **physics},
        "time": {"dt": 0.05, "t_end": 0.2, "record_stride": 2, "snapshot_stride": 2},
        "initial": {"widths": [1.0, 1.3], "weights": [1.0, 0.5]},
        "output": {"directory": str(tmp_path / "out")},
    })


def test_run_writes_artifacts(tmp_path):
    res = run(_cfg(tmp_path))
    out = tmp_path / "out"
    assert res.status == "Completed" and res.exit_code == 0
    for name in ("diagnostics.csv", "diagnostics.json", "final.sps", "config.yaml", "report.json"):
        assert (out / name).exists()
    assert sorted(p.name for p in out.glob("snapshot_*.sps")) == [
        "snapshot_0000000.sps", "snapshot_0000002.sps", "snapshot_0000004.sps"]
    rep = json.loads((out / "report.json").read_text())
    for key in ("status", "final_time", "sentinel_reason", "energy0", "masses0", "config_hash", "software"):
        assert key in rep
    assert rep["software"]["version"] == "0.1.0"
    assert len(rep["config_hash"]) == 64


def test_run_is_deterministic(tmp_path):
    cfg = _cfg(tmp_path, epsilon=0.1)
    run(cfg, output_dir=tmp_path / "a")
    run(cfg, output_dir=tmp_path / "b")
    assert (tmp_path / "a" / "diagnostics.csv").read_bytes() == (tmp_path / "b" / "diagnostics.csv").read_bytes()
    assert (tmp_path / "a" / "final.sps").read_bytes() == (tmp_path / "b" / "final.sps").read_bytes()


def test_run_without_writing(tmp_path):
    res = run(_cfg(tmp_path), write=False)
    assert not (tmp_path / "out").exists()
    assert res.report["status"] == "Completed"


@pytest.fixture(scope="module")
def grid():
    return make_grid(32, 16.0)


def test_tune_rank_one_negative(grid):
    rec = InitialRecipe(widths=[1.0])
    res = tune_negative_energy(grid, rec, 1.0, KernelMode.truncated(), target=-0.1)
    st = build_initial_state(grid, rec.with_amplitude(res.amplitude))
    e = energy(st, 1.0, KernelMode.truncated())[0]
    assert e < 0 and e <= -0.1 + 1e-8
    assert res.energy == pytest.approx(e)


def test_tune_positive_target_gives_small_amplitude(grid):
    res = tune_negative_energy(grid, InitialRecipe(widths=[1.0]), 1.0, KernelMode.truncated(), target=1.0)
    assert res.amplitude < 0.01
    assert res.energy > 0 and res.energy == pytest.approx(res.kinetic, rel=1e-4)


def test_tune_rank_three_logs(grid, caplog):
    rec = InitialRecipe(widths=[0.8, 1.0, 1.3], weights=[1.0, 0.6, 0.3])
    with caplog.at_level(logging.INFO, logger="spsim.harness"):
        res = tune_negative_energy(grid, rec, 1.0, KernelMode.truncated(), target=-0.05)
    assert res.energy <= -0.05 + 1e-8
    assert "kinetic" in caplog.text and "potential" in caplog.text


def test_tune_non_bracketing(grid):
    with pytest.raises(NonBracketingError):
        tune_negative_energy(grid, InitialRecipe(widths=[1.0]), 1.0, KernelMode.truncated(),
                             target=-1e6, amplitude_cap=5.0)


@pytest.mark.parametrize("eps", [[], [0.1, 0.5], [0.0, -0.1]])
def test_blowup_study_rejects_bad_lists(tmp_path, eps):
    with pytest.raises(ValueError):
        blowup_study(_cfg(tmp_path), eps)


def test_blowup_study_positive_energy_no_sentinel(tmp_path):
    rep = blowup_study(_cfg(tmp_path), [0.0], output_dir=tmp_path / "study")
    assert rep.energy0 > 0
    assert rep.rows[0]["status"] == "Completed" and rep.rows[0]["sentinel_time"] is None
    assert (tmp_path / "study" / "study.json").exists()
    assert "epsilon" in rep.table()
