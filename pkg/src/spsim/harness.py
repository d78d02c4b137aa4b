"""Experiment driver: single runs, negative-energy tuning and the epsilon sweep."""

from __future__ import annotations

import json
import logging
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import SimConfig, config_hash, dump_config
from .diagnostics import energy, records_to_csv, records_to_json
from .evolution import Trajectory, evolve
from .hartree import KernelMode
from .initial import InitialRecipe, build_initial_state
from .mixed_state import write_snapshot
from .spectral import Grid3

__all__ = [
    "RunResult",
    "TuneResult",
    "NonBracketingError",
    "BlowupStudyReport",
    "run",
    "tune_negative_energy",
    "blowup_study",
    "software_info",
]

log = logging.getLogger(__name__)


def software_info() -> dict:
    return {
        "package": "spsim",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


@dataclass
class RunResult:
    status: str
    report: dict
    trajectory: Trajectory = field(repr=False)
    files: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 0 if self.status == "Completed" else 3


def run(config: SimConfig, output_dir=None, write: bool = True) -> RunResult:
    """Evolve the configured initial data and write every artefact.

    Artefacts in ``output_dir`` (default ``config.output.directory``):
    ``diagnostics.csv`` / ``diagnostics.json`` (as selected in
    ``output.formats``), ``snapshot_<step>.sps`` every ``snapshot_stride``
    steps, ``final.sps``, ``config.yaml`` and ``report.json``.
    """
    grid = config.make_grid()
    params = config.evolution_params()
    state = build_initial_state(grid, config.recipe())
    e0, kin0, pot0 = energy(state, params.m, params.kernel_mode)

    out = Path(output_dir if output_dir is not None else config.output.directory)
    files: dict[str, str] = {}
    observers = []
    if write:
        out.mkdir(parents=True, exist_ok=True)
        stride = config.time.snapshot_stride
        if stride:
            def snap(rec, st):
                if rec.step % stride == 0:
                    p = out / f"snapshot_{rec.step:07d}.sps"
                    write_snapshot(p, st)
                    files.setdefault("snapshots", []).append(p.name)
            observers.append(snap)

    traj = evolve(state, params, record_stride=config.time.record_stride,
                  thresholds=config.monitor_thresholds(), observers=observers)
    h0 = traj.records[0].h_half
    report = {
        "status": traj.status,
        "final_time": traj.final_time,
        "sentinel_reason": traj.sentinel_reason,
        "sentinel_time": traj.sentinel_time,
        "energy0": e0,
        "kinetic0": kin0,
        "potential0": pot0,
        "masses0": [float(v) for v in state.masses()],
        "weights": [float(v) for v in state.weights],
        "max_h_half_ratio": float(max(r.h_half for r in traj.records) / h0),
        "final_h_half_ratio": float(traj.records[-1].h_half / h0),
        "config_hash": config_hash(config),
        "software": software_info(),
        "config": config.to_dict(),
    }
    if write:
        if "csv" in config.output.formats:
            (out / "diagnostics.csv").write_text(records_to_csv(traj.records))
            files["diagnostics_csv"] = "diagnostics.csv"
        if "json" in config.output.formats:
            (out / "diagnostics.json").write_text(records_to_json(traj.records))
            files["diagnostics_json"] = "diagnostics.json"
        write_snapshot(out / "final.sps", traj.final_state)
        files["final_snapshot"] = "final.sps"
        dump_config(config, out / "config.yaml")
        files["config"] = "config.yaml"
        report["files"] = files
        (out / "report.json").write_text(json.dumps(report, indent=2))
    log.info("run finished: %s at t=%.4f", traj.status, traj.final_time)
    return RunResult(traj.status, report, traj, files)


# ---------------------------------------------------------------------------


class NonBracketingError(ValueError):
    """The energy target cannot be reached below the amplitude cap."""


@dataclass(frozen=True)
class TuneResult:
    amplitude: float
    energy: float
    kinetic: float
    potential: float


def tune_negative_energy(grid: Grid3, recipe: InitialRecipe, m: float, kernel_mode: KernelMode,
                         target: float, amplitude_cap: float = 20.0, rtol: float = 1e-10) -> TuneResult:
    """Amplitude c at which the recipe's energy reaches ``target``.

    With amplitude c the kinetic part scales as c^2 and the potential part as
    c^4, so ``E(c) = c^2 K + c^4 P`` with K, P the unit-amplitude parts. E
    rises to its peak at ``c_* = sqrt(K / (-2P))`` and decreases afterwards.
    If the target is at or above the peak every amplitude qualifies and a
    small amplitude (``1e-3 c_*``) is returned; otherwise c is found by
    bisection on ``[c_*, amplitude_cap]`` and satisfies ``E(c) <= target``.
    The returned energy and its parts are re-evaluated with ``energy()``.

    Raises
    ------
    NonBracketingError
        If ``E(amplitude_cap) > target``.
    """
    base = build_initial_state(grid, recipe.with_amplitude(1.0))
    _, kin, pot = energy(base, m, kernel_mode)
    if not pot < 0:
        raise NonBracketingError("potential energy is not negative; the target cannot be reached")
    e_of = lambda c: c * c * kin + c**4 * pot  # noqa: E731
    c_peak = np.sqrt(kin / (-2.0 * pot))
    if target >= e_of(c_peak):
        c = 1e-3 * c_peak
    else:
        if e_of(amplitude_cap) > target:
            raise NonBracketingError(
                f"E({amplitude_cap}) = {e_of(amplitude_cap):.4g} is above the target {target}"
            )
        lo, hi = c_peak, float(amplitude_cap)
        while hi - lo > rtol * hi:
            mid = 0.5 * (lo + hi)
            if e_of(mid) > target:
                lo = mid
            else:
                hi = mid
        c = hi
    st = build_initial_state(grid, recipe.with_amplitude(c))
    e, k, p = energy(st, m, kernel_mode)
    log.info("tuned amplitude %.8g: energy %.6g (kinetic %.6g, potential %.6g)", c, e, k, p)
    return TuneResult(float(c), e, k, p)


# ---------------------------------------------------------------------------


@dataclass
class BlowupStudyReport:
    rows: list
    energy0: float
    config_hash: str

    @property
    def dichotomy_holds(self) -> bool:
        """epsilon = 0 trips the sentinel and every epsilon > 0 completes."""
        zero = [r for r in self.rows if r["epsilon"] == 0]
        pos = [r for r in self.rows if r["epsilon"] > 0]
        return (all(r["status"] == "BlowupDetected" for r in zero)
                and all(r["status"] == "Completed" for r in pos))

    def table(self) -> str:
        lines = [f"{'epsilon':>8}  {'status':<15} {'sentinel_t':>10} {'max_h_ratio':>11} {'final_mass':>10}"]
        for r in self.rows:
            st = "-" if r["sentinel_time"] is None else f"{r['sentinel_time']:.3f}"
            lines.append(f"{r['epsilon']:8.3g}  {r['status']:<15} {st:>10} "
                         f"{r['max_h_half_ratio']:11.4g} {r['final_mass']:10.5g}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"rows": self.rows, "energy0": self.energy0, "config_hash": self.config_hash,
                "dichotomy_holds": self.dichotomy_holds}


def blowup_study(base_config: SimConfig, epsilons, output_dir=None) -> BlowupStudyReport:
    """Evolve the same initial data once per epsilon and tabulate the outcomes.

    Raises ``ValueError`` for an empty list or one without epsilon = 0.
    """
    eps = [float(e) for e in epsilons]
    if not eps:
        raise ValueError("epsilon list is empty")
    if 0.0 not in eps:
        raise ValueError("epsilon list must include 0")
    if any(e < 0 for e in eps):
        raise ValueError("epsilon values must be non-negative")
    rows = []
    e0 = None
    for e in eps:
        cfg = base_config.updated(physics={"epsilon": e})
        sub = None if output_dir is None else Path(output_dir) / f"eps_{e:g}"
        res = run(cfg, output_dir=sub, write=sub is not None)
        e0 = res.report["energy0"]
        traj = res.trajectory
        rows.append({
            "epsilon": e,
            "status": res.status,
            "sentinel_time": traj.sentinel_time,
            "sentinel_reason": traj.sentinel_reason,
            "max_h_half_ratio": res.report["max_h_half_ratio"],
            "final_h_half_ratio": res.report["final_h_half_ratio"],
            "final_time": traj.final_time,
            "final_mass": traj.records[-1].total_mass,
        })
    report = BlowupStudyReport(rows, e0, config_hash(base_config))
    if output_dir is not None:
        Path(output_dir).mkdir(parents=True, exist_ok=True)
        (Path(output_dir) / "study.json").write_text(json.dumps(report.to_dict(), indent=2))
    return report
