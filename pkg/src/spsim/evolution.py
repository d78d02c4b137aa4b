"""Split-step time integration of the dissipative semi-relativistic Hartree system.

The generator splits into a Fourier-diagonal linear part (relativistic
kinetic operator plus fractional dissipation) and the pointwise Hartree
potential. Both sub-flows are solved exactly:

* linear: multiply Fourier coefficients by ``exp(-i t sqrt(k^2+m^2) - eps t |k|^(2 alpha))``;
* potential: multiply every component by ``exp(-i t V)``, where V is built
  from the common density. The phase leaves ``|psi_k|`` unchanged, so V is
  constant during this sub-flow.

Strang splitting (half linear, potential, half linear) is the default;
Lie splitting (full linear, potential) is kept for order cross-checks.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .diagnostics import (
    DiagnosticsRecord,
    Thresholds,
    blowup_monitor,
    compute_record,
)
from .hartree import KernelMode, coulomb_symbol, solve_potential
from .mixed_state import MixedState, density
from .spectral import Multiplier, forward_transform, inverse_transform

__all__ = [
    "EvolutionParams",
    "BlowupSentinel",
    "Trajectory",
    "linear_half_step_symbol",
    "linear_step_symbol",
    "step_strang",
    "step_lie",
    "evolve",
    "convergence_study",
    "ConvergenceResult",
]

log = logging.getLogger(__name__)


class BlowupSentinel(FloatingPointError):
    """A component became non-finite during a step."""


@dataclass(frozen=True)
class EvolutionParams:
    m: float = 1.0
    epsilon: float = 0.0
    alpha: float = 0.5
    dt: float = 0.01
    t_end: float = 1.0
    kernel_mode: KernelMode = field(default_factory=KernelMode.truncated)
    splitting: str = "strang"
    linear_only: bool = False

    def __post_init__(self):
        if not self.m >= 0:
            raise ValueError("m must be non-negative")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be non-negative")
        if not self.alpha >= 0.5:
            raise ValueError("alpha must be >= 1/2")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if self.splitting not in ("strang", "lie"):
            raise ValueError(f"unknown splitting {self.splitting!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def _linear_symbol(grid, params: EvolutionParams, tau: float) -> Multiplier:
    kin = np.sqrt(grid.k_squared + params.m**2)
    damp = params.epsilon * grid.k_squared**params.alpha if params.epsilon else 0.0
    return Multiplier(grid, np.exp(-1j * tau * kin - tau * damp))


def linear_half_step_symbol(grid, params: EvolutionParams) -> Multiplier:
    """``exp(-i (dt/2) sqrt(k^2+m^2) - eps (dt/2) |k|^(2 alpha))``; modulus <= 1."""
    return _linear_symbol(grid, params, 0.5 * params.dt)


def linear_step_symbol(grid, params: EvolutionParams, tau: float | None = None) -> Multiplier:
    return _linear_symbol(grid, params, params.dt if tau is None else tau)


def _check_finite(a: np.ndarray):
    if not np.isfinite(a).all():
        raise BlowupSentinel("non-finite values in wavefunction")


def _phase(state_components, weights, coulomb, dt):
    """Apply the potential sub-flow in place; returns the potential used."""
    n = np.zeros(state_components.shape[1:])
    for lam, psi in zip(weights, state_components):
        n += lam * (psi.real**2 + psi.imag**2)
    v = solve_potential(n, None, symbol=coulomb)
    _check_finite(v)
    state_components *= np.exp(-1j * dt * v)
    return v


def step_strang(state: MixedState, params: EvolutionParams, *, half: Multiplier | None = None,
                coulomb: Multiplier | None = None) -> MixedState:
    """One Strang step: half linear step, potential phase for dt, half linear step.

    Every component sees the same potential, built from the density after
    the first half step.
    """
    grid = state.grid
    if half is None:
        half = linear_half_step_symbol(grid, params)
    psi = inverse_transform(half.symbol * forward_transform(state.components))
    if not params.linear_only:
        if coulomb is None:
            coulomb = coulomb_symbol(grid, params.kernel_mode)
        _phase(psi, state.weights, coulomb, params.dt)
    psi = inverse_transform(half.symbol * forward_transform(psi))
    _check_finite(psi)
    return state.with_components(psi)


def step_lie(state: MixedState, params: EvolutionParams, *, full: Multiplier | None = None,
             coulomb: Multiplier | None = None) -> MixedState:
    """One first-order Lie step: full linear step, then the potential phase."""
    grid = state.grid
    if full is None:
        full = linear_step_symbol(grid, params)
    psi = inverse_transform(full.symbol * forward_transform(state.components))
    if not params.linear_only:
        if coulomb is None:
            coulomb = coulomb_symbol(grid, params.kernel_mode)
        _phase(psi, state.weights, coulomb, params.dt)
    _check_finite(psi)
    return state.with_components(psi)


@dataclass
class Trajectory:
    status: str
    records: list = field(default_factory=list)
    final_state: MixedState | None = None
    final_time: float = 0.0
    steps: int = 0
    sentinel_reason: str | None = None
    sentinel_time: float | None = None
    step_masses: np.ndarray | None = None
    step_ledger: np.ndarray | None = None
    step_times: np.ndarray | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


Observer = Callable[[DiagnosticsRecord, MixedState], None]


def evolve(initial: MixedState, params: EvolutionParams, record_stride: int = 10,
           thresholds: Thresholds | None = Thresholds(), observers: Iterable[Observer] = (),
           window: bool = True, diagnostics: bool = True) -> Trajectory:
    """Integrate from ``initial`` up to ``params.t_end``.

    The state is carried in Fourier space between steps, so consecutive
    linear half steps fuse into one multiplier and each step costs a single
    transform pair per component. Masses and the dissipation ledger are
    tracked at every step from the Fourier coefficients; the full record is
    computed every ``record_stride`` steps (and at the end), where the blow-up
    monitor is consulted.

    Returns a :class:`Trajectory` whose ``status`` is ``"Completed"`` or
    ``"BlowupDetected"``.
    """
    grid = initial.grid
    if params.dt > 0.5 * grid.spacing:
        warnings.warn(
            f"dt={params.dt} exceeds 0.5*spacing={0.5 * grid.spacing}; accuracy may suffer",
            RuntimeWarning,
            stacklevel=2,
        )
    n_steps = params.n_steps
    weights = initial.weights
    coulomb = coulomb_symbol(grid, params.kernel_mode)
    kin = np.sqrt(grid.k_squared + params.m**2)
    diss = params.epsilon * grid.k_squared**params.alpha if params.epsilon else np.zeros(grid.shape)
    strang = params.splitting == "strang"
    tau = 0.5 * params.dt if strang else params.dt
    first = np.exp(-1j * tau * kin - tau * diss)  # half step (Strang) or full step (Lie)
    fused = first * first if strang else first
    # |first|^2 maps quantities of the post-phase coefficients to the step boundary
    boundary_gain = np.exp(-2.0 * tau * diss) if strang else None
    rate_symbol = 2.0 * diss  # 2 eps |k|^(2 alpha)
    scale = grid.cell_volume / grid.n**3

    def boundary_quantities(hats_b, gain):
        p = hats_b.real**2 + hats_b.imag**2
        if gain is not None:
            p = p * gain
        masses = p.reshape(len(p), -1).sum(1) * scale
        rate = float(weights @ np.einsum("kabc,abc->k", p, rate_symbol)) * scale if params.epsilon else 0.0
        return masses, rate

    hats = forward_transform(initial.components)
    masses0, rate_prev = boundary_quantities(hats, None)
    ledger = 0.0
    step_masses = [masses0]
    step_ledger = [0.0]
    step_times = [0.0]
    records: list[DiagnosticsRecord] = []
    observers = list(observers)

    def record(state, step):
        rec = compute_record(state, step * params.dt, params.m, params.kernel_mode, ledger,
                             window=window, step=step, coulomb=coulomb)
        records.append(rec)
        for obs in observers:
            obs(rec, state)
        return rec

    state = initial
    h0 = None
    if diagnostics:
        h0 = record(initial, 0).h_half

    status, reason, sentinel_t = "Completed", None, None
    pending = None  # post-phase coefficients whose last half step is still owed (Strang)
    step = 0
    try:
        for step in range(1, n_steps + 1):
            mult = first if pending is None else fused
            src = hats if pending is None else pending
            psi = inverse_transform(mult * src)
            if not params.linear_only:
                _phase(psi, weights, coulomb, params.dt)
            b = forward_transform(psi)
            _check_finite(b)
            if strang:
                pending = b
                masses, rate = boundary_quantities(b, boundary_gain)
            else:
                hats = b
                masses, rate = boundary_quantities(b, None)
            ledger += 0.5 * params.dt * (rate_prev + rate)
            rate_prev = rate
            step_masses.append(masses)
            step_ledger.append(ledger)
            step_times.append(step * params.dt)

            if step % record_stride == 0 or step == n_steps:
                if strang:
                    hats = first * pending
                    pending = None
                state = initial.with_components(inverse_transform(hats))
                if diagnostics:
                    rec = record(state, step)
                    if thresholds is not None:
                        verdict = blowup_monitor(rec, h0, thresholds)
                        if verdict:
                            status, reason, sentinel_t = "BlowupDetected", verdict.reason, rec.t
                            break
    except BlowupSentinel as exc:
        status, reason, sentinel_t = "BlowupDetected", str(exc), step * params.dt
        log.info("sentinel at t=%.4f: %s", sentinel_t, exc)
    else:
        if pending is not None:
            hats = first * pending
            state = initial.with_components(inverse_transform(hats))

    return Trajectory(
        status=status,
        records=records,
        final_state=state,
        final_time=state_time(records, step, params, status),
        steps=step,
        sentinel_reason=reason,
        sentinel_time=sentinel_t,
        step_masses=np.array(step_masses),
        step_ledger=np.array(step_ledger),
        step_times=np.array(step_times),
    )


def state_time(records, step, params, status):
    if status == "Completed":
        return params.n_steps * params.dt
    return records[-1].t if records else step * params.dt


@dataclass
class ConvergenceResult:
    dts: np.ndarray
    errors: np.ndarray
    order: float
    reference_dt: float

    def table(self):
        return list(zip(self.dts.tolist(), self.errors.tolist()))


def convergence_study(initial: MixedState, params: EvolutionParams, refinement_levels) -> ConvergenceResult:
    """Self-convergence in the weighted L^2 norm against the finest level.

    ``refinement_levels`` is a sequence of time steps (at least three); the
    smallest is the reference solution. Returns the errors of the remaining
    levels and the least-squares order fitted to ``log(error)`` vs ``log(dt)``.
    """
    dts = sorted((float(d) for d in refinement_levels), reverse=True)
    if len(dts) < 3:
        raise ValueError("need at least three refinement levels")
    finals = []
    for dt in dts:
        p = replace(params, dt=dt)
        steps = p.t_end / dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(f"t_end={p.t_end} is not a multiple of dt={dt}")
        traj = evolve(initial, p, record_stride=p.n_steps, thresholds=None, diagnostics=False)
        if traj.status != "Completed":
            raise RuntimeError(f"run at dt={dt} did not complete: {traj.sentinel_reason}")
        finals.append(traj.final_state)
    ref = finals[-1]
    grid = initial.grid
    errs = []
    for st in finals[:-1]:
        diff = (st.components - ref.components).reshape(st.rank, -1)
        per = np.einsum("ij,ij->i", diff.conj(), diff).real * grid.cell_volume
        errs.append(math.sqrt(float(initial.weights @ per)))
    errs = np.array(errs)
    d = np.array(dts[:-1])
    good = errs > 0
    order = float(np.polyfit(np.log(d[good]), np.log(errs[good]), 1)[0]) if good.sum() >= 2 else float("nan")
    return ConvergenceResult(d, errs, order, dts[-1])
