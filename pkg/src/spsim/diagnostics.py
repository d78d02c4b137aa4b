"""Tracked functionals of a mixed state and the blow-up monitor.

Position-weighted quantities (moments, the variance functional <M> and the
dilation functional <A>) multiply by box-centred coordinates. On a periodic
box these are only meaningful for states localised away from the boundary,
so by default the coordinates are multiplied by a separable cosine window
that equals 1 except in the outer 10% of each half-axis.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .hartree import KernelMode, coulomb_symbol, solve_potential
from .mixed_state import MixedState, density
from .spectral import Grid3, Multiplier, forward_transform, inverse_transform

__all__ = [
    "DiagnosticsRecord",
    "Thresholds",
    "MonitorVerdict",
    "BoundaryWarning",
    "position_window",
    "energy",
    "dissipation_rate",
    "dissipation_ledger_update",
    "variance_m",
    "dilation_a",
    "rest_term",
    "moments",
    "tail_fraction",
    "boundary_tail_mass",
    "compute_record",
    "blowup_monitor",
    "records_to_csv",
    "records_to_json",
    "RECORD_COLUMNS",
]

WINDOW_FRACTION = 0.10
TAIL_SHELL_START = 2.0 / 3.0


class BoundaryWarning(UserWarning):
    """Mass near the box boundary makes position-weighted functionals unreliable."""


def position_window(grid: Grid3, fraction: float = WINDOW_FRACTION) -> np.ndarray:
    """Separable cosine taper: 1 for |x_j| <= (1-fraction)*L/2, falling to 0 at L/2."""
    half = 0.5 * grid.box_length
    start = (1.0 - fraction) * half
    a = np.abs(grid.x_axis)
    w1 = np.where(
        a <= start, 1.0, 0.5 * (1.0 + np.cos(np.pi * np.clip((a - start) / (half - start), 0, 1)))
    )
    return w1[:, None, None] * w1[None, :, None] * w1[None, None, :]


def _weighted_coords(grid: Grid3, window: bool):
    coords = grid.coords
    if not window:
        return coords
    w = position_window(grid)
    return tuple(c * w for c in coords)


def boundary_tail_mass(state: MixedState, fraction: float = WINDOW_FRACTION) -> float:
    """Weighted mass located where the position window is below one."""
    w = position_window(state.grid, fraction)
    return float(np.sum(density(state)[w < 1.0]) * state.grid.cell_volume)


def _guard(state: MixedState, window: bool, tol: float = 1e-6):
    if not window:
        return
    tail = boundary_tail_mass(state)
    if tail > tol:
        warnings.warn(
            f"mass {tail:.3e} within the boundary shell; position functionals are windowed",
            BoundaryWarning,
            stacklevel=3,
        )


def _hats(state: MixedState) -> np.ndarray:
    return forward_transform(state.components)


def _form(grid: Grid3, weights, hats, symbol) -> float:
    """``sum_k lambda_k <psi_k, T psi_k>`` for a real symbol, from Fourier coefficients."""
    p = hats.real**2 + hats.imag**2
    per = np.einsum("kabc,abc->k", p, symbol)
    return float(np.dot(weights, per) * grid.cell_volume / grid.n**3)


def energy(state: MixedState, m: float, kernel_mode: KernelMode, hats=None, potential=None):
    """Return ``(total, kinetic, potential)``.

    kinetic = (1/2) sum_k lambda_k <psi_k, sqrt(-Delta + m^2) psi_k>,
    potential = (1/4) sum_k lambda_k <psi_k, V psi_k> = (1/4) int V n.
    """
    grid = state.grid
    if hats is None:
        hats = _hats(state)
    kin = 0.5 * _form(grid, state.weights, hats, np.sqrt(grid.k_squared + m * m))
    n = density(state)
    if potential is None:
        potential = solve_potential(n, kernel_mode, grid)
    pot = 0.25 * float(np.sum(potential * n) * grid.cell_volume)
    return kin + pot, kin, pot


def dissipation_rate(state: MixedState, epsilon: float, alpha: float, hats=None) -> float:
    """``2 eps sum_k lambda_k <psi_k, (-Delta)^alpha psi_k>``, the instantaneous mass loss rate."""
    if epsilon == 0:
        return 0.0
    if hats is None:
        hats = _hats(state)
    grid = state.grid
    return 2.0 * epsilon * _form(grid, state.weights, hats, grid.k_squared**alpha)


def dissipation_ledger_update(ledger: float, rate_prev: float, rate_next: float, dt: float) -> float:
    """Trapezoid increment of the dissipated-mass integral between two samples."""
    return ledger + 0.5 * dt * (rate_prev + rate_next)


def variance_m(state: MixedState, m: float, window: bool = True) -> float:
    """``sum_j sum_k lambda_k <x_j psi_k, sqrt(-Delta + m^2) x_j psi_k>``."""
    grid = state.grid
    _guard(state, window)
    sym = np.sqrt(grid.k_squared + m * m)
    total = 0.0
    for xj in _weighted_coords(grid, window):
        total += _form(grid, state.weights, forward_transform(xj * state.components), sym)
    return total


def dilation_a(state: MixedState, window: bool = True, hats=None) -> float:
    """``<A>`` with ``A = (x.p + p.x)/2``, computed as ``sum_j Re<x_j psi, p_j psi>``.

    The derivative symbol has its Nyquist entry zeroed so that real fields
    give exactly zero.
    """
    grid = state.grid
    _guard(state, window)
    if hats is None:
        hats = _hats(state)
    total = 0.0
    for xj, kj in zip(_weighted_coords(grid, window), _odd_symbols(grid)):
        dpsi = inverse_transform(kj * hats)  # p_j psi
        per = np.einsum("kabc,kabc->k", (xj * state.components).conj(), dpsi).real
        total += float(state.weights @ per)
    return total * grid.cell_volume


def _odd_symbols(grid: Grid3):
    k = np.array(grid.freq_axes[0])
    k[grid.n // 2] = 0.0
    return k[:, None, None], k[None, :, None], k[None, None, :]


def rest_term(state: MixedState, m: float, hats=None) -> float:
    """``sum_k lambda_k <psi_k, m^2 (p^2 + m^2)^(-1/2) psi_k>``; zero when m = 0."""
    if m == 0:
        return 0.0
    grid = state.grid
    if hats is None:
        hats = _hats(state)
    return _form(grid, state.weights, hats, m * m / np.sqrt(grid.k_squared + m * m))


def moments(state: MixedState, j: int, window: bool = True) -> float:
    """``sum_k lambda_k || |x|^j psi_k ||^2`` for j in {1, 2}."""
    if j not in (1, 2):
        raise ValueError("moment order must be 1 or 2")
    grid = state.grid
    x, y, z = _weighted_coords(grid, window)
    r2 = x * x + y * y + z * z
    weight = r2 if j == 1 else r2 * r2
    return float(np.sum(weight * density(state)) * grid.cell_volume)


def tail_fraction(state: MixedState, hats=None, start: float = TAIL_SHELL_START) -> float:
    """Share of the H-dot^{1/2} spectral energy in shells |k| >= start * k_max."""
    grid = state.grid
    if hats is None:
        hats = _hats(state)
    return _tail_from_hats(grid, state.weights, hats, start)


def _tail_from_hats(grid, weights, hats, start=TAIL_SHELL_START) -> float:
    p = hats.real**2 + hats.imag**2
    wp = np.tensordot(weights, p, axes=(0, 0)) * grid.k_abs
    tot = float(wp.sum())
    if tot <= 0:
        return 0.0
    return float(wp[grid.k_abs >= start * grid.k_max].sum() / tot)


@dataclass
class DiagnosticsRecord:
    t: float
    masses: list
    total_mass: float
    energy: float
    kinetic_part: float
    potential_part: float
    h_half: float
    h_half_hom: float
    ledger: float
    variance_m: float
    dilation_a: float
    rest_term: float
    moment1: float
    moment2: float
    tail_fraction: float
    step: int = field(default=0)
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["masses"] = [float(v) for v in self.masses]
        return d


RECORD_COLUMNS = [f.name for f in dataclasses.fields(DiagnosticsRecord) if f.name not in ("step", "extra")]


def compute_record(state: MixedState, t: float, m: float, kernel_mode: KernelMode,
                   ledger: float = 0.0, window: bool = True, step: int = 0,
                   coulomb: Multiplier | None = None) -> DiagnosticsRecord:
    """Evaluate every tracked functional of ``state`` at time ``t``."""
    grid = state.grid
    hats = _hats(state)
    if coulomb is None:
        coulomb = coulomb_symbol(grid, kernel_mode)
    n = density(state)
    pot_field = solve_potential(n, kernel_mode, symbol=coulomb)
    e, kin, pot = energy(state, m, kernel_mode, hats=hats, potential=pot_field)
    h_half = np.sqrt(max(_form(grid, state.weights, hats, np.sqrt(1.0 + grid.k_squared)), 0.0))
    h_hom = np.sqrt(max(_form(grid, state.weights, hats, grid.k_abs), 0.0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryWarning)
        vm = variance_m(state, m, window)
        da = dilation_a(state, window, hats=hats)
        m1 = moments(state, 1, window)
        m2 = moments(state, 2, window)
    return DiagnosticsRecord(
        t=float(t),
        masses=[float(v) for v in state.masses()],
        total_mass=state.total_mass(),
        energy=e,
        kinetic_part=kin,
        potential_part=pot,
        h_half=float(h_half),
        h_half_hom=float(h_hom),
        ledger=float(ledger),
        variance_m=vm,
        dilation_a=da,
        rest_term=rest_term(state, m, hats=hats),
        moment1=m1,
        moment2=m2,
        tail_fraction=_tail_from_hats(grid, state.weights, hats),
        step=step,
        extra={"boundary_mass": boundary_tail_mass(state)} if window else {},
    )


@dataclass(frozen=True)
class Thresholds:
    blowup_ratio: float = 50.0
    tail_threshold: float = 0.10


@dataclass(frozen=True)
class MonitorVerdict:
    blowup: bool
    reason: str | None = None

    def __bool__(self):
        return self.blowup


def blowup_monitor(record: DiagnosticsRecord, h_half_initial: float,
                   thresholds: Thresholds = Thresholds()) -> MonitorVerdict:
    """Trip on H^{1/2} growth past ``blowup_ratio`` or on loss of spectral resolution."""
    if not np.isfinite(record.h_half):
        return MonitorVerdict(True, "non-finite h_half")
    if h_half_initial > 0 and record.h_half > thresholds.blowup_ratio * h_half_initial:
        return MonitorVerdict(
            True, f"h_half ratio {record.h_half / h_half_initial:.3g} > {thresholds.blowup_ratio}"
        )
    if record.tail_fraction > thresholds.tail_threshold:
        return MonitorVerdict(
            True, f"tail_fraction {record.tail_fraction:.3g} > {thresholds.tail_threshold}"
        )
    return MonitorVerdict(False)


def _row(rec: DiagnosticsRecord) -> list:
    row = []
    for name in RECORD_COLUMNS:
        v = getattr(rec, name)
        row.append(";".join(repr(float(x)) for x in v) if name == "masses" else repr(float(v)))
    return row


def records_to_csv(records, fh=None) -> str:
    """One row per record, columns in ``RECORD_COLUMNS`` order; masses joined by ';'."""
    buf = io.StringIO() if fh is None else fh
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for rec in records:
        w.writerow(_row(rec))
    return buf.getvalue() if fh is None else ""


def records_to_json(records) -> str:
    return json.dumps([{k: r.as_dict()[k] for k in RECORD_COLUMNS} for r in records])
