"""Attractive Coulomb (Hartree) potential ``V = -(1/|x|) * n``.

Two discretisations of the convolution are offered:

* ``periodic``: the torus Green's function ``-4*pi/|k|^2`` with the zero mode
  dropped, so V has zero mean.
* ``truncated``: the Coulomb kernel cut off at radius R, whose transform
  ``-4*pi*(1 - cos(R|k|))/|k|^2`` is smooth at k = 0. For a density supported
  in a ball of radius rho with ``2*rho <= R <= L/2`` the result equals the
  free-space convolution inside that ball.

``newton_radial_potential`` evaluates the shell formula for spherically
symmetric densities and serves as an independent oracle for the spectral
solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Grid3, Multiplier, apply_multiplier, apply_real_multiplier

__all__ = [
    "KernelMode",
    "coulomb_symbol",
    "solve_potential",
    "newton_radial_potential",
]


@dataclass(frozen=True)
class KernelMode:
    """``kind`` is ``"periodic"`` or ``"truncated"``; ``radius`` is used by the latter."""

    kind: str = "truncated"
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("periodic", "truncated"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "truncated" and self.radius is not None and not self.radius > 0:
            raise ValueError("truncation radius must be positive")

    @classmethod
    def periodic(cls) -> "KernelMode":
        return cls("periodic", None)

    @classmethod
    def truncated(cls, radius: float | None = None) -> "KernelMode":
        return cls("truncated", radius)

    def resolved_radius(self, grid: Grid3) -> float:
        """Truncation radius on ``grid``; defaults to L/2."""
        if self.kind != "truncated":
            raise ValueError("periodic kernel has no truncation radius")
        r = 0.5 * grid.box_length if self.radius is None else float(self.radius)
        if r > grid.box_length * np.sqrt(3.0) / 2.0 + 1e-12:
            raise ValueError(
                f"truncation radius {r} exceeds the box half-diagonal {grid.box_length * np.sqrt(3) / 2}"
            )
        return r


def coulomb_symbol(grid: Grid3, mode: KernelMode) -> Multiplier:
    """Fourier symbol of ``n -> -(1/|x|) * n`` for the chosen discretisation."""
    k2 = grid.k_squared
    sym = np.zeros(grid.shape)
    nz = k2 > 0
    if mode.kind == "periodic":
        sym[nz] = -4.0 * np.pi / k2[nz]
    else:
        r = mode.resolved_radius(grid)
        k = np.sqrt(k2[nz])
        # 1 - cos(Rk) written as 2 sin^2(Rk/2) to avoid cancellation at small k
        sym[nz] = -8.0 * np.pi * np.sin(0.5 * r * k) ** 2 / k2[nz]
        sym[~nz] = -2.0 * np.pi * r * r
    return Multiplier(grid, sym)


def solve_potential(n_field: np.ndarray, mode: KernelMode, grid: Grid3 | None = None,
                    symbol: Multiplier | None = None) -> np.ndarray:
    """Hartree potential of a density.

    Parameters
    ----------
    n_field : array (n, n, n)
        Density; real input takes the half-spectrum path, complex input the
        full transform.
    mode : KernelMode
    grid : Grid3, optional
        Required unless ``symbol`` is given.
    symbol : Multiplier, optional
        Precomputed ``coulomb_symbol(grid, mode)`` (hot loops pass this).
    """
    if symbol is None:
        if grid is None:
            raise ValueError("either grid or a precomputed symbol is required")
        symbol = coulomb_symbol(grid, mode)
    if np.iscomplexobj(n_field):
        return apply_multiplier(n_field, symbol)
    return apply_real_multiplier(n_field, symbol)


def _segment_integrals(r: np.ndarray, f: np.ndarray) -> np.ndarray:
    return 0.5 * (f[1:] + f[:-1]) * np.diff(r)


def newton_radial_potential(radii, values, eval_radii, return_gradient: bool = False):
    """Potential of a spherically symmetric density from the shell formula.

    ``V(r) = -(1/r) * int_{|y|<=r} n dy - int_{|y|>r} n(y)/|y| dy``, with both
    radial integrals done by the composite trapezoid rule on the supplied
    nodes (density interpolated linearly inside a partial segment). The
    density is taken constant on ``[0, radii[0]]`` and zero beyond
    ``radii[-1]``.

    Returns ``V`` at ``eval_radii``; with ``return_gradient`` also returns
    ``dV/dr = M(r)/r^2`` and the enclosed mass ``M(r)``.
    """
    r = np.asarray(radii, dtype=float)
    rho = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.shape != rho.shape or r.size < 2:
        raise ValueError("radii and values must be matching 1-D arrays of length >= 2")
    if np.any(np.diff(r) <= 0):
        raise ValueError("radii must be strictly increasing")
    if r[0] < 0:
        raise ValueError("radii must be non-negative")
    ev = np.atleast_1d(np.asarray(eval_radii, dtype=float))

    inner_f = 4.0 * np.pi * rho * r * r
    outer_f = 4.0 * np.pi * rho * r
    core_mass = 4.0 * np.pi * rho[0] * r[0] ** 3 / 3.0
    cum_in = core_mass + np.concatenate(([0.0], np.cumsum(_segment_integrals(r, inner_f))))
    seg_out = _segment_integrals(r, outer_f)
    tail_out = np.concatenate((np.cumsum(seg_out[::-1])[::-1], [0.0]))

    enclosed = np.empty_like(ev)
    outside = np.empty_like(ev)
    for i, x in enumerate(ev):
        if x >= r[-1]:
            enclosed[i] = cum_in[-1]
            outside[i] = 0.0
        elif x <= r[0]:
            enclosed[i] = 4.0 * np.pi * rho[0] * x**3 / 3.0
            outside[i] = tail_out[0] + 2.0 * np.pi * rho[0] * (r[0] ** 2 - x * x)
        else:
            j = np.searchsorted(r, x, side="right") - 1
            rx = rho[j] + (rho[j + 1] - rho[j]) * (x - r[j]) / (r[j + 1] - r[j])
            fin = 4.0 * np.pi * rx * x * x
            fout = 4.0 * np.pi * rx * x
            enclosed[i] = cum_in[j] + 0.5 * (inner_f[j] + fin) * (x - r[j])
            outside[i] = tail_out[j + 1] + 0.5 * (fout + outer_f[j + 1]) * (r[j + 1] - x)

    with np.errstate(divide="ignore", invalid="ignore"):
        pot = np.where(ev > 0, -enclosed / np.where(ev > 0, ev, 1.0), 0.0) - outside
        grad = np.where(ev > 0, enclosed / np.where(ev > 0, ev, 1.0) ** 2, 0.0)
    if return_gradient:
        return pot, grad, enclosed
    return pot
