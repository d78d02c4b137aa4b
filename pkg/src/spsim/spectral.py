"""Periodic grids, discrete Fourier transforms and Fourier multipliers.

Every nonlocal operator in the package (the relativistic kinetic operator,
fractional Laplacians, the Coulomb kernel, the fractional heat semigroup) is
a diagonal multiplier on the discrete Fourier coefficients of a field sampled
on a cubic periodic box.

Conventions
-----------
* Fields are complex ``(n, n, n)`` arrays, axis order (x, y, z), sampled at
  the box-centred points ``x_i = -L/2 + i*h``.
* ``forward_transform`` carries no prefactor, ``inverse_transform`` carries
  ``1/n**3`` (the numpy/scipy default).
* Frequencies are stored in FFT order, ``k = (2*pi/L) * fftfreq_index``, so
  each axis holds ``(2*pi/L) * {-n/2, ..., n/2 - 1}`` exactly once.
* Quadrature of every integral is the uniform Riemann sum with weight ``h**3``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid3",
    "Multiplier",
    "make_grid",
    "forward_transform",
    "inverse_transform",
    "kinetic_symbol",
    "frac_laplacian_symbol",
    "sobolev_symbol",
    "apply_multiplier",
    "apply_real_multiplier",
    "inner",
    "l2_norm_sq",
    "lp_norm",
]


@dataclass(frozen=True, eq=False)
class Grid3:
    """Cubic periodic box of side ``box_length`` with ``n_per_axis`` points per axis."""

    n_per_axis: int
    box_length: float
    freq_axes: tuple = field(repr=False, default=())

    def __post_init__(self):
        if not self.freq_axes:
            k = (2.0 * np.pi / self.box_length) * np.fft.fftfreq(
                self.n_per_axis, d=1.0 / self.n_per_axis
            )
            k.setflags(write=False)
            object.__setattr__(self, "freq_axes", (k, k, k))

    @property
    def n(self) -> int:
        return self.n_per_axis

    @property
    def spacing(self) -> float:
        return self.box_length / self.n_per_axis

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_per_axis,) * 3

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / self.box_length

    @property
    def k_max(self) -> float:
        """Per-axis Nyquist frequency ``pi / h``."""
        return np.pi / self.spacing

    @cached_property
    def x_axis(self) -> np.ndarray:
        return -0.5 * self.box_length + self.spacing * np.arange(self.n_per_axis)

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable centred coordinate arrays (shapes (n,1,1), (1,n,1), (1,1,n))."""
        x = self.x_axis
        return x[:, None, None], x[None, :, None], x[None, None, :]

    @cached_property
    def r(self) -> np.ndarray:
        x, y, z = self.coords
        return np.sqrt(x * x + y * y + z * z)

    @cached_property
    def k_vectors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = self.freq_axes[0]
        return k[:, None, None], k[None, :, None], k[None, None, :]

    @cached_property
    def k_squared(self) -> np.ndarray:
        kx, ky, kz = self.k_vectors
        return kx * kx + ky * ky + kz * kz

    @cached_property
    def k_abs(self) -> np.ndarray:
        return np.sqrt(self.k_squared)


def make_grid(n: int, box_length: float) -> Grid3:
    """Build a cubic periodic grid.

    Raises
    ------
    ValueError
        If ``n`` is odd or smaller than 8, or ``box_length`` is not positive.
    """
    if int(n) != n or n < 8 or n % 2:
        raise ValueError(f"n must be an even integer >= 8, got {n!r}")
    if not box_length > 0:
        raise ValueError(f"box_length must be positive, got {box_length!r}")
    return Grid3(int(n), float(box_length))


@dataclass(frozen=True, eq=False)
class Multiplier:
    """Fourier-space symbol on a grid, indexed like the output of ``forward_transform``."""

    grid: Grid3
    symbol: np.ndarray

    def __post_init__(self):
        sym = np.broadcast_to(self.symbol, self.grid.shape)
        if not np.all(np.isfinite(sym)):
            raise ValueError("multiplier symbol must be finite at every frequency")
        sym = np.array(sym)
        sym.setflags(write=False)
        object.__setattr__(self, "symbol", sym)

    def __mul__(self, other: "Multiplier") -> "Multiplier":
        if other.grid is not self.grid:
            raise ValueError("cannot compose multipliers on different grids")
        return Multiplier(self.grid, self.symbol * other.symbol)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.symbol) or not np.any(self.symbol.imag)


def forward_transform(f: np.ndarray) -> np.ndarray:
    """Unnormalised 3-D DFT over the last three axes."""
    return sfft.fftn(f, axes=(-3, -2, -1))


def inverse_transform(f_hat: np.ndarray) -> np.ndarray:
    """Inverse 3-D DFT over the last three axes, carrying the ``1/n**3`` factor."""
    return sfft.ifftn(f_hat, axes=(-3, -2, -1))


def kinetic_symbol(grid: Grid3, m: float) -> Multiplier:
    """Symbol ``sqrt(|k|^2 + m^2)`` of the semi-relativistic kinetic operator."""
    if m < 0:
        raise ValueError("mass must be non-negative")
    return Multiplier(grid, np.sqrt(grid.k_squared + float(m) ** 2))


def frac_laplacian_symbol(grid: Grid3, s: float) -> Multiplier:
    """Symbol ``|k|^(2s)`` of ``(-Delta)^s``; the zero mode is 0 for s > 0 and 1 for s = 0."""
    if s < 0:
        raise ValueError("fractional order must be non-negative")
    if s == 0:
        return Multiplier(grid, np.ones(grid.shape))
    return Multiplier(grid, grid.k_squared**s)


def sobolev_symbol(grid: Grid3, s: float, homogeneous: bool = False) -> Multiplier:
    """``(1 + |k|^2)^s``, or ``|k|^(2s)`` when ``homogeneous``."""
    if homogeneous:
        return frac_laplacian_symbol(grid, s)
    if s < 0:
        raise ValueError("Sobolev order must be non-negative")
    return Multiplier(grid, (1.0 + grid.k_squared) ** s)


def apply_multiplier(f: np.ndarray, mult: Multiplier) -> np.ndarray:
    """Return ``F^{-1}[symbol * F[f]]``.

    ``f`` may carry leading batch axes; the multiplier acts on the last three.
    """
    if f.shape[-3:] != mult.grid.shape:
        raise ValueError(
            f"field shape {f.shape[-3:]} does not match grid shape {mult.grid.shape}"
        )
    return inverse_transform(mult.symbol * forward_transform(f))


def apply_real_multiplier(f: np.ndarray, mult: Multiplier) -> np.ndarray:
    """Real-to-real ``apply_multiplier`` for a real field and a real, even symbol.

    Uses the half-spectrum transform; the symbol's last axis is cut at n/2,
    which is only valid when ``symbol(k) == symbol(-k)``.
    """
    grid = mult.grid
    if f.shape[-3:] != grid.shape:
        raise ValueError(
            f"field shape {f.shape[-3:]} does not match grid shape {grid.shape}"
        )
    half = mult.symbol[..., : grid.n // 2 + 1]
    return sfft.irfftn(half * sfft.rfftn(f, axes=(-3, -2, -1)), s=grid.shape, axes=(-3, -2, -1))


def inner(grid: Grid3, f: np.ndarray, g: np.ndarray) -> complex:
    """Quadrature inner product ``h^3 * sum(conj(f) * g)``, antilinear in ``f``."""
    return complex(np.vdot(f, g) * grid.cell_volume)


def l2_norm_sq(grid: Grid3, f: np.ndarray) -> float:
    return float(np.vdot(f, f).real * grid.cell_volume)


def lp_norm(grid: Grid3, f: np.ndarray, p: float) -> float:
    """Riemann-sum L^p norm; ``p = inf`` is the grid maximum."""
    a = np.abs(f)
    if np.isinf(p):
        return float(a.max())
    return float((np.sum(a**p) * grid.cell_volume) ** (1.0 / p))
