"""Initial-data recipes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mixed_state import MixedState, modified_gram_schmidt, read_snapshot
from .spectral import Grid3

__all__ = ["InitialRecipe", "radial_taper", "radial_gaussian", "build_initial_state"]


def radial_taper(grid: Grid3, start: float | None = None, stop: float | None = None) -> np.ndarray:
    """Cosine roll-off from 1 at ``start`` (default L/4) to 0 at ``stop`` (default 3L/8)."""
    start = 0.25 * grid.box_length if start is None else start
    stop = 0.375 * grid.box_length if stop is None else stop
    s = np.clip((grid.r - start) / (stop - start), 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * s))


def radial_gaussian(grid: Grid3, sigma: float, taper: bool = True) -> np.ndarray:
    """``exp(-r^2 / (4 sigma^2))``: its modulus squared has standard deviation sigma per axis."""
    g = np.exp(-grid.r**2 / (4.0 * sigma * sigma)).astype(np.complex128)
    if taper:
        g *= radial_taper(grid)
    return g


@dataclass
class InitialRecipe:
    """How to build the initial mixed state.

    kind:
        ``"radial_gaussian_stack"`` (one tapered radial Gaussian per entry of
        ``widths``), ``"plane_wave_stack"`` (one plane wave per entry of
        ``wavevectors``, integer multiples of 2*pi/L) or ``"snapshot"``.
    amplitude:
        Overall amplitude c. Components stay orthonormal; c enters as the
        factor c**2 on every weight, which is the same density matrix as
        scaling every component by c.
    """

    kind: str = "radial_gaussian_stack"
    widths: list = field(default_factory=lambda: [1.0])
    wavevectors: list = field(default_factory=list)
    weights: list = field(default_factory=lambda: [1.0])
    amplitude: float = 1.0
    orthonormalize: bool = True
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("radial_gaussian_stack", "plane_wave_stack", "snapshot"):
            raise ValueError(f"unknown initial kind {self.kind!r}")
        if self.kind == "snapshot":
            if not self.path:
                raise ValueError("snapshot recipe needs a path")
            return
        count = len(self.widths) if self.kind == "radial_gaussian_stack" else len(self.wavevectors)
        if count < 1:
            raise ValueError("recipe needs at least one component")
        if len(self.weights) != count:
            raise ValueError(f"need {count} weights, got {len(self.weights)}")
        if any(not w > 0 for w in self.weights):
            raise ValueError("weights must be strictly positive")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if self.kind == "radial_gaussian_stack" and any(not s > 0 for s in self.widths):
            raise ValueError("widths must be positive")

    def with_amplitude(self, c: float) -> "InitialRecipe":
        d = dict(self.__dict__)
        d["amplitude"] = float(c)
        return InitialRecipe(**d)


def build_initial_state(grid: Grid3, recipe: InitialRecipe) -> MixedState:
    if recipe.kind == "snapshot":
        st = read_snapshot(recipe.path)
        if st.grid.n != grid.n or st.grid.box_length != grid.box_length:
            raise ValueError("snapshot grid does not match the configured grid")
        return MixedState(grid, st.components, st.weights)
    if recipe.kind == "radial_gaussian_stack":
        comps = np.stack([radial_gaussian(grid, s) for s in recipe.widths])
    else:
        x, y, z = grid.coords
        comps = []
        for kv in recipe.wavevectors:
            kx, ky, kz = (grid.dk * float(v) for v in kv)
            comps.append(np.exp(1j * (kx * x + ky * y + kz * z)) * np.ones(grid.shape))
        comps = np.stack(comps)
    if recipe.orthonormalize:
        comps = modified_gram_schmidt(grid, comps)
    weights = np.asarray(recipe.weights, dtype=float) * recipe.amplitude**2
    return MixedState(grid, comps, weights)
