"""Pseudo-spectral simulator for the dissipative semi-relativistic Hartree system."""

__version__ = "0.1.0"

from .spectral import Grid3, Multiplier, make_grid  # noqa: E402
from .mixed_state import MixedState, density, read_snapshot, write_snapshot  # noqa: E402
from .hartree import KernelMode, solve_potential  # noqa: E402
from .initial import InitialRecipe, build_initial_state  # noqa: E402
from .evolution import EvolutionParams, evolve  # noqa: E402
from .config import SimConfig, load_config  # noqa: E402

__all__ = [
    "__version__",
    "Grid3",
    "Multiplier",
    "make_grid",
    "MixedState",
    "density",
    "read_snapshot",
    "write_snapshot",
    "KernelMode",
    "solve_potential",
    "InitialRecipe",
    "build_initial_state",
    "EvolutionParams",
    "evolve",
    "SimConfig",
    "load_config",
]
