"""Finite-rank mixed states: K wavefunctions on a common grid with positive weights."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import Grid3, forward_transform, make_grid, sobolev_symbol

__all__ = [
    "MixedState",
    "density",
    "weighted_inner",
    "sobolev_norm",
    "gram_matrix",
    "modified_gram_schmidt",
    "write_snapshot",
    "read_snapshot",
    "SNAPSHOT_MAGIC",
]

SNAPSHOT_MAGIC = b"SPS1"


@dataclass(frozen=True, eq=False)
class MixedState:
    """The pair (components, weights).

    ``components`` has shape ``(K, n, n, n)``; ``weights`` holds the K
    positive occupation numbers, fixed for the lifetime of a run.
    """

    grid: Grid3
    components: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=np.complex128)
        if comps.ndim == 3:
            comps = comps[None]
        if comps.ndim != 4 or comps.shape[1:] != self.grid.shape:
            raise ValueError(
                f"components must have shape (K, {self.grid.n}, {self.grid.n}, {self.grid.n})"
            )
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64)).copy()
        if w.shape != (comps.shape[0],):
            raise ValueError("need exactly one weight per component")
        if comps.shape[0] < 1:
            raise ValueError("a mixed state needs at least one component")
        if not np.all(w > 0):
            raise ValueError("weights must be strictly positive")
        w.setflags(write=False)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @property
    def rank(self) -> int:
        return self.components.shape[0]

    @property
    def trace(self) -> float:
        return float(self.weights.sum())

    def with_components(self, components: np.ndarray) -> "MixedState":
        return MixedState(self.grid, components, self.weights)

    def masses(self) -> np.ndarray:
        """Per-component ``||psi_k||^2``."""
        c = self.components.reshape(self.rank, -1)
        return np.einsum("ij,ij->i", c.conj(), c).real * self.grid.cell_volume

    def total_mass(self) -> float:
        return float(self.weights @ self.masses())


def density(state: MixedState) -> np.ndarray:
    """``n(x) = sum_k lambda_k |psi_k(x)|^2``, accumulated in ascending k."""
    n = np.zeros(state.grid.shape)
    for lam, psi in zip(state.weights, state.components):
        n += lam * (psi.real**2 + psi.imag**2)
    return n


def weighted_inner(state_a: MixedState, state_b: MixedState) -> complex:
    """``sum_k lambda_k <phi_k, psi_k>`` with the quadrature inner product."""
    if state_a.rank != state_b.rank:
        raise ValueError("states have different rank")
    if not np.array_equal(state_a.weights, state_b.weights):
        raise ValueError("states carry different weights")
    if state_a.grid.shape != state_b.grid.shape:
        raise ValueError("states live on different grids")
    a = state_a.components.reshape(state_a.rank, -1)
    b = state_b.components.reshape(state_b.rank, -1)
    per = np.einsum("ij,ij->i", a.conj(), b)
    return complex(state_a.weights @ per * state_a.grid.cell_volume)


def _quadratic_form(state: MixedState, symbol: np.ndarray) -> float:
    """``sum_k lambda_k <psi_k, T psi_k>`` for a real multiplier ``T`` via Plancherel."""
    grid = state.grid
    total = 0.0
    for lam, psi in zip(state.weights, state.components):
        ph = forward_transform(psi)
        total += lam * float(np.sum(symbol * (ph.real**2 + ph.imag**2)))
    return total * grid.cell_volume / grid.n**3


def sobolev_norm(state: MixedState, s: float, homogeneous: bool = False) -> float:
    """Weighted H^s (or homogeneous H^s) norm of the state.

    Inhomogeneous: ``(sum_k lambda_k <psi_k, (1 - Delta)^s psi_k>)^(1/2)``;
    homogeneous: the same with ``(-Delta)^s``.
    """
    sym = sobolev_symbol(state.grid, s, homogeneous).symbol
    return float(np.sqrt(max(_quadratic_form(state, sym), 0.0)))


def gram_matrix(state: MixedState) -> np.ndarray:
    """``G[j, k] = <psi_j, psi_k>``."""
    c = state.components.reshape(state.rank, -1)
    return (c.conj() @ c.T) * state.grid.cell_volume


def modified_gram_schmidt(grid: Grid3, fields: np.ndarray) -> np.ndarray:
    """Orthonormalise the rows of ``fields`` (shape (K, n, n, n)) in order.

    Two passes of modified Gram-Schmidt; raises if the input is numerically
    rank deficient.
    """
    q = np.array(fields, dtype=np.complex128).reshape(len(fields), -1)
    dv = grid.cell_volume
    for _ in range(2):
        for j in range(len(q)):
            for i in range(j):
                q[j] -= (np.vdot(q[i], q[j]) * dv) * q[i]
            nrm = np.sqrt(np.vdot(q[j], q[j]).real * dv)
            if nrm < 1e-10:
                raise ValueError(f"component {j} is linearly dependent on earlier ones")
            q[j] /= nrm
    return q.reshape(np.shape(fields))


# Snapshot layout (little-endian): b"SPS1", n (uint32), L (float64), K (uint32),
# K weights (float64), then K blocks of n^3 interleaved (re, im) float64 in C order.
_HEADER = struct.Struct("<4sIdI")


def write_snapshot(path, state: MixedState) -> None:
    grid = state.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, grid.n, grid.box_length, state.rank))
        fh.write(state.weights.astype("<f8").tobytes())
        fh.write(state.components.astype("<c16").tobytes(order="C"))


def read_snapshot(path) -> MixedState:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("snapshot file truncated")
    magic, n, box, k = _HEADER.unpack_from(data, 0)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"not an SPS1 snapshot (magic {magic!r})")
    off = _HEADER.size
    weights = np.frombuffer(data, "<f8", count=k, offset=off)
    off += 8 * k
    expected = off + 16 * k * n**3
    if len(data) != expected:
        raise ValueError(f"snapshot size {len(data)} does not match header ({expected})")
    comps = np.frombuffer(data, "<c16", count=k * n**3, offset=off).reshape(k, n, n, n)
    return MixedState(make_grid(n, box), comps.astype(np.complex128), weights.copy())
