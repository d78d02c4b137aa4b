"""Run configuration: a YAML tree validated field by field.

Example::

    grid: {n: 64, L: 32.0}
    physics: {m: 1.0, epsilon: 0.05, alpha: 0.5, kernel_mode: truncated, R: null}
    time: {dt: 0.01, t_end: 8.0, record_stride: 10, snapshot_stride: 0}
    initial:
      kind: radial_gaussian_stack
      widths: [1.0]
      weights: [1.0]
      amplitude: 1.7
    thresholds: {blowup_ratio: 50.0, tail_threshold: 0.1}
    output: {directory: runs/arrest, formats: [csv, json]}

Every default is written out by ``dump_config`` so a saved config fully
describes a run.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .diagnostics import Thresholds
from .evolution import EvolutionParams
from .hartree import KernelMode
from .initial import InitialRecipe
from .spectral import make_grid

__all__ = [
    "ConfigError",
    "SimConfig",
    "load_config",
    "parse_config",
    "dump_config",
    "config_hash",
    "KernelLabConfig",
    "load_kernel_lab_config",
]


class ConfigError(ValueError):
    """Invalid configuration; ``fields`` lists the dotted paths at fault."""

    def __init__(self, message: str, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSection(_Section):
    n: int = 64
    L: float = 32.0

    @field_validator("n")
    @classmethod
    def _even(cls, v):
        if v < 8 or v % 2:
            raise ValueError("must be an even integer >= 8")
        return v

    @field_validator("L")
    @classmethod
    def _pos(cls, v):
        if not v > 0:
            raise ValueError("must be positive")
        return v


class PhysicsSection(_Section):
    m: float = Field(1.0, ge=0)
    epsilon: float = Field(0.0, ge=0)
    alpha: float = Field(0.5, ge=0.5)
    kernel_mode: Literal["truncated", "periodic"] = "truncated"
    R: Optional[float] = Field(None, gt=0)


class TimeSection(_Section):
    dt: float = Field(0.01, gt=0)
    t_end: float = Field(1.0, gt=0)
    record_stride: int = Field(10, ge=1)
    snapshot_stride: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _consistent(self):
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if self.snapshot_stride and self.snapshot_stride % self.record_stride:
            raise ValueError("snapshot_stride must be a multiple of record_stride")
        return self


class InitialSection(_Section):
    kind: Literal["radial_gaussian_stack", "plane_wave_stack", "snapshot"] = "radial_gaussian_stack"
    widths: list[float] = Field(default_factory=lambda: [1.0])
    wavevectors: list[list[int]] = Field(default_factory=list)
    weights: list[float] = Field(default_factory=lambda: [1.0])
    amplitude: float = Field(1.0, gt=0)
    orthonormalize: bool = True
    path: Optional[str] = None

    @field_validator("weights")
    @classmethod
    def _positive(cls, v):
        if any(not w > 0 for w in v):
            raise ValueError("weights must be strictly positive")
        return v

    @field_validator("widths")
    @classmethod
    def _widths(cls, v):
        if any(not s > 0 for s in v):
            raise ValueError("widths must be positive")
        return v

    @field_validator("wavevectors")
    @classmethod
    def _three(cls, v):
        if any(len(k) != 3 for k in v):
            raise ValueError("each wavevector needs three integer components")
        return v

    @model_validator(mode="after")
    def _counts(self):
        if self.kind == "snapshot":
            if not self.path:
                raise ValueError("snapshot initial data needs a path")
            return self
        count = len(self.widths) if self.kind == "radial_gaussian_stack" else len(self.wavevectors)
        if count < 1:
            raise ValueError("need at least one component")
        if len(self.weights) != count:
            raise ValueError(f"need {count} weights, got {len(self.weights)}")
        return self


class ThresholdSection(_Section):
    blowup_ratio: float = Field(50.0, gt=1)
    tail_threshold: float = Field(0.10, gt=0, lt=1)


class OutputSection(_Section):
    directory: str = "spsim-out"
    formats: list[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])


class SimConfig(_Section):
    grid: GridSection = Field(default_factory=GridSection)
    physics: PhysicsSection = Field(default_factory=PhysicsSection)
    time: TimeSection = Field(default_factory=TimeSection)
    initial: InitialSection = Field(default_factory=InitialSection)
    thresholds: ThresholdSection = Field(default_factory=ThresholdSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def _cross(self):
        if self.physics.kernel_mode == "truncated" and self.physics.R is not None:
            if self.physics.R > self.grid.L * 3**0.5 / 2:
                raise ValueError("physics.R exceeds the box half-diagonal")
        steps = self.time.t_end / self.time.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError("time.t_end must be a whole number of time steps")
        return self

    # -- conversions to the numerical layer -------------------------------

    def make_grid(self):
        return make_grid(self.grid.n, self.grid.L)

    def kernel_mode(self) -> KernelMode:
        if self.physics.kernel_mode == "periodic":
            return KernelMode.periodic()
        return KernelMode.truncated(self.physics.R)

    def evolution_params(self) -> EvolutionParams:
        return EvolutionParams(
            m=self.physics.m,
            epsilon=self.physics.epsilon,
            alpha=self.physics.alpha,
            dt=self.time.dt,
            t_end=self.time.t_end,
            kernel_mode=self.kernel_mode(),
        )

    def recipe(self) -> InitialRecipe:
        return InitialRecipe(**self.initial.model_dump())

    def monitor_thresholds(self) -> Thresholds:
        return Thresholds(self.thresholds.blowup_ratio, self.thresholds.tail_threshold)

    def updated(self, **sections) -> "SimConfig":
        """Copy with some fields replaced, e.g. ``updated(physics={"epsilon": 0.1})``."""
        data = self.to_dict()
        for name, values in sections.items():
            data[name].update(values)
        return parse_config(data)

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")


def _format_errors(err: ValidationError) -> ConfigError:
    lines, fields = [], []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        msg = e["msg"].removeprefix("Value error, ")
        if e["type"] == "extra_forbidden":
            msg = "unknown key"
        fields.append(path)
        lines.append(f"{path}: {msg}")
    return ConfigError("invalid configuration\n  " + "\n  ".join(lines), fields)


def parse_config(data) -> SimConfig:
    """Validate a mapping; raises :class:`ConfigError` naming every bad field."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    try:
        return SimConfig.model_validate(data)
    except ValidationError as exc:
        raise _format_errors(exc) from None


def load_config(path) -> SimConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    return parse_config(data)


def dump_config(config: SimConfig, path=None) -> str:
    """YAML text with every field explicit; written to ``path`` when given."""
    text = yaml.safe_dump(config.to_dict(), sort_keys=False, default_flow_style=None)
    if path is not None:
        Path(path).write_text(text)
    return text


def config_hash(config: SimConfig) -> str:
    """SHA-256 of the canonical JSON form of the validated config."""
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# kernel-lab probe files


class DecayProbeEntry(_Section):
    alpha: float = Field(gt=0)
    nu: float = Field(0.0, ge=0)
    p: float = Field(ge=1)
    r: float = Field(ge=1)
    test_function: Literal["auto", "delta", "critical", "operator_norm", "gaussian"] = "auto"


class DuhamelEntry(_Section):
    alpha: float = Field(gt=0)
    nu: float = Field(0.0, ge=0)
    b: float = Field(gt=0)
    r: float = Field(gt=1)
    p: float = Field(gt=1)
    check_hypotheses: bool = True


class KernelLabConfig(_Section):
    """Probe file for the ``kernel-lab`` command.

    ``probes: null`` (the default) selects the standard decay matrix; an
    empty list skips the decay probes.
    """

    grid: GridSection = Field(default_factory=lambda: GridSection(n=128, L=128.0))
    tolerance: float = Field(0.05, gt=0)
    zero_tolerance: float = Field(0.02, gt=0)
    duhamel_tolerance: float = Field(0.10, gt=0)
    probes: Optional[list[DecayProbeEntry]] = None
    duhamel: list[DuhamelEntry] = Field(default_factory=list)
    output: str = "kernel-lab-out"


def load_kernel_lab_config(path) -> KernelLabConfig:
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    try:
        return KernelLabConfig.model_validate(data)
    except ValidationError as exc:
        raise _format_errors(exc) from None
