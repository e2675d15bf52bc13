"""Run configuration: dataclasses with a lossless JSON round trip.

The schema mirrors the CLI surface:

    {
      "grid":    {"nx": 128, "ny": 129, "Lx": 50.0, "Ly": 50.0},
      "physics": {"kappa": 0.5, "alpha": 1.0, "wave_model": "nls", "hbar": 1.0},
      "run":     {"t_end": 30.0, "cfl": 0.4, "dt_override": null, "nu_hyper": 0.0},
      "noise":   {"seed": 7, "modes": [{"mx": 1, "my": 1, "amplitude": 0.1}],
                  "fallback_deterministic": false}   | null,
      "stages":  [{"kind": "spinup", "t_spin": 100.0},
                  {"kind": "coupled", "zero_fluid_pv": false}],
      "io":      {"out_dir": "out", "snapshot_interval": 10.0,
                  "diagnostics_interval": 0.5, "restart": null},
      "seed":    1234
    }

Stage kinds: "spinup" (wave-free flow from the prescribed initial data),
"coupled" (waves introduced onto the spun-up fluid), "nls_only" (uncoupled
wave run, Psi forced to zero).  Noise modes are the dirichlet_y stream
functions sin(2 pi mx x / Lx + phase) sin(pi my y / Ly).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .grid import BcClass, Field, GridSpec, from_function
from .stepping import NoiseMode, NoiseSpec
from .waves import WaveModel, WaveParams


class ConfigError(ValueError):
    """Unreadable or invalid configuration."""


@dataclass(frozen=True)
class GridConfig:
    nx: int = 128
    ny: int = 129
    Lx: float = 50.0
    Ly: float = 50.0

    def build(self) -> GridSpec:
        try:
            return GridSpec(self.nx, self.ny, self.Lx, self.Ly)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class PhysicsConfig:
    kappa: float = 0.5
    alpha: float = 1.0
    wave_model: str = "nls"
    hbar: float = 1.0

    def build(self) -> WaveParams:
        try:
            model = WaveModel(self.wave_model)
            return WaveParams(
                kappa=self.kappa, alpha=self.alpha, model=model, hbar=self.hbar
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class RunConfig:
    t_end: float = 30.0
    cfl: float = 0.4
    dt_override: float | None = None
    nu_hyper: float = 0.0

    def validate(self):
        if self.t_end < 0:
            raise ConfigError("t_end must be >= 0")
        if not (0 < self.cfl <= 1):
            raise ConfigError("cfl must lie in (0, 1]")
        if self.dt_override is not None and self.dt_override <= 0:
            raise ConfigError("dt_override must be positive")
        if self.nu_hyper < 0:
            raise ConfigError("nu_hyper must be >= 0")


@dataclass(frozen=True)
class NoiseModeConfig:
    mx: int
    my: int
    amplitude: float
    phase: float = 0.0

    def build(self, grid: GridSpec) -> NoiseMode:
        if self.my < 1:
            raise ConfigError("noise mode my must be >= 1 (dirichlet walls)")
        kx = 2.0 * np.pi * self.mx / grid.Lx
        ky = np.pi * self.my / grid.Ly
        xi = from_function(
            grid,
            BcClass.DIRICHLET_Y,
            lambda X, Y: np.sin(kx * X + self.phase) * np.sin(ky * Y),
        )
        # walls exactly zero regardless of round-off in sin(pi my)
        data = xi.data.copy()
        data[0] = 0.0
        data[-1] = 0.0
        xi = Field(grid, BcClass.DIRICHLET_Y, data)
        return NoiseMode(xi=xi, amplitude=self.amplitude)


@dataclass(frozen=True)
class NoiseConfig:
    seed: int = 0
    modes: tuple[NoiseModeConfig, ...] = ()
    fallback_deterministic: bool = False

    def build(self, grid: GridSpec) -> NoiseSpec:
        return NoiseSpec(
            modes=tuple(m.build(grid) for m in self.modes),
            seed=self.seed,
            fallback_deterministic=self.fallback_deterministic,
        )


VALID_STAGES = ("spinup", "coupled", "nls_only")


@dataclass(frozen=True)
class StageConfig:
    kind: str
    t_spin: float = 100.0  # spinup only
    zero_fluid_pv: bool = False  # coupled only

    def validate(self):
        if self.kind not in VALID_STAGES:
            raise ConfigError(f"unknown stage kind {self.kind!r}")
        if self.kind == "spinup" and self.t_spin < 0:
            raise ConfigError("t_spin must be >= 0")


@dataclass(frozen=True)
class IoConfig:
    out_dir: str = "out"
    snapshot_interval: float = 10.0
    diagnostics_interval: float = 0.5
    restart: str | None = None

    def validate(self):
        if self.snapshot_interval <= 0 or self.diagnostics_interval <= 0:
            raise ConfigError("output intervals must be positive")


@dataclass(frozen=True)
class SimConfig:
    grid: GridConfig = GridConfig()
    physics: PhysicsConfig = PhysicsConfig()
    run: RunConfig = RunConfig()
    noise: NoiseConfig | None = None
    stages: tuple[StageConfig, ...] = (StageConfig(kind="spinup"),)
    io: IoConfig = IoConfig()
    seed: int = 0

    def validate(self) -> "SimConfig":
        self.grid.build()
        self.physics.build()
        self.run.validate()
        self.io.validate()
        if not self.stages:
            raise ConfigError("at least one stage is required")
        for s in self.stages:
            s.validate()
        return self

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["stages"] = [dict(s) for s in d["stages"]]
        if d["noise"] is not None:
            d["noise"]["modes"] = [dict(m) for m in d["noise"]["modes"]]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "SimConfig":
        try:
            noise = d.get("noise")
            return SimConfig(
                grid=GridConfig(**d.get("grid", {})),
                physics=PhysicsConfig(**d.get("physics", {})),
                run=RunConfig(**d.get("run", {})),
                noise=(
                    None
                    if noise is None
                    else NoiseConfig(
                        seed=noise.get("seed", 0),
                        modes=tuple(
                            NoiseModeConfig(**m) for m in noise.get("modes", [])
                        ),
                        fallback_deterministic=noise.get(
                            "fallback_deterministic", False
                        ),
                    )
                ),
                stages=tuple(StageConfig(**s) for s in d.get("stages", [])),
                io=IoConfig(**d.get("io", {})),
                seed=d.get("seed", 0),
            ).validate()
        except TypeError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc

    @staticmethod
    def from_json(text: str) -> "SimConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config root must be a JSON object")
        return SimConfig.from_dict(d)

    @staticmethod
    def load(path) -> "SimConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return SimConfig.from_json(text)

    def with_overrides(self, overrides: dict[str, Any]) -> "SimConfig":
        """Apply dotted-key overrides, e.g. {"run.cfl": 0.2}."""
        d = self.to_dict()
        for key, value in overrides.items():
            parts = key.split(".")
            node = d
            for p in parts[:-1]:
                if not isinstance(node, dict) or p not in node:
                    raise ConfigError(f"unknown override key {key!r}")
                node = node[p]
            leaf = parts[-1]
            if not isinstance(node, dict) or leaf not in node:
                raise ConfigError(f"unknown override key {key!r}")
            node[leaf] = value
        return SimConfig.from_dict(d)


def parse_override(text: str) -> tuple[str, Any]:
    """Parse one 'dotted.key=value' item; values are JSON literals when possible."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value
