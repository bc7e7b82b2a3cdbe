"""Pydantic models: problem instances, schedules, solver and device parameters, records, configs."""

import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

# --- Problem instance & schedules ---


class NppInstance(BaseModel):
    """Numbers to partition, their normalized amplitudes zeta and SLM phases alpha = arccos(zeta)."""

    model_config = ConfigDict(frozen=True)

    numbers: list[float]
    zeta: list[float]
    alpha: list[float]
    precision_digits: int = Field(8, ge=1, le=17)

    @model_validator(mode="after")
    def check_invariants(self) -> "NppInstance":
        n = len(self.numbers)
        if n < 2:
            raise ValueError("an instance needs at least two numbers")
        if len(self.zeta) != n or len(self.alpha) != n:
            raise ValueError("numbers, zeta and alpha must have equal length")
        if any(not x > 0 for x in self.numbers):
            raise ValueError("all numbers must be positive")
        if max(self.zeta) != 1.0:
            raise ValueError("max(zeta) must be exactly 1")
        for z, a in zip(self.zeta, self.alpha):
            if not 0 < z <= 1 or not 0 <= a < math.pi / 2:
                raise ValueError(f"zeta={z} / alpha={a} out of range")
            if abs(z - math.cos(a)) > 1e-12:
                raise ValueError(f"zeta={z} does not match cos(alpha={a})")
        return self

    @property
    def size(self) -> int:
        return len(self.numbers)


class AdiabaticSchedule(BaseModel):
    """Stepwise morph of effective amplitudes from all-ones (t=0) to zeta (t=K)."""

    total_steps: int = Field(64, ge=1)
    settle_iterations: Optional[int] = Field(None, ge=1)
    step_index: int = Field(0, ge=0)

    @model_validator(mode="after")
    def step_in_range(self) -> "AdiabaticSchedule":
        if self.step_index > self.total_steps:
            raise ValueError(f"step_index {self.step_index} exceeds total_steps {self.total_steps}")
        return self

    def settle_for(self, n_spins: int) -> int:
        """Iterations per stage: explicit value, else max(32, n/64)."""
        if self.settle_iterations is not None:
            return self.settle_iterations
        return max(32, n_spins // 64)


class AnnealSchedule(BaseModel):
    """Inverse-temperature trajectory. Omitted endpoints are calibrated from probe flips.

    beta_start accepts the median probe move with initial_acceptance; beta_end accepts the
    end_probe_quantile move with final_acceptance (small moves dominate near convergence).
    """

    beta_start: Optional[float] = Field(None, gt=0)
    beta_end: Optional[float] = Field(None, gt=0)
    shape: Literal["linear", "geometric"] = "geometric"
    total_iterations: int = Field(2000, ge=0)
    initial_acceptance: float = Field(0.5, gt=0, lt=1)
    final_acceptance: float = Field(0.01, gt=0, lt=1)
    end_probe_quantile: float = Field(0.1, gt=0, le=0.5)

    @model_validator(mode="after")
    def ordered(self) -> "AnnealSchedule":
        if self.beta_start is not None and self.beta_end is not None and self.beta_end < self.beta_start:
            raise ValueError("beta_end must be >= beta_start")
        if self.final_acceptance > self.initial_acceptance:
            raise ValueError("final_acceptance must not exceed initial_acceptance")
        return self


class MhParams(BaseModel):
    """Metropolis-Hastings proposal and objective settings."""

    d: Optional[int] = Field(None, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    objective: Literal["full-image-cost", "center-roi-intensity"] = "center-roi-intensity"

    def flips_for(self, n_spins: int) -> int:
        """Spins flipped per proposal: explicit d, else 1 up to 1024 spins and n/1024 above."""
        d = self.d if self.d is not None else max(1, n_spins // 1024)
        return min(d, n_spins)


class GaParams(BaseModel):
    """Genetic-algorithm baseline settings."""

    population: int = Field(16, ge=2)
    mutation_rate: float = Field(0.05, ge=0, le=1)
    elitism: int = Field(1, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def elite_fits(self) -> "GaParams":
        if self.elitism >= self.population:
            raise ValueError("elitism must be smaller than the population")
        return self


# --- Camera & device noise ---


class CameraModel(BaseModel):
    """Quantizing sensor with exposure gain and optional shot/read noise."""

    model_config = ConfigDict(frozen=True)

    bit_depth: int = Field(8, ge=1, le=16)
    exposure_gain: float = Field(1.0, gt=0)
    shot_noise: bool = False
    read_noise_sigma: float = Field(0.0, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)

    @property
    def full_scale(self) -> int:
        return 2**self.bit_depth - 1


class DeviceNoise(BaseModel):
    """Laser and SLM imperfections plus the frame-update timing model."""

    model_config = ConfigDict(frozen=True)

    laser_rin_sigma: float = Field(0.0, ge=0, allow_inf_nan=False)
    phase_flicker_sigma: float = Field(0.0, ge=0, allow_inf_nan=False)
    settle_ms: float = Field(150.0, ge=0, allow_inf_nan=False)
    refresh_ms: float = Field(120.0, ge=0, allow_inf_nan=False)

    @property
    def iteration_ms(self) -> float:
        return self.settle_ms + self.refresh_ms


class NoisePreset(BaseModel):
    """Named bundle of noise sigmas, as loaded from the run config."""

    model_config = ConfigDict(extra="forbid")

    name: str = "off"
    laser_rin_sigma: float = Field(0.0, ge=0)
    phase_flicker_sigma: float = Field(0.0, ge=0)
    read_noise_sigma: float = Field(0.0, ge=0)
    shot_noise: bool = False


# --- Benchmark records ---


class BenchRecord(BaseModel):
    """One (instance, solver) benchmark cell."""

    instance_id: str
    n_spins: int
    solver_name: str
    best_fidelity: Optional[float] = Field(None, ge=0, le=1)
    best_residual: Optional[float] = None
    iterations: int = 0
    simulated_time_ms: float = 0.0
    wall_time_ms: float = 0.0
    seed: int
    status: Literal["ok", "error", "skipped"] = "ok"
    message: str = ""


class ScalingRow(BaseModel):
    """Aggregated fidelity and timing for one problem size."""

    size: int
    mean_fidelity: float
    std: float
    mean_time: float
    time_per_iteration_ms: float


# --- Run configs (one per subcommand) ---

Mode = Literal["fast", "camera", "realtime"]


class SolveConfig(BaseModel):
    """`solve`: adiabatic M-H on one instance, from a file or the generator."""

    model_config = ConfigDict(extra="forbid")

    instance: Optional[Path] = None
    n: Optional[int] = Field(None, ge=2)
    digits: int = Field(8, ge=1, le=8)
    seed: int = Field(0, ge=0)
    mode: Mode = "fast"
    spins: Optional[int] = Field(None, ge=1)
    pixels_per_spin: Optional[int] = Field(None, ge=4)
    roi: int = Field(64, ge=1)
    steps: int = Field(64, ge=1)
    settle_iterations: Optional[int] = Field(None, ge=1)
    iterations: int = Field(2000, ge=0)
    d: Optional[int] = Field(None, ge=1)
    beta_start: Optional[float] = Field(None, gt=0)
    beta_end: Optional[float] = Field(None, gt=0)
    noise: str = "off"
    out: Path = Path("out/solve")
    svg: bool = False

    @model_validator(mode="after")
    def instance_source(self) -> "SolveConfig":
        if self.instance is None and self.n is None:
            raise ValueError("either instance (a file) or n (generator size) is required")
        return self


class CheckerboardConfig(BaseModel):
    """`checkerboard`: M-H or GA against a captured checkerboard target."""

    model_config = ConfigDict(extra="forbid")

    algorithm: Literal["mh", "ga"] = "mh"
    spins: int = Field(16, ge=2)
    pixels_per_spin: int = Field(16, ge=4)
    iterations: int = Field(1500, ge=0)
    population: int = Field(16, ge=2)
    mutation_rate: float = Field(0.05, ge=0, le=1)
    seed: int = Field(0, ge=0)
    mode: Mode = "camera"
    noise: str = "off"
    out: Path = Path("out/checkerboard")
    svg: bool = False


class NoiseFloorConfig(BaseModel):
    """`noise-floor`: mean cost between repeated captures of a fixed checkerboard."""

    model_config = ConfigDict(extra="forbid")

    frames: int = Field(10, ge=2)
    spins: int = Field(16, ge=2)
    pixels_per_spin: int = Field(16, ge=4)
    seed: int = Field(0, ge=0)
    noise: str = "paper-like"
    out: Path = Path("out/noise-floor")


class BenchConfig(BaseModel):
    """`bench`: suite of random instances x solvers."""

    model_config = ConfigDict(extra="forbid")

    sizes: list[int] = Field(default_factory=lambda: [16, 64, 256])
    seeds: int = Field(10, ge=1)
    base_seed: int = Field(0, ge=0)
    digits: int = Field(8, ge=1, le=8)
    solvers: list[Literal["spim", "karmarkar-karp", "exhaustive", "random-search"]] = Field(
        default_factory=lambda: ["spim", "karmarkar-karp", "exhaustive"]
    )
    mode: Mode = "fast"
    steps: int = Field(64, ge=1)
    iterations: int = Field(2000, ge=0)
    random_samples: int = Field(100_000, ge=1)
    threads: Optional[int] = Field(None, ge=1)
    out: Path = Path("out/bench")

    @model_validator(mode="after")
    def sizes_valid(self) -> "BenchConfig":
        if not self.sizes or any(n < 2 for n in self.sizes):
            raise ValueError("sizes must be a non-empty list of integers >= 2")
        return self


class ScalingConfig(BaseModel):
    """`scaling`: fidelity and per-iteration time versus spin count."""

    model_config = ConfigDict(extra="forbid")

    sizes: list[int] = Field(default_factory=lambda: [16, 64, 256, 1024, 4096])
    seeds_per_size: int = Field(5, ge=1)
    base_seed: int = Field(0, ge=0)
    steps: int = Field(64, ge=1)
    iterations: int = Field(2000, ge=0)
    threads: Optional[int] = Field(None, ge=1)
    out: Path = Path("out/scaling")
    svg: bool = False
