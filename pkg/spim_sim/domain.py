"""Core model: instances, spin configurations, Mattis Hamiltonian, fidelity, adiabatic amplitudes."""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from spim_sim.errors import DimensionError, GeometryError, InvalidArgument, InvalidInstance, ScheduleError
from spim_sim.schemas import AdiabaticSchedule, NppInstance


def round_significant(x: float, digits: int) -> float:
    """Round a positive real to `digits` significant digits."""
    if x == 0 or not math.isfinite(x):
        return x
    return round(x, digits - 1 - math.floor(math.log10(abs(x))))


def normalize_instance(numbers: Iterable[float], precision_digits: int = 8) -> NppInstance:
    """Divide by the largest number, round zeta to precision_digits, alpha = arccos(zeta)."""
    values = [float(x) for x in numbers]
    if len(values) < 2:
        raise InvalidInstance(f"need at least 2 numbers, got {len(values)}")
    bad = [x for x in values if not (x > 0 and math.isfinite(x))]
    if bad:
        raise InvalidInstance(f"numbers must be positive and finite, got {bad[:3]}")
    if not 1 <= precision_digits <= 17:
        raise InvalidInstance(f"precision_digits must be in [1, 17], got {precision_digits}")

    top = max(values)
    zeta = [round_significant(x / top, precision_digits) for x in values]
    # The largest entry divides to exactly 1.0 and survives rounding.
    alpha = [math.acos(z) for z in zeta]
    if max(alpha) >= math.pi / 2:
        raise InvalidInstance(f"ratio {min(values) / top:.3g} of smallest to largest number is too small to encode")
    return NppInstance(numbers=values, zeta=zeta, alpha=alpha, precision_digits=precision_digits)


# --- Spin configurations ---


@dataclass
class SpinConfig:
    """Binary spins, either an S x S lattice or a flat vector for non-square instances."""

    spins: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.spins, dtype=np.int8)
        if arr.size == 0:
            raise DimensionError("a spin configuration needs at least one spin")
        if not np.all(np.abs(arr) == 1):
            raise InvalidArgument("every spin must be exactly -1 or +1")
        self.spins = arr

    @property
    def size(self) -> int:
        return int(self.spins.size)

    @property
    def side(self) -> int:
        s = math.isqrt(self.size)
        if s * s != self.size:
            raise GeometryError(f"{self.size} spins do not form a square lattice")
        return s

    @property
    def vector(self) -> np.ndarray:
        return self.spins.reshape(-1)

    def lattice(self) -> np.ndarray:
        return self.spins.reshape(self.side, self.side)

    def flipped(self) -> "SpinConfig":
        return SpinConfig(-self.spins)

    def copy(self) -> "SpinConfig":
        return SpinConfig(self.spins.copy())

    @classmethod
    def uniform(cls, n: int, value: int = 1) -> "SpinConfig":
        return cls(np.full(n, value, dtype=np.int8))

    @classmethod
    def checkerboard(cls, side: int) -> "SpinConfig":
        """+1 where (row + col) is even."""
        r, c = np.indices((side, side))
        return cls(np.where((r + c) % 2 == 0, 1, -1))

    @classmethod
    def balanced(cls, n: int, rng: np.random.Generator) -> "SpinConfig":
        """Random configuration with |sum| <= 1 (exactly balanced when n is even)."""
        spins = np.ones(n, dtype=np.int8)
        spins[: n // 2] = -1
        rng.shuffle(spins)
        return cls(spins)


Spins = Union[SpinConfig, np.ndarray, Sequence[int]]


def spin_vector(cfg: Spins) -> np.ndarray:
    if isinstance(cfg, SpinConfig):
        return cfg.vector
    return SpinConfig(np.asarray(cfg)).vector


def _checked(inst: NppInstance, cfg: Spins) -> tuple[np.ndarray, np.ndarray]:
    sigma = spin_vector(cfg)
    if sigma.size != inst.size:
        raise DimensionError(f"instance has {inst.size} numbers but configuration has {sigma.size} spins")
    return np.asarray(inst.zeta, dtype=np.float64), sigma.astype(np.float64)


# --- Hamiltonian & fidelity ---


def mattis_hamiltonian(inst: NppInstance, cfg: Spins) -> float:
    """H = sum_ij zeta_i zeta_j s_i s_j, evaluated as (sum_j zeta_j s_j)^2."""
    zeta, sigma = _checked(inst, cfg)
    s = math.fsum(zeta * sigma)
    return s * s


def mattis_hamiltonian_pairwise(inst: NppInstance, cfg: Spins) -> float:
    """Quadratic double-sum form of the Mattis Hamiltonian (reference for the O(n) path)."""
    zeta, sigma = _checked(inst, cfg)
    couplings = np.outer(zeta, zeta)
    return float(sigma @ couplings @ sigma)


def coupling_norm(inst: NppInstance) -> float:
    """sum_ij zeta_i zeta_j, the constant linking fidelity^2 to H."""
    total = math.fsum(inst.zeta)
    return total * total


def fidelity(inst: NppInstance, cfg: Spins) -> float:
    """eta = |sum zeta s| / sum zeta; 0 is a perfect partition."""
    zeta, sigma = _checked(inst, cfg)
    return abs(math.fsum(zeta * sigma)) / math.fsum(zeta)


def effective_amplitudes(inst: NppInstance, sched: AdiabaticSchedule, t: int) -> np.ndarray:
    """cos(t * alpha_j / K): all ones at t=0, exactly zeta at t=K."""
    k = sched.total_steps
    if not 0 <= t <= k:
        raise ScheduleError(f"step {t} outside [0, {k}]")
    if t == k:
        return np.asarray(inst.zeta, dtype=np.float64)
    return np.cos(t * np.asarray(inst.alpha, dtype=np.float64) / k)


def partition_sums(inst: NppInstance, cfg: Spins) -> tuple[float, float]:
    """Raw-number sums of the +1 subset and the -1 subset."""
    _, sigma = _checked(inst, cfg)
    numbers = np.asarray(inst.numbers, dtype=np.float64)
    return math.fsum(numbers[sigma > 0]), math.fsum(numbers[sigma < 0])


def partition_subsets(inst: NppInstance, cfg: Spins) -> tuple[list[float], list[float]]:
    _, sigma = _checked(inst, cfg)
    a = [x for x, s in zip(inst.numbers, sigma) if s > 0]
    b = [x for x, s in zip(inst.numbers, sigma) if s < 0]
    return a, b


class MattisField:
    """Running sum_j a_j s_j under spin flips, Neumaier-compensated.

    A flip of spin j changes the sum by exactly -2 s_j a_j.
    """

    def __init__(self, amplitudes: np.ndarray, spins: np.ndarray):
        self.amplitudes = np.asarray(amplitudes, dtype=np.float64)
        self.reset(spins)

    def reset(self, spins: np.ndarray) -> None:
        if len(spins) != self.amplitudes.size:
            raise DimensionError(f"{self.amplitudes.size} amplitudes but {len(spins)} spins")
        self._sum = math.fsum(self.amplitudes * spins)
        self._comp = 0.0

    @property
    def value(self) -> float:
        return self._sum + self._comp

    def delta(self, spins: np.ndarray, indices: Sequence[int]) -> float:
        """Change of the sum if `indices` were flipped (spins are the pre-flip values)."""
        return math.fsum(-2.0 * float(spins[i]) * float(self.amplitudes[i]) for i in indices)

    def flip(self, spins: np.ndarray, indices: Sequence[int]) -> None:
        for i in indices:
            self._add(-2.0 * float(spins[i]) * float(self.amplitudes[i]))

    def _add(self, x: float) -> None:
        t = self._sum + x
        if abs(self._sum) >= abs(x):
            self._comp += (self._sum - t) + x
        else:
            self._comp += (x - t) + self._sum
        self._sum = t


# --- Instance files ---


def parse_instance_text(text: str) -> list[float]:
    """JSON array of numbers, or one decimal number per line (blank lines and # comments ignored)."""
    stripped = text.strip()
    if not stripped:
        raise InvalidInstance("instance file is empty")
    if stripped.startswith("["):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise InvalidInstance(f"malformed JSON instance: {exc}") from exc
        if not isinstance(data, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in data):
            raise InvalidInstance("JSON instance must be an array of numbers")
        return [float(x) for x in data]

    values = []
    for lineno, line in enumerate(stripped.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError as exc:
            raise InvalidInstance(f"line {lineno}: not a number: {line!r}") from exc
    return values


def load_instance(path: Path, precision_digits: int = 8) -> NppInstance:
    return normalize_instance(parse_instance_text(Path(path).read_text(encoding="utf-8")), precision_digits)


def save_instance(path: Path, inst: NppInstance) -> None:
    """Writers always emit the JSON form."""
    Path(path).write_text(json.dumps(inst.numbers) + "\n", encoding="utf-8")
