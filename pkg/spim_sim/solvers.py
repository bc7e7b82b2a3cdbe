"""Optimization engines: objectives, Metropolis-Hastings annealing, genetic algorithm, adiabatic driver.

Every engine talks to an `Objective`, which owns the current spins and the value of the configured
observable. The fast path is the analytic Mattis value; the optical path recomputes the readout
plane (optionally through the camera) and updates the SLM field incrementally on each flip.
"""

import csv
import logging
import math
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from spim_sim.camera import SimClock, calibrate_exposure, measure
from spim_sim.domain import MattisField, SpinConfig, effective_amplitudes
from spim_sim.errors import DimensionError, GeometryError, InitError
from spim_sim.optics import SlmGeometry, captured_target, cost, crop_center, default_pixels_per_spin, encode_frame
from spim_sim.schemas import (
    AdiabaticSchedule,
    AnnealSchedule,
    CameraModel,
    DeviceNoise,
    GaParams,
    MhParams,
    NppInstance,
)

logger = logging.getLogger(__name__)

TRACE_SCHEMA = "spim-sim trace schema v1"
TRACE_COLUMNS = ("iteration", "t_step", "beta", "objective", "fidelity", "accepted", "sim_time_ms")

# --- Objectives ---


class Objective(ABC):
    """Current spins plus the observable being minimized, with propose/commit/revert flips."""

    def __init__(self, spins: np.ndarray, zeta: Optional[Sequence[float]] = None):
        self.spins = np.array(spins, dtype=np.int8).reshape(-1)
        self.value = 0.0
        self.evaluations = 0
        self._pending: Optional[tuple[list[int], float]] = None
        self._tracker: Optional[MattisField] = None
        self._zeta_sum = 0.0
        if zeta is not None:
            zeta = np.asarray(zeta, dtype=np.float64)
            if zeta.size != self.spins.size:
                raise DimensionError(f"{zeta.size} amplitudes for {self.spins.size} spins")
            self._tracker = MattisField(zeta, self.spins)
            self._zeta_sum = math.fsum(zeta)

    @property
    def size(self) -> int:
        return int(self.spins.size)

    @abstractmethod
    def _propose_value(self, indices: list[int]) -> float: ...

    @abstractmethod
    def _apply(self, indices: list[int]) -> None:
        """Accept the pending flip of `indices`; `self.spins` still holds the pre-flip signs."""

    def _discard(self, indices: list[int]) -> None:
        """Undo whatever `_propose_value` changed."""

    @abstractmethod
    def evaluate(self, spins: np.ndarray) -> float:
        """Observable of an arbitrary configuration; leaves the current state untouched."""

    @abstractmethod
    def set_amplitudes(self, amplitudes: np.ndarray) -> None: ...

    def propose(self, indices: Sequence[int]) -> float:
        indices = [int(i) for i in indices]
        new = self._propose_value(indices)
        self.evaluations += 1
        self._pending = (indices, new)
        return new

    def commit(self) -> None:
        indices, new = self._pending
        if self._tracker is not None:
            self._tracker.flip(self.spins, indices)
        self._apply(indices)
        self.spins[indices] *= -1
        self.value = new
        self._pending = None

    def revert(self) -> None:
        indices, _ = self._pending
        self._discard(indices)
        self._pending = None

    def _rebuild(self) -> None:
        """Recompute cached state from `self.spins`."""

    def adopt(self, spins: np.ndarray, value: float) -> None:
        """Make `spins` current with an already measured observable."""
        self.spins = np.array(spins, dtype=np.int8).reshape(-1)
        if self._tracker is not None:
            self._tracker.reset(self.spins)
        self._rebuild()
        self.value = float(value)
        self._pending = None

    def fidelity(self) -> float:
        """Fidelity of the current spins against the true instance; NaN when there is none."""
        if self._tracker is None:
            return math.nan
        return abs(self._tracker.value) / self._zeta_sum

    def fidelity_of(self, spins: np.ndarray) -> float:
        if self._tracker is None:
            return math.nan
        return abs(math.fsum(self._tracker.amplitudes * spins)) / self._zeta_sum


class MattisObjective(Objective):
    """Analytic DC observable scale * (sum_j a_j s_j)^2 with O(d) incremental updates."""

    def __init__(
        self,
        amplitudes: np.ndarray,
        spins: np.ndarray,
        zeta: Optional[Sequence[float]] = None,
        scale: float = 1.0,
    ):
        super().__init__(spins, zeta)
        self.scale = scale
        self.set_amplitudes(amplitudes)

    def set_amplitudes(self, amplitudes: np.ndarray) -> None:
        self._field = MattisField(amplitudes, self.spins)
        self.value = self.scale * self._field.value**2

    def _propose_value(self, indices: list[int]) -> float:
        s = self._field.value + self._field.delta(self.spins, indices)
        return self.scale * s * s

    def _apply(self, indices: list[int]) -> None:
        self._field.flip(self.spins, indices)

    def commit(self) -> None:
        super().commit()
        self.value = self.scale * self._field.value**2

    def _rebuild(self) -> None:
        self._field.reset(self.spins)

    def evaluate(self, spins: np.ndarray) -> float:
        self.evaluations += 1
        s = math.fsum(self._field.amplitudes * np.asarray(spins, dtype=np.float64))
        return self.scale * s * s


ObjectiveKind = Literal["full-image-cost", "center-roi-intensity"]


class OpticalObjective(Objective):
    """Readout-plane observable of the composed SLM frame.

    A flip negates the spin's pixel block of e^{i theta} (s -> s + pi), so proposals never recompose
    the frame. With a camera, every measurement is a new capture with its own frame index.
    """

    def __init__(
        self,
        geometry: SlmGeometry,
        amplitudes: np.ndarray,
        spins: np.ndarray,
        *,
        kind: ObjectiveKind = "center-roi-intensity",
        roi: int = 64,
        target: Optional[np.ndarray] = None,
        camera: Optional[CameraModel] = None,
        noise: Optional[DeviceNoise] = None,
        zeta: Optional[Sequence[float]] = None,
        calibrate: bool = True,
        first_frame: int = 0,
        oversample: int = 1,
    ):
        super().__init__(spins, zeta)
        if self.size != geometry.n_spins:
            raise DimensionError(f"geometry holds {geometry.n_spins} spins, got {self.size}")
        self.geometry = geometry
        self.kind = kind
        self.roi = roi
        self.camera = camera
        self.noise = noise or DeviceNoise()
        self.oversample = oversample
        self.frame_index = first_frame
        self._blocks = [geometry.spin_block(i) for i in range(geometry.n_spins)]

        grid = geometry.frame_side * oversample
        if camera is not None or kind == "full-image-cost":
            self.window = geometry.sensor_window * oversample
        else:
            self.window = roi
        if kind == "center-roi-intensity" and not 1 <= roi <= min(self.window, grid):
            raise GeometryError(f"roi {roi} does not fit a sensor window of side {self.window}")
        if kind == "full-image-cost":
            if target is None:
                raise DimensionError("full-image cost needs a target image")
            target = np.asarray(getattr(target, "data", target), dtype=np.float64)
            if target.shape != (self.window, self.window):
                raise DimensionError(f"target {target.shape} does not match sensor window {self.window}")
        self.target = target

        self.amplitudes = np.asarray(amplitudes, dtype=np.float64)
        self._field_in = self._compose(self.spins, self.amplitudes)
        if camera is not None and calibrate:
            clean = measure(self._field_in, None, DeviceNoise(), 0, self.window, oversample)
            self.camera = calibrate_exposure(camera, clean)
        self.value = self._measure(self._field_in)

    def _compose(self, spins: np.ndarray, amplitudes: np.ndarray) -> np.ndarray:
        cfg = SpinConfig(np.asarray(spins).reshape(self.geometry.spins_per_side, -1))
        return encode_frame(cfg, amplitudes, self.geometry).field()

    def _measure(self, field_in: np.ndarray) -> float:
        image = measure(field_in, self.camera, self.noise, self.frame_index, self.window, self.oversample)
        self.frame_index += 1
        if self.kind == "full-image-cost":
            return cost(image, self.target)
        return float(np.sum(crop_center(np.asarray(image.data, dtype=np.float64), self.roi)))

    def _negate(self, indices: list[int]) -> None:
        for i in indices:
            rows, cols = self._blocks[i]
            self._field_in[rows, cols] *= -1

    def _propose_value(self, indices: list[int]) -> float:
        self._negate(indices)
        return self._measure(self._field_in)

    def _apply(self, indices: list[int]) -> None:
        pass

    def _discard(self, indices: list[int]) -> None:
        self._negate(indices)

    def evaluate(self, spins: np.ndarray) -> float:
        self.evaluations += 1
        return self._measure(self._compose(spins, self.amplitudes))

    def set_amplitudes(self, amplitudes: np.ndarray) -> None:
        self.amplitudes = np.asarray(amplitudes, dtype=np.float64)
        self._field_in = self._compose(self.spins, self.amplitudes)
        self.value = self._measure(self._field_in)

    def _rebuild(self) -> None:
        self._field_in = self._compose(self.spins, self.amplitudes)

    def current_image(self) -> np.ndarray:
        return measure(self._field_in, self.camera, self.noise, self.frame_index, self.window, self.oversample).data


ObjectiveFactory = Callable[[np.ndarray, np.ndarray], Objective]


def mattis_factory(inst: NppInstance, scale: float = 1.0) -> ObjectiveFactory:
    def make(amplitudes: np.ndarray, spins: np.ndarray) -> Objective:
        return MattisObjective(amplitudes, spins, zeta=inst.zeta, scale=scale)

    return make


def optical_factory(
    inst: NppInstance,
    geometry: SlmGeometry,
    roi: int = 64,
    camera: Optional[CameraModel] = None,
    noise: Optional[DeviceNoise] = None,
) -> ObjectiveFactory:
    if geometry.n_spins != inst.size:
        raise GeometryError(f"instance has {inst.size} numbers but the lattice holds {geometry.n_spins} spins")

    def make(amplitudes: np.ndarray, spins: np.ndarray) -> Objective:
        return OpticalObjective(
            geometry, amplitudes, spins, roi=roi, camera=camera, noise=noise, zeta=inst.zeta
        )

    return make


def lattice_geometry(n_spins: int, spins_per_side: Optional[int] = None, pixels_per_spin: Optional[int] = None) -> SlmGeometry:
    """Square S x S layout for an instance; M defaults to the largest fit within 512 active pixels."""
    side = math.isqrt(n_spins)
    if side * side != n_spins:
        raise GeometryError(f"{n_spins} spins do not form a square lattice")
    if spins_per_side is not None and spins_per_side != side:
        raise GeometryError(f"instance of {n_spins} numbers needs spins_per_side={side}, got {spins_per_side}")
    return SlmGeometry(side, pixels_per_spin or default_pixels_per_spin(side))


def objective_factory_for(
    inst: NppInstance,
    mode: str,
    *,
    roi: int = 64,
    spins_per_side: Optional[int] = None,
    pixels_per_spin: Optional[int] = None,
    camera: Optional[CameraModel] = None,
    noise: Optional[DeviceNoise] = None,
) -> ObjectiveFactory:
    """Analytic DC objective in fast mode, otherwise the camera-captured ROI intensity."""
    if mode == "fast":
        return mattis_factory(inst)
    geometry = lattice_geometry(inst.size, spins_per_side, pixels_per_spin)
    return optical_factory(inst, geometry, min(roi, geometry.sensor_window), camera or CameraModel(), noise)


def checkerboard_problem(
    seed: int = 0,
    spins_per_side: int = 16,
    pixels_per_spin: int = 16,
    camera: bool = True,
    noise: Optional[DeviceNoise] = None,
    bit_depth: int = 8,
    camera_model: Optional[CameraModel] = None,
) -> OpticalObjective:
    """Random start against the captured image of a checkerboard spin pattern (full-image cost).

    `camera_model` carries the sensor noise settings; its gain is recalibrated on the target.
    """
    geometry = SlmGeometry(spins_per_side, pixels_per_spin)
    noise = noise or DeviceNoise()
    ones = np.ones(geometry.n_spins)
    window = geometry.sensor_window
    target_field = encode_frame(SpinConfig.checkerboard(spins_per_side), ones, geometry).field()

    cam = None
    if camera:
        clean = measure(target_field, None, DeviceNoise(), 0, window)
        cam = calibrate_exposure(camera_model or CameraModel(bit_depth=bit_depth, seed=seed), clean)
    target = captured_target(measure(target_field, cam, noise, 0, window))

    rng = np.random.default_rng(seed)
    start = rng.choice(np.array([-1, 1], dtype=np.int8), geometry.n_spins)
    return OpticalObjective(
        geometry,
        ones,
        start,
        kind="full-image-cost",
        target=target.data,
        camera=cam,
        noise=noise,
        calibrate=False,
        first_frame=1,
    )


# --- Run trace ---


@dataclass
class RunTrace:
    """Per-iteration history plus the best configuration seen."""

    iteration: list[int] = field(default_factory=list)
    t_step: list[int] = field(default_factory=list)
    beta: list[float] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    fidelity: list[float] = field(default_factory=list)
    accepted: list[bool] = field(default_factory=list)
    sim_time_ms: list[float] = field(default_factory=list)

    best_spins: Optional[np.ndarray] = None
    best_objective: float = math.inf
    best_fidelity: float = math.nan
    wall_time_ms: float = 0.0
    evaluations: int = 0
    stage_jumps: list[tuple[int, float, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.iteration)

    def record(
        self,
        iteration: int,
        t_step: int,
        beta: float,
        objective: Objective,
        accepted: bool,
        sim_time_ms: float,
    ) -> None:
        eta = objective.fidelity()
        self.iteration.append(iteration)
        self.t_step.append(t_step)
        self.beta.append(beta)
        self.objective.append(objective.value)
        self.fidelity.append(eta)
        self.accepted.append(accepted)
        self.sim_time_ms.append(sim_time_ms)
        self._track_best(objective.spins, objective.value, eta)

    def _track_best(self, spins: np.ndarray, value: float, eta: float) -> None:
        if not math.isnan(eta):
            if math.isnan(self.best_fidelity) or eta < self.best_fidelity:
                self.best_fidelity = eta
                self.best_objective = value
                self.best_spins = spins.copy()
        elif value < self.best_objective:
            self.best_objective = value
            self.best_spins = spins.copy()

    @property
    def iterations(self) -> int:
        return self.iteration[-1] if self.iteration else 0

    @property
    def total_sim_time_ms(self) -> float:
        return self.sim_time_ms[-1] if self.sim_time_ms else 0.0

    def cost_ratio(self) -> float:
        """Final over initial objective (1.0 when nothing ran or the start was already zero)."""
        if not self.objective or self.objective[0] == 0:
            return 1.0
        return self.objective[-1] / self.objective[0]

    def accepted_count(self, start: int = 0) -> int:
        return sum(self.accepted[start:])

    def to_csv(self, path: Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            fh.write(f"# {TRACE_SCHEMA}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for row in zip(
                self.iteration,
                self.t_step,
                self.beta,
                self.objective,
                self.fidelity,
                self.accepted,
                self.sim_time_ms,
            ):
                writer.writerow([row[0], row[1], repr(row[2]), repr(row[3]), repr(row[4]), int(row[5]), repr(row[6])])


# --- Metropolis-Hastings ---


def metropolis_accept(delta: float, beta: float, rng: np.random.Generator) -> bool:
    """min(1, exp(-beta * delta)); non-positive moves are always taken."""
    if delta <= 0:
        return True
    return bool(rng.random() < math.exp(-beta * delta))


def mh_step(objective: Objective, indices: Sequence[int], beta: float, rng: np.random.Generator) -> tuple[bool, float]:
    """Flip `indices`, accept or restore; returns (accepted, delta)."""
    old = objective.value
    delta = objective.propose(indices) - old
    if metropolis_accept(delta, beta, rng):
        objective.commit()
        return True, delta
    objective.revert()
    return False, delta


class FlipProposer:
    """d distinct spins per proposal, drawn by sweeping a fresh random permutation."""

    def __init__(self, n: int, d: int, rng: np.random.Generator):
        self.n = n
        self.d = min(max(1, d), n)
        self.rng = rng
        self._order = rng.permutation(n)
        self._pos = 0

    def next(self) -> np.ndarray:
        if self._pos + self.d > self.n:
            self._order = self.rng.permutation(self.n)
            self._pos = 0
        picked = self._order[self._pos : self._pos + self.d]
        self._pos += self.d
        return picked


def beta_schedule(beta_start: float, beta_end: float, total: int, shape: str = "geometric") -> np.ndarray:
    if total <= 0:
        return np.empty(0)
    if total == 1:
        return np.array([beta_start])
    if shape == "linear":
        return np.linspace(beta_start, beta_end, total)
    return np.geomspace(beta_start, beta_end, total)


def calibrate_beta(
    objective: Objective,
    proposer: FlipProposer,
    sched: AnnealSchedule,
    probes: int = 64,
) -> tuple[float, float]:
    """Fill missing beta endpoints from the nonzero |dE| of random probe flips.

    The median probe is accepted with `initial_acceptance` at beta_start; the
    `end_probe_quantile` probe with `final_acceptance` at beta_end.
    """
    if sched.beta_start is not None and sched.beta_end is not None:
        return sched.beta_start, sched.beta_end

    deltas = []
    for _ in range(probes):
        old = objective.value
        new = objective.propose(proposer.next())
        objective.revert()
        if new != old:
            deltas.append(abs(new - old))
    if not deltas:
        logger.warning("beta calibration: no probe changed the objective; using beta=1")
        typical = small = None
    else:
        typical = float(np.median(deltas))
        small = float(np.quantile(deltas, sched.end_probe_quantile))
    logger.debug("beta calibration: %d/%d nonzero probes, median |dE|=%s, low |dE|=%s", len(deltas), probes, typical, small)

    start = sched.beta_start
    end = sched.beta_end
    if start is None:
        start = -math.log(sched.initial_acceptance) / typical if typical else 1.0
    if end is None:
        end = -math.log(sched.final_acceptance) / small if small else 1.0
    return start, max(start, end)


class MetropolisChain:
    """Serial M-H run over one objective; stages of an adiabatic run share one chain."""

    def __init__(
        self,
        objective: Objective,
        params: MhParams,
        betas: np.ndarray,
        rng: np.random.Generator,
        proposer: FlipProposer,
        clock: SimClock,
        noise: DeviceNoise,
        trace: RunTrace,
    ):
        self.objective = objective
        self.params = params
        self.betas = betas
        self.rng = rng
        self.proposer = proposer
        self.clock = clock
        self.noise = noise
        self.trace = trace
        self.iteration = 0

    def run(self, iterations: int, t_step: int = 0) -> int:
        accepted_total = 0
        for _ in range(iterations):
            beta = float(self.betas[min(self.iteration, len(self.betas) - 1)])
            accepted, _ = mh_step(self.objective, self.proposer.next(), beta, self.rng)
            accepted_total += accepted
            self.iteration += 1
            self.clock.tick(self.noise)
            self.trace.record(self.iteration, t_step, beta, self.objective, accepted, self.clock.elapsed_ms)
        return accepted_total


def _start_chain(
    objective: Objective,
    sched: AnnealSchedule,
    params: MhParams,
    total: int,
    clock: Optional[SimClock],
    noise: Optional[DeviceNoise],
) -> MetropolisChain:
    rng = np.random.default_rng(params.seed)
    proposer = FlipProposer(objective.size, params.flips_for(objective.size), rng)
    beta_start, beta_end = calibrate_beta(objective, proposer, sched)
    betas = beta_schedule(beta_start, beta_end, total, sched.shape)
    trace = RunTrace()
    clock = clock or SimClock()
    trace.record(0, 0, beta_start, objective, False, clock.elapsed_ms)
    return MetropolisChain(objective, params, betas, rng, proposer, clock, noise or DeviceNoise(), trace)


def anneal(
    objective: Objective,
    sched: AnnealSchedule,
    params: MhParams,
    clock: Optional[SimClock] = None,
    noise: Optional[DeviceNoise] = None,
) -> RunTrace:
    """total_iterations M-H steps with beta following the schedule; row 0 is the initial state."""
    started = time.perf_counter()
    chain = _start_chain(objective, sched, params, sched.total_iterations, clock, noise)
    accepted = chain.run(sched.total_iterations)
    trace = chain.trace
    trace.evaluations = objective.evaluations
    trace.wall_time_ms = (time.perf_counter() - started) * 1000
    logger.info(
        "anneal: %d iterations, %d accepted, objective %.6g -> %.6g",
        sched.total_iterations,
        accepted,
        trace.objective[0],
        trace.objective[-1],
    )
    return trace


# --- Genetic algorithm ---


def uniform_crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Each gene from either parent with probability 1/2."""
    return np.where(rng.random(a.size) < 0.5, a, b).astype(np.int8)


def mutate(genes: np.ndarray, rate: float, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Flip each gene with probability `rate`; returns (mutated copy, number of flips)."""
    flips = rng.random(genes.size) < rate
    out = genes.copy()
    out[flips] *= -1
    return out, int(flips.sum())


def select_parents(costs: np.ndarray, rng: np.random.Generator) -> tuple[int, int]:
    """Fitness-proportional draw with fitness c_max - c (uniform when all costs tie)."""
    weights = costs.max() - costs
    total = weights.sum()
    if not total > 0:
        picks = rng.integers(0, costs.size, 2)
    else:
        picks = rng.choice(costs.size, 2, p=weights / total)
    return int(picks[0]), int(picks[1])


def ga_generations_for_budget(evaluations: int, params: GaParams) -> int:
    """Generations whose total objective evaluations (initial population included) fit the budget."""
    per_generation = params.population - params.elitism
    return max(0, (evaluations - params.population) // per_generation)


def ga_evolve(
    objective: Objective,
    params: GaParams,
    generations: int,
    clock: Optional[SimClock] = None,
    noise: Optional[DeviceNoise] = None,
) -> RunTrace:
    """Evolve a population seeded with the objective's start; the trace holds best-of-generation.

    `iteration` counts objective evaluations so runs compare with M-H on equal budget.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(params.seed)
    clock = clock or SimClock()
    noise = noise or DeviceNoise()
    n = objective.size

    population = [objective.spins.copy()]
    population += [rng.choice(np.array([-1, 1], dtype=np.int8), n) for _ in range(params.population - 1)]

    def score(genes: np.ndarray) -> float:
        clock.tick(noise)
        return objective.evaluate(genes)

    costs = np.array([score(g) for g in population])
    trace = RunTrace()

    def record(generation: int) -> None:
        best = int(np.argmin(costs))
        objective.adopt(population[best], float(costs[best]))
        eta = objective.fidelity_of(population[best])
        trace.iteration.append(objective.evaluations)
        trace.t_step.append(generation)
        trace.beta.append(math.nan)
        trace.objective.append(float(costs[best]))
        trace.fidelity.append(eta)
        trace.accepted.append(True)
        trace.sim_time_ms.append(clock.elapsed_ms)
        trace._track_best(population[best], float(costs[best]), eta)

    record(0)
    for generation in range(1, generations + 1):
        order = np.argsort(costs, kind="stable")
        next_pop = [population[i].copy() for i in order[: params.elitism]]
        next_costs = [float(costs[i]) for i in order[: params.elitism]]
        while len(next_pop) < params.population:
            i, j = select_parents(costs, rng)
            child, _ = mutate(uniform_crossover(population[i], population[j], rng), params.mutation_rate, rng)
            next_pop.append(child)
            next_costs.append(score(child))
        population, costs = next_pop, np.array(next_costs)
        record(generation)

    trace.evaluations = objective.evaluations
    trace.wall_time_ms = (time.perf_counter() - started) * 1000
    logger.info("ga: %d generations, best objective %.6g", generations, trace.best_objective)
    return trace


# --- Adiabatic driver ---


def stage_plan(sched: AdiabaticSchedule, total_iterations: int, n_spins: int) -> list[int]:
    """Iterations per stage t = 0..K; the final stage absorbs the rest of the budget."""
    settle = sched.settle_for(n_spins)
    k = sched.total_steps
    return [settle] * k + [max(settle, total_iterations - k * settle)]


def adiabatic_solve(
    inst: NppInstance,
    sched: AdiabaticSchedule,
    anneal_sched: AnnealSchedule,
    params: MhParams,
    make_objective: Optional[ObjectiveFactory] = None,
    start: Optional[np.ndarray] = None,
    clock: Optional[SimClock] = None,
    noise: Optional[DeviceNoise] = None,
) -> RunTrace:
    """Morph amplitudes from all-ones to zeta over K stages while annealing; best over the whole trace."""
    started = time.perf_counter()
    n = inst.size
    if start is None:
        spins = SpinConfig.balanced(n, np.random.default_rng(params.seed)).vector
    else:
        spins = SpinConfig(np.asarray(start)).vector
        if spins.size != n:
            raise DimensionError(f"start has {spins.size} spins for an instance of {n}")
        if abs(int(spins.astype(np.int64).sum())) > 1:
            raise InitError("adiabatic start must be balanced (|sum of spins| <= 1)")

    make_objective = make_objective or mattis_factory(inst)
    objective = make_objective(effective_amplitudes(inst, sched, 0), spins.copy())
    plan = stage_plan(sched, anneal_sched.total_iterations, n)
    chain = _start_chain(objective, anneal_sched, params, sum(plan), clock, noise)
    trace = chain.trace

    logger.info("adiabatic solve: n=%d, K=%d, %d iterations", n, sched.total_steps, sum(plan))
    for t, iterations in enumerate(plan):
        if t > 0:
            before = objective.value
            objective.set_amplitudes(effective_amplitudes(inst, sched, t))
            trace.stage_jumps.append((t, before, objective.value))
        accepted = chain.run(iterations, t)
        logger.debug("stage %d: %d/%d accepted, fidelity %.3e", t, accepted, iterations, objective.fidelity())

    trace.evaluations = objective.evaluations
    trace.wall_time_ms = (time.perf_counter() - started) * 1000
    logger.info(
        "adiabatic solve done: best fidelity %.3e after %d iterations (%.1f s simulated)",
        trace.best_fidelity,
        trace.iterations,
        trace.total_sim_time_ms / 1000,
    )
    return trace
