"""Benchmark harness: random instances x solvers, the fidelity-vs-size study, literature reference rows."""

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from tqdm import tqdm

from spim_sim.errors import GeometryError, SpimError
from spim_sim.oracles import EXHAUSTIVE_LIMIT, exhaustive_best, gen_instance, karmarkar_karp, random_search_best
from spim_sim.schemas import (
    AdiabaticSchedule,
    AnnealSchedule,
    BenchConfig,
    BenchRecord,
    MhParams,
    ScalingConfig,
    ScalingRow,
)
from spim_sim.solvers import adiabatic_solve, objective_factory_for

logger = logging.getLogger(__name__)

RECORD_COLUMNS = (
    "instance_id",
    "n_spins",
    "solver_name",
    "best_fidelity",
    "best_residual",
    "iterations",
    "simulated_time_ms",
    "seed",
    "status",
    "message",
)
TIMING_COLUMNS = ("instance_id", "solver_name", "wall_time_ms")
SCALING_COLUMNS = ("size", "mean_fidelity", "std", "mean_time", "time_per_iteration_ms")


@dataclass(frozen=True)
class BenchCell:
    """One (instance, solver) unit of work; picklable so it can cross process boundaries."""

    n: int
    seed: int
    solver: str
    digits: int = 8
    mode: str = "fast"
    steps: int = 64
    iterations: int = 2000
    random_samples: int = 100_000

    @property
    def instance_id(self) -> str:
        return f"n{self.n}-s{self.seed}"


def run_cell(cell: BenchCell) -> BenchRecord:
    """Run one cell; failures become error records instead of propagating."""
    started = time.perf_counter()
    base = {"instance_id": cell.instance_id, "n_spins": cell.n, "solver_name": cell.solver, "seed": cell.seed}
    try:
        inst = gen_instance(cell.n, cell.digits, cell.seed)
        iterations, sim_ms = 0, 0.0
        if cell.solver == "spim":
            trace = adiabatic_solve(
                inst,
                AdiabaticSchedule(total_steps=cell.steps),
                AnnealSchedule(total_iterations=cell.iterations),
                MhParams(seed=cell.seed),
                make_objective=objective_factory_for(inst, cell.mode),
            )
            eta, iterations, sim_ms = trace.best_fidelity, trace.iterations, trace.total_sim_time_ms
        elif cell.solver == "karmarkar-karp":
            _, eta = karmarkar_karp(inst)
        elif cell.solver == "exhaustive":
            if cell.n > EXHAUSTIVE_LIMIT:
                return BenchRecord(**base, status="skipped", message=f"n > {EXHAUSTIVE_LIMIT}")
            _, eta = exhaustive_best(inst)
        elif cell.solver == "random-search":
            _, eta = random_search_best(inst, cell.random_samples, seed=cell.seed)
            iterations = cell.random_samples
        else:
            raise SpimError(f"unknown solver {cell.solver!r}")
        return BenchRecord(
            **base,
            best_fidelity=eta,
            best_residual=eta * math.fsum(inst.numbers),
            iterations=iterations,
            simulated_time_ms=sim_ms,
            wall_time_ms=(time.perf_counter() - started) * 1000,
        )
    except SpimError as exc:
        logger.warning("cell %s/%s failed: %s", cell.instance_id, cell.solver, exc)
        message = str(exc)
    except Exception as exc:
        logger.warning("cell %s/%s crashed", cell.instance_id, cell.solver, exc_info=True)
        message = f"{type(exc).__name__}: {exc}"
    return BenchRecord(**base, status="error", message=message, wall_time_ms=(time.perf_counter() - started) * 1000)


def execute(cells: list[BenchCell], threads: int = 1, progress: bool = False, desc: str = "cells") -> list[BenchRecord]:
    """Run cells, in-process for one worker or on a process pool; results keep cell order."""
    bar = tqdm(total=len(cells), desc=desc, disable=not progress, leave=False)
    records = []
    if threads <= 1 or len(cells) <= 1:
        for cell in cells:
            records.append(run_cell(cell))
            bar.update()
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for record in pool.map(run_cell, cells):
                records.append(record)
                bar.update()
    bar.close()
    return records


def benchmark_cells(cfg: BenchConfig) -> list[BenchCell]:
    return [
        BenchCell(
            n=n,
            seed=cfg.base_seed + k,
            solver=solver,
            digits=cfg.digits,
            mode=cfg.mode,
            steps=cfg.steps,
            iterations=cfg.iterations,
            random_samples=cfg.random_samples,
        )
        for n in cfg.sizes
        for k in range(cfg.seeds)
        for solver in cfg.solvers
    ]


def run_benchmark(cfg: BenchConfig, threads: int = 1, progress: bool = False) -> list[BenchRecord]:
    cells = benchmark_cells(cfg)
    logger.info("benchmark: %d cells on %d worker(s)", len(cells), threads)
    records = execute(cells, threads, progress, desc="bench")
    failed = sum(r.status == "error" for r in records)
    logger.info("benchmark done: %d ok, %d failed", len(records) - failed, failed)
    return records


# --- Scaling study ---


def check_scaling_sizes(sizes: Iterable[int]) -> None:
    for n in sizes:
        side = math.isqrt(n)
        if side * side != n or n < 16:
            raise GeometryError(f"scaling sizes must be perfect squares >= 16, got {n}")


def fidelity_scaling(cfg: ScalingConfig, threads: int = 1, progress: bool = False) -> list[ScalingRow]:
    """Mean best fidelity and runtime per size over seeds_per_size fast-mode adiabatic runs."""
    check_scaling_sizes(cfg.sizes)
    cells = [
        BenchCell(n=n, seed=cfg.base_seed + k, solver="spim", steps=cfg.steps, iterations=cfg.iterations)
        for n in cfg.sizes
        for k in range(cfg.seeds_per_size)
    ]
    records = execute(cells, threads, progress, desc="scaling")
    rows = []
    for n in cfg.sizes:
        group = [r for r in records if r.n_spins == n and r.status == "ok"]
        if not group:
            raise SpimError(f"every scaling run at size {n} failed")
        fids = np.array([r.best_fidelity for r in group])
        walls = np.array([r.wall_time_ms for r in group])
        per_iter = np.array([r.wall_time_ms / max(1, r.iterations) for r in group])
        rows.append(
            ScalingRow(
                size=n,
                mean_fidelity=float(fids.mean()),
                std=float(fids.std()),
                mean_time=float(walls.mean()),
                time_per_iteration_ms=float(per_iter.mean()),
            )
        )
        logger.info("scaling n=%d: mean fidelity %.3e", n, rows[-1].mean_fidelity)
    return rows


def power_law_exponent(sizes: Iterable[float], values: Iterable[float]) -> float:
    """Slope of the least-squares line through (log size, log value)."""
    slope, _ = np.polyfit(np.log(list(sizes)), np.log(list(values)), 1)
    return float(slope)


def count_inversions(values: list[float]) -> int:
    """Adjacent increases in a sequence expected to be non-increasing."""
    return sum(b > a for a, b in zip(values, values[1:]))


# --- Output ---


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_rows(path: Path, columns: Iterable[str], rows: Iterable[dict]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])


def write_records(path: Path, records: list[BenchRecord]) -> None:
    """Seed-determined columns only, so reruns are byte-identical."""
    _write_rows(path, RECORD_COLUMNS, (r.model_dump() for r in records))


def write_timings(path: Path, records: list[BenchRecord]) -> None:
    _write_rows(path, TIMING_COLUMNS, (r.model_dump() for r in records))


def write_scaling(path: Path, rows: list[ScalingRow]) -> None:
    _write_rows(path, SCALING_COLUMNS, (r.model_dump() for r in rows))


def reference_table() -> dict:
    """Literature values shipped with the package; never measured by this simulator."""
    return json.loads(resources.files("spim_sim").joinpath("reference.json").read_text(encoding="utf-8"))


def write_reference(path: Path) -> None:
    Path(path).write_text(json.dumps(reference_table(), indent=2) + "\n", encoding="utf-8")


def summarize(records: list[BenchRecord]) -> dict[tuple[int, str], Optional[float]]:
    """Median best fidelity per (size, solver) over ok records."""
    groups: dict[tuple[int, str], list[float]] = {}
    for r in records:
        if r.status == "ok" and r.best_fidelity is not None:
            groups.setdefault((r.n_spins, r.solver_name), []).append(r.best_fidelity)
    return {key: float(np.median(vals)) for key, vals in sorted(groups.items())}
