"""`checkerboard`: M-H or GA against the captured image of a checkerboard spin pattern."""

import json
import logging
import time
from typing import Any

from spim_sim.camera import SimClock, devices_from_preset
from spim_sim.commands.artifacts import prepare_out, write_manifest
from spim_sim.config import resolve_noise
from spim_sim.container import write_container, write_pgm
from spim_sim.plots import line_chart
from spim_sim.schemas import AnnealSchedule, CheckerboardConfig, GaParams, MhParams
from spim_sim.solvers import anneal, checkerboard_problem, ga_evolve, ga_generations_for_budget

logger = logging.getLogger(__name__)


def run(cfg: CheckerboardConfig, noise_overrides: dict[str, Any]) -> int:
    started = time.perf_counter()
    camera, noise = devices_from_preset(resolve_noise(cfg.noise, noise_overrides), seed=cfg.seed)
    clock = SimClock(realtime=cfg.mode == "realtime")
    objective = checkerboard_problem(
        seed=cfg.seed,
        spins_per_side=cfg.spins,
        pixels_per_spin=cfg.pixels_per_spin,
        camera=cfg.mode != "fast",
        noise=noise,
        camera_model=camera,
    )

    if cfg.algorithm == "mh":
        trace = anneal(
            objective,
            AnnealSchedule(total_iterations=cfg.iterations),
            MhParams(d=1, seed=cfg.seed, objective="full-image-cost"),
            clock=clock,
            noise=noise,
        )
    else:
        params = GaParams(population=cfg.population, mutation_rate=cfg.mutation_rate, seed=cfg.seed)
        trace = ga_evolve(objective, params, ga_generations_for_budget(cfg.iterations, params), clock=clock, noise=noise)

    out = prepare_out(cfg.out)
    outputs = ["trace.csv", "result.json", "target.pgm", "final.pgm", "target.spim", "final.spim"]
    trace.to_csv(out / "trace.csv")
    final_image = objective.current_image()
    write_pgm(out / "target.pgm", objective.target)
    write_pgm(out / "final.pgm", final_image)
    write_container(out / "target.spim", objective.target)
    write_container(out / "final.spim", final_image)

    ratio = trace.cost_ratio()
    result = {
        "algorithm": cfg.algorithm,
        "initial_cost": trace.objective[0],
        "final_cost": trace.objective[-1],
        "cost_ratio": ratio,
        "evaluations": trace.evaluations,
        "simulated_time_ms": trace.total_sim_time_ms,
    }
    (out / "result.json").write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")

    if cfg.svg and line_chart(
        out / "trace.svg",
        trace.iteration,
        {"cost": [v / trace.objective[0] if trace.objective[0] else 1.0 for v in trace.objective]},
        "objective evaluations",
        "cost / initial cost",
    ):
        outputs.append("trace.svg")

    write_manifest(out, "checkerboard", cfg, [cfg.seed], started, outputs)
    print(f"cost_ratio={ratio:.6f} initial_cost={trace.objective[0]:.6g} final_cost={trace.objective[-1]:.6g}", flush=True)
    return 0
