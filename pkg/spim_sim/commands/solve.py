"""`solve`: adiabatic M-H on one instance (file or generator)."""

import json
import logging
import math
import time
from typing import Any

from spim_sim.camera import SimClock, devices_from_preset
from spim_sim.commands.artifacts import prepare_out, write_manifest
from spim_sim.config import resolve_noise
from spim_sim.domain import load_instance, partition_subsets, save_instance
from spim_sim.oracles import gen_instance
from spim_sim.performance import format_elapsed
from spim_sim.plots import line_chart
from spim_sim.schemas import AdiabaticSchedule, AnnealSchedule, MhParams, SolveConfig
from spim_sim.solvers import adiabatic_solve, objective_factory_for

logger = logging.getLogger(__name__)


def run(cfg: SolveConfig, noise_overrides: dict[str, Any]) -> int:
    started = time.perf_counter()
    if cfg.instance is not None:
        inst = load_instance(cfg.instance, cfg.digits)
    else:
        inst = gen_instance(cfg.n, cfg.digits, cfg.seed)

    if cfg.mode == "fast" and (cfg.spins is not None or cfg.pixels_per_spin is not None):
        logger.warning("spins and pixels_per_spin only apply to camera modes; ignored in fast mode")

    camera, noise = devices_from_preset(resolve_noise(cfg.noise, noise_overrides), seed=cfg.seed)
    factory = objective_factory_for(
        inst,
        "fast" if cfg.mode == "fast" else "camera",
        roi=cfg.roi,
        spins_per_side=cfg.spins,
        pixels_per_spin=cfg.pixels_per_spin,
        camera=camera,
        noise=noise,
    )
    sched = AdiabaticSchedule(total_steps=cfg.steps, settle_iterations=cfg.settle_iterations)
    anneal_sched = AnnealSchedule(beta_start=cfg.beta_start, beta_end=cfg.beta_end, total_iterations=cfg.iterations)
    params = MhParams(d=cfg.d, seed=cfg.seed)

    trace = adiabatic_solve(
        inst,
        sched,
        anneal_sched,
        params,
        make_objective=factory,
        clock=SimClock(realtime=cfg.mode == "realtime"),
        noise=noise,
    )

    out = prepare_out(cfg.out)
    outputs = ["trace.csv", "partition.json", "instance.json"]
    trace.to_csv(out / "trace.csv")
    save_instance(out / "instance.json", inst)

    subset_a, subset_b = partition_subsets(inst, trace.best_spins)
    residual = trace.best_fidelity * math.fsum(inst.numbers)
    partition = {
        "subset_a": subset_a,
        "subset_b": subset_b,
        "sum_a": math.fsum(subset_a),
        "sum_b": math.fsum(subset_b),
        "fidelity": trace.best_fidelity,
        "residual": residual,
        "spins": [int(s) for s in trace.best_spins],
    }
    (out / "partition.json").write_text(json.dumps(partition, indent=2) + "\n", encoding="utf-8")

    if cfg.svg and line_chart(
        out / "trace.svg",
        trace.iteration,
        {"fidelity": trace.fidelity},
        "iteration",
        "fidelity",
        logy=True,
    ):
        outputs.append("trace.svg")

    write_manifest(out, "solve", cfg, [cfg.seed], started, outputs, {"n_spins": inst.size})
    print(
        f"fidelity={trace.best_fidelity:.6e} residual={residual:.6e} "
        f"iterations={trace.iterations} simulated_time={format_elapsed(trace.total_sim_time_ms / 1000)}",
        flush=True,
    )
    return 0
