"""`scaling`: fidelity and time per iteration versus spin count."""

import time
from typing import Any

from spim_sim import bench
from spim_sim.commands.artifacts import prepare_out, write_manifest
from spim_sim.performance import worker_count
from spim_sim.plots import line_chart
from spim_sim.schemas import ScalingConfig


def run(cfg: ScalingConfig, noise_overrides: dict[str, Any]) -> int:
    started = time.perf_counter()
    bench.check_scaling_sizes(cfg.sizes)
    threads = worker_count(cfg.threads)
    rows = bench.fidelity_scaling(cfg, threads=threads, progress=True)

    out = prepare_out(cfg.out)
    outputs = ["scaling.csv"]
    bench.write_scaling(out / "scaling.csv", rows)
    if cfg.svg and line_chart(
        out / "scaling.svg",
        [r.size for r in rows],
        {"mean fidelity": [r.mean_fidelity for r in rows]},
        "spins",
        "mean best fidelity",
        logx=True,
        logy=True,
    ):
        outputs.append("scaling.svg")

    seeds = [cfg.base_seed + k for k in range(cfg.seeds_per_size)]
    write_manifest(out, "scaling", cfg, seeds, started, outputs, {"threads": threads})
    for r in rows:
        print(f"size={r.size} mean_fidelity={r.mean_fidelity:.3e} time_per_iteration_ms={r.time_per_iteration_ms:.4f}", flush=True)
    return 0
