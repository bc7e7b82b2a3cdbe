"""`bench`: random instances x solvers, with literature reference rows alongside."""

import logging
import time
from typing import Any

from spim_sim import bench
from spim_sim.commands.artifacts import prepare_out, write_manifest
from spim_sim.performance import worker_count
from spim_sim.schemas import BenchConfig

logger = logging.getLogger(__name__)


def run(cfg: BenchConfig, noise_overrides: dict[str, Any]) -> int:
    started = time.perf_counter()
    threads = worker_count(cfg.threads)
    records = bench.run_benchmark(cfg, threads=threads, progress=True)

    out = prepare_out(cfg.out)
    bench.write_records(out / "records.csv", records)
    bench.write_timings(out / "timings.csv", records)
    bench.write_reference(out / "reference_table.json")
    seeds = [cfg.base_seed + k for k in range(cfg.seeds)]
    write_manifest(
        out,
        "bench",
        cfg,
        seeds,
        started,
        ["records.csv", "timings.csv", "reference_table.json"],
        {"threads": threads},
    )

    for (n, solver), median in bench.summarize(records).items():
        print(f"n={n} solver={solver} median_fidelity={median:.3e}", flush=True)
    failed = [r for r in records if r.status == "error"]
    if failed:
        logger.warning("%d of %d benchmark cells failed; see records.csv", len(failed), len(records))
        return 1
    return 0
