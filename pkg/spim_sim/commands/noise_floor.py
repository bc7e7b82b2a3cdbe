"""`noise-floor`: repeated captures of a fixed checkerboard, plus the SLM settle response."""

import csv
import json
import time
from typing import Any

from spim_sim.camera import devices_from_preset, noise_floor, slm_response_curves
from spim_sim.commands.artifacts import prepare_out, write_manifest
from spim_sim.config import resolve_noise
from spim_sim.optics import SlmGeometry
from spim_sim.schemas import NoiseFloorConfig


def run(cfg: NoiseFloorConfig, noise_overrides: dict[str, Any]) -> int:
    started = time.perf_counter()
    preset = resolve_noise(cfg.noise, noise_overrides)
    camera, noise = devices_from_preset(preset, seed=cfg.seed)
    geometry = SlmGeometry(cfg.spins, cfg.pixels_per_spin)

    floor = noise_floor(camera, noise, cfg.frames, geometry)
    response = slm_response_curves(noise, seed=cfg.seed)

    out = prepare_out(cfg.out)
    result = {
        "noise_floor": floor,
        "frames": cfg.frames,
        "preset": preset.model_dump(),
        "slm_settle_time_ms": response.settle_time_ms,
    }
    (out / "noise_floor.json").write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
    with (out / "slm_response.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_ms", "cost", "energy"])
        for row in zip(response.times_ms, response.cost, response.energy):
            writer.writerow([repr(float(v)) for v in row])

    write_manifest(out, "noise-floor", cfg, [cfg.seed], started, ["noise_floor.json", "slm_response.csv"])
    print(f"noise_floor={floor!r}", flush=True)
    return 0
