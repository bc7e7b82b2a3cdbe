"""Output directory and run manifest shared by every subcommand."""

import hashlib
import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from spim_sim import __version__
from spim_sim.performance import snapshot


def config_hash(cfg: BaseModel) -> str:
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def prepare_out(path: Path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(
    out: Path,
    command: str,
    cfg: BaseModel,
    seeds: list[int],
    started: float,
    outputs: list[str],
    extra: dict[str, Any] | None = None,
) -> Path:
    """manifest.json: everything needed to rerun the command, plus a process snapshot."""
    manifest = {
        "tool": "spim-sim",
        "version": __version__,
        "command": command,
        "config": cfg.model_dump(mode="json"),
        "config_sha256": config_hash(cfg),
        "seeds": seeds,
        "outputs": sorted(outputs),
        "performance": snapshot(started),
    }
    if extra:
        manifest.update(extra)
    path = Path(out) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path
