"""Run configuration: TOML tables per subcommand, command-line overrides, environment settings.

Precedence, lowest first: model defaults, `[common]`, the subcommand's table, command-line flags.
A top-level `[noise]` table overrides individual sigmas of the selected noise preset.
"""

import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ValidationError

from spim_sim.camera import noise_preset
from spim_sim.errors import InvalidArgument
from spim_sim.schemas import (
    BenchConfig,
    CheckerboardConfig,
    NoiseFloorConfig,
    NoisePreset,
    ScalingConfig,
    SolveConfig,
)

COMMAND_MODELS: dict[str, type[BaseModel]] = {
    "solve": SolveConfig,
    "checkerboard": CheckerboardConfig,
    "noise-floor": NoiseFloorConfig,
    "bench": BenchConfig,
    "scaling": ScalingConfig,
}

LOG_LEVEL_ENV = "SPIM_SIM_LOG_LEVEL"


def read_config_file(path: Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidArgument(f"{path}: {exc}") from exc


def merge_sources(command: str, file_data: dict[str, Any], flags: dict[str, Any]) -> dict[str, Any]:
    """Flags win over the subcommand table, which wins over [common]; unset flags are None."""
    model = COMMAND_MODELS[command]
    common = {k: v for k, v in file_data.get("common", {}).items() if k in model.model_fields}
    merged = {**common, **file_data.get(command, {})}
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


def load_run_config(
    command: str, config_path: Optional[Path], flags: dict[str, Any]
) -> tuple[BaseModel, dict[str, Any]]:
    """Validated config for `command` plus the [noise] override table."""
    file_data = read_config_file(config_path) if config_path is not None else {}
    cfg = COMMAND_MODELS[command].model_validate(merge_sources(command, file_data, flags))
    return cfg, dict(file_data.get("noise", {}))


def resolve_noise(name: str, overrides: dict[str, Any]) -> NoisePreset:
    return noise_preset(name, **overrides)


def validation_messages(exc: ValidationError) -> list[str]:
    """One `field.path: message` line per error."""
    lines = []
    for err in exc.errors():
        loc = ".".join(str(part) for part in err["loc"]) or "config"
        lines.append(f"{loc}: {err['msg']}")
    return lines


def log_level(default: str = "INFO") -> str:
    return os.environ.get(LOG_LEVEL_ENV, default).upper()
