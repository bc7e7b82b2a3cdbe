"""Subcommands."""

from . import bench, checkerboard, noise_floor, scaling, solve

COMMANDS = {
    "solve": solve.run,
    "checkerboard": checkerboard.run,
    "noise-floor": noise_floor.run,
    "bench": bench.run,
    "scaling": scaling.run,
}

__all__ = ["COMMANDS", "bench", "checkerboard", "noise_floor", "scaling", "solve"]
