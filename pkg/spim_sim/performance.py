"""Process snapshot (elapsed time, memory, threads) and worker-count defaults."""

import os
import threading
import time
from typing import Optional

import psutil

from spim_sim.errors import InvalidArgument

THREADS_ENV = "SPIM_SIM_THREADS"


def format_elapsed(seconds: float) -> str:
    h = int(seconds // 3600)
    m = int((seconds % 3600) // 60)
    s = seconds % 60
    return f"{h:02d}:{m:02d}:{s:06.3f}"


def snapshot(started: Optional[float] = None) -> dict:
    """Elapsed time since `started` (perf_counter), resident memory and live thread count."""
    elapsed = time.perf_counter() - started if started is not None else 0.0
    process = psutil.Process()
    mem_mb = process.memory_info().rss / (1024 * 1024)
    return {
        "time": format_elapsed(elapsed),
        "memory": f"{mem_mb:.2f} MB",
        "threads": threading.active_count(),
    }


def _env_threads() -> Optional[int]:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise InvalidArgument(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise InvalidArgument(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def default_threads() -> int:
    """SPIM_SIM_THREADS if set, else the physical core count (at least 1)."""
    return _env_threads() or max(1, psutil.cpu_count(logical=False) or 1)


def worker_count(requested: Optional[int] = None) -> int:
    """Requested workers capped by SPIM_SIM_THREADS; default_threads() when nothing is requested."""
    if requested is None:
        return default_threads()
    cap = _env_threads()
    return min(requested, cap) if cap else requested
