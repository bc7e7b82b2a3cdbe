"""Instance generation and reference solvers: exhaustive, meet-in-the-middle, Karmarkar-Karp, random search."""

import heapq
import math

import numpy as np

from spim_sim.domain import SpinConfig, fidelity, normalize_instance, round_significant
from spim_sim.errors import InvalidArgument, TooLarge
from spim_sim.schemas import NppInstance

EXHAUSTIVE_LIMIT = 24
MITM_LIMIT = 40


def gen_instance(n: int, digits: int = 8, seed: int = 0) -> NppInstance:
    """n uniform reals in (0, 1], rounded to `digits` significant digits, then normalized."""
    if n < 2:
        raise InvalidArgument(f"n must be >= 2, got {n}")
    if not 1 <= digits <= 8:
        raise InvalidArgument(f"digits must be in [1, 8], got {digits}")
    if seed < 0:
        raise InvalidArgument(f"seed must be non-negative, got {seed}")
    rng = np.random.default_rng(seed)
    raw = 1.0 - rng.random(n)
    numbers = [round_significant(float(x), digits) for x in raw]
    return normalize_instance(numbers, precision_digits=digits)


def _zeta(inst: NppInstance) -> np.ndarray:
    return np.asarray(inst.zeta, dtype=np.float64)


def _signed_sums(values: np.ndarray) -> np.ndarray:
    """sum_j s_j v_j for all 2^k sign patterns; bit j of the pattern index set means s_j = -1."""
    sums = np.zeros(1)
    for v in values:
        sums = np.concatenate([sums + v, sums - v])
    return sums


def _decode(index: int, k: int) -> np.ndarray:
    return np.array([-1 if (index >> j) & 1 else 1 for j in range(k)], dtype=np.int8)


def exhaustive_best(inst: NppInstance) -> tuple[SpinConfig, float]:
    """Global minimum fidelity by enumeration, spin 0 fixed to +1."""
    n = inst.size
    if n > EXHAUSTIVE_LIMIT:
        raise TooLarge(f"exhaustive search is capped at {EXHAUSTIVE_LIMIT} numbers, got {n}")
    zeta = _zeta(inst)
    sums = zeta[0] + _signed_sums(zeta[1:])
    best = int(np.argmin(np.abs(sums)))
    spins = np.concatenate([[1], _decode(best, n - 1)]).astype(np.int8)
    cfg = SpinConfig(spins)
    return cfg, fidelity(inst, cfg)


def meet_in_the_middle_best(inst: NppInstance) -> tuple[SpinConfig, float]:
    """Exact minimum via sorted half-sums; an independent oracle for exhaustive_best."""
    n = inst.size
    if n > MITM_LIMIT:
        raise TooLarge(f"meet-in-the-middle is capped at {MITM_LIMIT} numbers, got {n}")
    zeta = _zeta(inst)
    half = n // 2
    left = zeta[0] + _signed_sums(zeta[1:half])
    right = _signed_sums(zeta[half:])
    order = np.argsort(right, kind="stable")
    right_sorted = right[order]

    # for each left sum L pick R closest to -L
    pos = np.searchsorted(right_sorted, -left)
    best_val, best_pair = math.inf, (0, 0)
    for offset in (-1, 0):
        cand = np.clip(pos + offset, 0, right_sorted.size - 1)
        vals = np.abs(left + right_sorted[cand])
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_pair = float(vals[i]), (i, int(order[cand[i]]))

    li, ri = best_pair
    spins = np.concatenate([[1], _decode(li, half - 1), _decode(ri, n - half)]).astype(np.int8)
    cfg = SpinConfig(spins)
    return cfg, fidelity(inst, cfg)


def karmarkar_karp(inst: NppInstance) -> tuple[SpinConfig, float]:
    """Largest differencing method; signs rebuilt by two-coloring the difference tree."""
    n = inst.size
    heap = [(-z, j) for j, z in enumerate(inst.zeta)]
    heapq.heapify(heap)
    # an edge (a, b) means a and b end up on opposite sides
    edges: list[list[int]] = [[] for _ in range(n)]
    while len(heap) > 1:
        a_val, a = heapq.heappop(heap)
        b_val, b = heapq.heappop(heap)
        edges[a].append(b)
        edges[b].append(a)
        heapq.heappush(heap, (a_val - b_val, a))

    spins = np.zeros(n, dtype=np.int8)
    spins[0] = 1
    stack = [0]
    while stack:
        node = stack.pop()
        for other in edges[node]:
            if spins[other] == 0:
                spins[other] = -spins[node]
                stack.append(other)
    cfg = SpinConfig(spins)
    return cfg, fidelity(inst, cfg)


def random_search_best(inst: NppInstance, samples: int, seed: int = 0, chunk: int = 65536) -> tuple[SpinConfig, float]:
    """Best of `samples` uniformly random configurations."""
    if samples < 1:
        raise InvalidArgument(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    zeta = _zeta(inst)
    n = inst.size
    best_val, best_spins = math.inf, None
    remaining = samples
    while remaining:
        size = min(chunk, remaining)
        batch = rng.integers(0, 2, (size, n), dtype=np.int8) * 2 - 1
        vals = np.abs(batch @ zeta)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_spins = float(vals[i]), batch[i].copy()
        remaining -= size
    cfg = SpinConfig(best_spins)
    return cfg, fidelity(inst, cfg)
