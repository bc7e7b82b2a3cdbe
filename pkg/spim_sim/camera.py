"""Sensor and device imperfections: exposure, quantization, laser/SLM noise, settle timing.

Noise draws come from counter-based Philox streams keyed by the camera seed, with the frame
index and noise kind in the high counter words, so a capture depends only on
(seed, frame_index, pixel) and never on evaluation order.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from datetime import timedelta
from typing import Optional

import numpy as np

from spim_sim.domain import SpinConfig
from spim_sim.errors import CalibrationError, InvalidArgument
from spim_sim.optics import IntensityImage, SlmFrame, SlmGeometry, cost, encode_frame, grating_frame, propagate
from spim_sim.schemas import CameraModel, DeviceNoise, NoisePreset

logger = logging.getLogger(__name__)

STREAM_RIN = 1
STREAM_SHOT = 2
STREAM_READ = 3
STREAM_FLICKER = 4

PRESETS = {
    "off": NoisePreset(name="off"),
    "paper-like": NoisePreset(
        name="paper-like",
        laser_rin_sigma=0.005,
        phase_flicker_sigma=0.02,
        read_noise_sigma=1.0,
    ),
}


def noise_preset(name: str, **overrides: float) -> NoisePreset:
    try:
        preset = PRESETS[name]
    except KeyError:
        raise InvalidArgument(f"unknown noise preset {name!r}; choose from {sorted(PRESETS)}") from None
    if not overrides:
        return preset
    return NoisePreset.model_validate({**preset.model_dump(), **overrides})


def devices_from_preset(
    preset: NoisePreset, seed: int = 0, bit_depth: int = 8
) -> tuple[CameraModel, DeviceNoise]:
    camera = CameraModel(
        bit_depth=bit_depth,
        shot_noise=preset.shot_noise,
        read_noise_sigma=preset.read_noise_sigma,
        seed=seed,
    )
    noise = DeviceNoise(
        laser_rin_sigma=preset.laser_rin_sigma,
        phase_flicker_sigma=preset.phase_flicker_sigma,
    )
    return camera, noise


def noise_rng(seed: int, stream: int, frame_index: int) -> np.random.Generator:
    counter = np.array([0, 0, stream, frame_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter))


# --- Exposure & capture ---


def calibrate_exposure(cam: CameraModel, reference_image: IntensityImage) -> CameraModel:
    """Gain so the reference maximum lands exactly on full scale (before noise)."""
    peak = float(np.max(reference_image.data)) if reference_image.data.size else 0.0
    if not math.isfinite(peak) or peak <= 0:
        raise CalibrationError("reference image has no positive intensity to calibrate against")
    gain = cam.full_scale / peak
    logger.info("exposure calibrated: peak=%.6g gain=%.6g", peak, gain)
    return cam.model_copy(update={"exposure_gain": gain})


def capture(cam: CameraModel, noise: DeviceNoise, image: IntensityImage, frame_index: int = 0) -> IntensityImage:
    """counts = clip(rint(gain I (1 + rin) + shot + read), 0, 2^bits - 1)."""
    x = cam.exposure_gain * np.asarray(image.data, dtype=np.float64)
    if noise.laser_rin_sigma > 0:
        rin = noise_rng(cam.seed, STREAM_RIN, frame_index).standard_normal()
        x = x * (1.0 + noise.laser_rin_sigma * rin)
    if cam.shot_noise:
        z = noise_rng(cam.seed, STREAM_SHOT, frame_index).standard_normal(x.shape)
        x = x + np.sqrt(np.clip(x, 0, None)) * z
    if cam.read_noise_sigma > 0:
        z = noise_rng(cam.seed, STREAM_READ, frame_index).standard_normal(x.shape)
        x = x + cam.read_noise_sigma * z
    counts = np.clip(np.rint(x), 0, cam.full_scale).astype(np.uint16)
    return IntensityImage(counts, image.oversample, counts=True, meta={"frame_index": frame_index})


def flicker(field_in: np.ndarray, noise: DeviceNoise, seed: int, frame_index: int) -> np.ndarray:
    """Per-pixel, per-capture SLM phase jitter."""
    if noise.phase_flicker_sigma <= 0:
        return field_in
    delta = noise_rng(seed, STREAM_FLICKER, frame_index).normal(0.0, noise.phase_flicker_sigma, field_in.shape)
    return field_in * np.exp(1j * delta)


def measure(
    field_in: np.ndarray,
    cam: Optional[CameraModel],
    noise: DeviceNoise,
    frame_index: int,
    window: Optional[int] = None,
    oversample: int = 1,
) -> IntensityImage:
    """SLM field -> flicker -> Fourier lens -> sensor window -> (optional) quantizing camera."""
    seed = cam.seed if cam is not None else 0
    spectrum = propagate(flicker(field_in, noise, seed, frame_index), oversample, window)
    raw = IntensityImage(np.abs(spectrum) ** 2, oversample)
    if cam is None:
        return raw
    return capture(cam, noise, raw, frame_index)


# --- Noise floor ---


def noise_floor(
    cam: CameraModel,
    noise: DeviceNoise,
    frames: int,
    geometry: Optional[SlmGeometry] = None,
    phase_offset_level: int = 0,
) -> float:
    """Mean cost of `frames` captures of a fixed checkerboard against one target capture of it."""
    if frames < 2:
        raise InvalidArgument(f"noise floor needs at least 2 frames, got {frames}")
    geometry = geometry or SlmGeometry(16, 16)
    base = encode_frame(
        SpinConfig.checkerboard(geometry.spins_per_side), np.ones(geometry.n_spins), geometry
    )
    frame = SlmFrame.from_levels(base.levels + phase_offset_level, base.phase_levels, geometry)
    field_in = frame.field()
    window = geometry.sensor_window

    clean = measure(field_in, None, DeviceNoise(), 0, window)
    cam = calibrate_exposure(cam, clean)
    target = measure(field_in, cam, noise, 0, window)
    costs = [cost(measure(field_in, cam, noise, k, window), target) for k in range(1, frames + 1)]
    floor = float(np.mean(costs))
    logger.info("noise floor over %d frames: %.6g", frames, floor)
    return floor


# --- Timing ---


@dataclass
class SimClock:
    """Simulated device time; realtime mode also sleeps through the settle period."""

    realtime: bool = False
    elapsed_ms: float = 0.0

    def advance(self, ms: float) -> None:
        self.elapsed_ms += ms

    def tick(self, noise: DeviceNoise) -> None:
        """One SLM frame update: settle, then refresh/capture overhead."""
        settle_delay(noise, self)
        self.advance(noise.refresh_ms)


def settle_delay(noise: DeviceNoise, clock: Optional[SimClock] = None) -> timedelta:
    """Wait for the liquid crystal to settle: sleep in realtime mode, else only advance the clock."""
    if clock is not None:
        clock.advance(noise.settle_ms)
        if clock.realtime and noise.settle_ms > 0:
            time.sleep(noise.settle_ms / 1000.0)
    return timedelta(milliseconds=noise.settle_ms)


def iteration_budget(minutes: float, iteration_ms: float = 270.0) -> int:
    """Number of frame updates that fit in a wall-clock budget."""
    if iteration_ms <= 0:
        raise InvalidArgument("iteration_ms must be positive")
    return int(round(minutes * 60_000 / iteration_ms))


# --- SLM response emulation ---


@dataclass
class ResponseCurves:
    times_ms: np.ndarray
    cost: np.ndarray
    energy: np.ndarray
    settle_time_ms: float
    meta: dict = field(default_factory=dict)


def slm_response_curves(
    noise: DeviceNoise,
    side: int = 256,
    captures: int = 30,
    frame_interval_ms: float = 10.0,
    seed: int = 0,
) -> ResponseCurves:
    """Switch a random binary frame to a horizontal grating and watch the readout settle.

    The liquid crystal approaches the new phase exponentially with time constant settle_ms / 3.
    Cost is taken against the fully settled grating image; cost and energy are normalized to 1.
    """
    rng = np.random.default_rng(seed)
    old = rng.integers(0, 2, (side, side)) * math.pi
    new = grating_frame(side).phase
    window = side // 2
    tau = max(noise.settle_ms / 3.0, 1e-9)

    settled = np.abs(propagate(np.exp(1j * new), window=window)) ** 2
    times = np.arange(captures) * frame_interval_ms
    costs, energies = [], []
    for t in times:
        progress = 1.0 - math.exp(-t / tau) if noise.settle_ms > 0 else 1.0
        image = np.abs(propagate(np.exp(1j * (old + (new - old) * progress)), window=window)) ** 2
        costs.append(cost(image, settled))
        energies.append(float(np.sum(image)))

    cost_curve = np.asarray(costs)
    energy_curve = np.asarray(energies)
    cost_curve = cost_curve / cost_curve.max() if cost_curve.max() > 0 else cost_curve
    energy_curve = energy_curve / energy_curve.max() if energy_curve.max() > 0 else energy_curve

    settle_time = float(times[-1])
    for i in range(captures):
        if np.all(np.abs(cost_curve[i:] - cost_curve[-1]) <= 0.05) and np.all(
            np.abs(energy_curve[i:] - energy_curve[-1]) <= 0.05
        ):
            settle_time = float(times[i])
            break
    return ResponseCurves(times, cost_curve, energy_curve, settle_time, {"tau_ms": tau})
