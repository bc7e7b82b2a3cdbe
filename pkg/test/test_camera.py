# Test type: Unit / statistical
# Validation: Exposure calibration, quantizing capture, laser RIN, read noise, SLM flicker, noise floor, settle timing, SLM response curves.
# Command: uv run pytest test/test_camera.py -v

from datetime import timedelta

import numpy as np
import pytest
from pydantic import ValidationError

from spim_sim import camera
from spim_sim.camera import SimClock
from spim_sim.domain import SpinConfig
from spim_sim.errors import CalibrationError, InvalidArgument
from spim_sim.optics import IntensityImage, SlmGeometry, encode_frame
from spim_sim.schemas import CameraModel, DeviceNoise

SMALL = SlmGeometry(4, 4)


def _image(data) -> IntensityImage:
    return IntensityImage(np.asarray(data, dtype=float))


# --- Presets ---


def test_presets():
    off = camera.noise_preset("off")
    assert off.laser_rin_sigma == 0 and off.read_noise_sigma == 0
    paper = camera.noise_preset("paper-like")
    assert paper.laser_rin_sigma > 0 and paper.phase_flicker_sigma > 0 and paper.read_noise_sigma > 0
    with pytest.raises(InvalidArgument):
        camera.noise_preset("loud")


def test_preset_overrides_validated():
    tuned = camera.noise_preset("off", read_noise_sigma=2.0)
    assert tuned.read_noise_sigma == 2.0
    with pytest.raises(ValidationError):
        camera.noise_preset("off", read_noise_sigma=-1.0)
    with pytest.raises(ValidationError):
        camera.noise_preset("off", gain=2.0)


def test_devices_from_preset():
    cam, noise = camera.devices_from_preset(camera.noise_preset("paper-like"), seed=3, bit_depth=12)
    assert cam.seed == 3
    assert cam.full_scale == 4095
    assert cam.read_noise_sigma == 1.0
    assert noise.phase_flicker_sigma == 0.02


# --- Exposure & capture ---


def test_calibrate_exposure_examples():
    assert camera.calibrate_exposure(CameraModel(), _image([[0.0, 1.0]])).exposure_gain == 255.0
    assert camera.calibrate_exposure(CameraModel(), _image([[510.0, 3.0]])).exposure_gain == 0.5


def test_calibrate_exposure_rejects_dark_image():
    with pytest.raises(CalibrationError):
        camera.calibrate_exposure(CameraModel(), _image(np.zeros((3, 3))))


def test_recapture_peaks_at_full_scale():
    rng = np.random.default_rng(0)
    image = _image(rng.uniform(0, 1e6, (16, 16)))
    cam = camera.calibrate_exposure(CameraModel(), image)
    counts = camera.capture(cam, DeviceNoise(), image)
    assert counts.data.max() == 255
    assert counts.data.dtype == np.uint16
    assert counts.counts


def test_capture_saturates_and_is_monotone():
    cam = CameraModel(exposure_gain=1.0)
    saturated = camera.capture(cam, DeviceNoise(), _image(np.full((4, 4), 1e4)))
    assert np.all(saturated.data == 255)
    ramp = np.linspace(0, 300, 64).reshape(8, 8)
    counts = camera.capture(cam, DeviceNoise(), _image(ramp)).data.ravel()
    assert np.all(np.diff(counts.astype(int)) >= 0)


def test_capture_uniform_without_noise():
    counts = camera.capture(CameraModel(exposure_gain=2.0), DeviceNoise(), _image(np.full((5, 5), 10.0)))
    assert np.all(counts.data == 20)


def test_laser_rin_statistics():
    cam = CameraModel(exposure_gain=200.0, bit_depth=16)
    noise = DeviceNoise(laser_rin_sigma=0.01)
    image = _image(np.ones((4, 4)))
    totals = np.array([camera.capture(cam, noise, image, k).data.sum() for k in range(10_000)], dtype=float)
    assert totals.std() / totals.mean() == pytest.approx(0.01, rel=0.2)


def test_capture_is_reproducible_per_frame():
    cam = CameraModel(exposure_gain=100.0, read_noise_sigma=2.0, shot_noise=True, seed=5)
    noise = DeviceNoise(laser_rin_sigma=0.01)
    image = _image(np.full((8, 8), 1.0))
    a = camera.capture(cam, noise, image, 7).data
    b = camera.capture(cam, noise, image, 7).data
    c = camera.capture(cam, noise, image, 8).data
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    other_seed = camera.capture(cam.model_copy(update={"seed": 6}), noise, image, 7).data
    assert not np.array_equal(a, other_seed)


# --- Flicker ---


def test_flicker_off_is_identity():
    field_in = np.ones((4, 4), dtype=complex)
    assert camera.flicker(field_in, DeviceNoise(), 0, 3) is field_in


def test_flicker_perturbation_vanishes_with_sigma():
    field_in = encode_frame(SpinConfig.uniform(16), np.ones(16), SMALL).field()
    clean = camera.measure(field_in, None, DeviceNoise(), 0, window=1).data[0, 0]
    mean_shift = []
    for sigma in (0.1, 0.01, 0.001):
        noise = DeviceNoise(phase_flicker_sigma=sigma)
        shifts = [abs(camera.measure(field_in, None, noise, k, window=1).data[0, 0] - clean) for k in range(1000)]
        mean_shift.append(np.mean(shifts))
    assert mean_shift[0] > mean_shift[1] > mean_shift[2]
    assert mean_shift[2] / clean < 1e-5


# --- Noise floor ---


def test_noise_floor_zero_without_noise():
    assert camera.noise_floor(CameraModel(), DeviceNoise(), 5, SMALL) == 0.0


def test_noise_floor_positive_with_read_noise():
    cam = CameraModel(read_noise_sigma=1.0)
    floor = camera.noise_floor(cam, DeviceNoise(), 5, SMALL)
    assert floor > 0
    assert camera.noise_floor(cam, DeviceNoise(), 5, SMALL) == floor


def test_noise_floor_paper_like():
    cam, noise = camera.devices_from_preset(camera.noise_preset("paper-like"))
    assert camera.noise_floor(cam, noise, 3, SMALL) > 0


def test_noise_floor_ignores_global_phase_offset():
    cam, noise = camera.devices_from_preset(camera.noise_preset("paper-like"))
    base = camera.noise_floor(cam, noise, 4, SMALL)
    shifted = camera.noise_floor(cam, noise, 4, SMALL, phase_offset_level=37)
    assert shifted == pytest.approx(base, rel=1e-6)


def test_noise_floor_needs_two_frames():
    with pytest.raises(InvalidArgument):
        camera.noise_floor(CameraModel(), DeviceNoise(), 1, SMALL)


# --- Timing ---


def test_settle_delay_accumulates():
    clock = SimClock()
    noise = DeviceNoise(settle_ms=150)
    for _ in range(1000):
        assert camera.settle_delay(noise, clock) == timedelta(milliseconds=150)
    assert clock.elapsed_ms == 150_000


def test_settle_delay_zero():
    clock = SimClock()
    assert camera.settle_delay(DeviceNoise(settle_ms=0), clock) == timedelta(0)
    assert clock.elapsed_ms == 0


def test_realtime_clock_sleeps(monkeypatch):
    slept = []
    monkeypatch.setattr(camera.time, "sleep", slept.append)
    clock = SimClock(realtime=True)
    clock.tick(DeviceNoise())
    assert slept == [0.15]
    assert clock.elapsed_ms == 270


def test_simulated_clock_never_sleeps(monkeypatch):
    monkeypatch.setattr(camera.time, "sleep", lambda s: pytest.fail("slept in simulated mode"))
    clock = SimClock()
    for _ in range(10):
        clock.tick(DeviceNoise())
    assert clock.elapsed_ms == 2700


def test_iteration_budget():
    assert camera.iteration_budget(9) == 2000
    assert camera.iteration_budget(1, iteration_ms=60_000) == 1
    with pytest.raises(InvalidArgument):
        camera.iteration_budget(1, iteration_ms=0)


# --- SLM response ---


def test_slm_response_curves():
    curves = camera.slm_response_curves(DeviceNoise(), side=64)
    assert curves.times_ms.shape == (30,)
    assert curves.cost.max() == 1.0
    assert curves.cost[-1] < 0.05
    assert 0 < curves.settle_time_ms <= curves.times_ms[-1]
    assert curves.meta["tau_ms"] == 50.0


def test_slm_response_instant_settle():
    curves = camera.slm_response_curves(DeviceNoise(settle_ms=0), side=32, captures=5)
    assert np.all(curves.cost == 0)
    assert curves.settle_time_ms == 0.0
