"""Optical forward model: SLM phase composition, DFT propagation, readout intensities and costs.

Conventions
-----------
- Spin sigma=+1 is displayed as s=pi/2, sigma=-1 as s=3pi/2; flipping a spin adds pi to its block.
- Macropixels are 2x2 pixels; their sign c=+1 when (macro_row + macro_col) is even, counted
  from the active-window origin. Each spin holds (M/2)^2 macropixels, balanced when M % 4 == 0.
- The inactive area carries a pixel-level checkerboard of pi/2 / 3pi/2, which sums to zero at DC
  because the frame and the active window both have even sides.
- The forward transform is the unnormalized 2-D DFT with DC moved to index (P//2, P//2), where
  P = frame side x oversample. E0, lambda and f are absorbed, so the DC intensity of a composed
  frame is exactly M^4 (sum_a sigma_a cos alpha_a)^2.
"""

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Union

import numpy as np

from spim_sim.domain import SpinConfig
from spim_sim.errors import DimensionError, GeometryError, NotSupported
from spim_sim.schemas import NppInstance

MACROPIXEL = 2
PHASE_LEVELS = 256

SPIN_UP_LEVEL = PHASE_LEVELS // 4  # pi/2
SPIN_DOWN_LEVEL = 3 * PHASE_LEVELS // 4  # 3pi/2


def default_pixels_per_spin(spins_per_side: int) -> int:
    """Largest M <= 16 (multiple of 4) keeping the active area within 512 pixels, at least 4."""
    return max(4, min(16, (512 // spins_per_side) // 4 * 4))


@dataclass(frozen=True)
class SlmGeometry:
    """Lattice-to-pixel layout of the SLM frame."""

    spins_per_side: int
    pixels_per_spin: int
    frame_side: Optional[int] = None
    phase_levels: Optional[int] = PHASE_LEVELS

    def __post_init__(self) -> None:
        if self.spins_per_side < 1:
            raise GeometryError("spins_per_side must be >= 1")
        if self.pixels_per_spin < 4 or self.pixels_per_spin % 4:
            raise GeometryError(
                f"pixels_per_spin must be a positive multiple of 4, got {self.pixels_per_spin}"
            )
        if self.phase_levels is not None and (self.phase_levels < 4 or self.phase_levels % 4):
            raise GeometryError("phase_levels must be a multiple of 4 so pi/2 steps are exact")
        if self.frame_side is None:
            object.__setattr__(self, "frame_side", self.active_size + 2 * (self.active_size // 4))
        if self.frame_side < self.active_size or self.frame_side % 2:
            raise GeometryError(
                f"frame_side {self.frame_side} must be even and >= active size {self.active_size}"
            )

    @property
    def active_size(self) -> int:
        return self.pixels_per_spin * self.spins_per_side

    @property
    def active_origin(self) -> int:
        return (self.frame_side - self.active_size) // 2

    @property
    def n_spins(self) -> int:
        return self.spins_per_side**2

    @property
    def sensor_window(self) -> int:
        """Default camera window: the central half of the readout grid."""
        return self.frame_side // 2

    def spin_block(self, index: int) -> tuple[slice, slice]:
        """Pixel slices of spin `index` (row-major over the lattice) inside the frame."""
        row, col = divmod(index, self.spins_per_side)
        m, o = self.pixels_per_spin, self.active_origin
        return slice(o + row * m, o + (row + 1) * m), slice(o + col * m, o + (col + 1) * m)


@dataclass
class SlmFrame:
    """Phase values displayed on the SLM, optionally as integer levels of 2pi/phase_levels."""

    phase: np.ndarray
    levels: Optional[np.ndarray] = None
    phase_levels: Optional[int] = None
    geometry: Optional[SlmGeometry] = None

    @property
    def height(self) -> int:
        return self.phase.shape[0]

    @property
    def width(self) -> int:
        return self.phase.shape[1]

    def field(self) -> np.ndarray:
        """e^{i theta} per pixel (unit plane-wave illumination)."""
        if self.levels is not None:
            return phase_lut(self.phase_levels)[self.levels]
        return np.exp(1j * self.phase)

    @classmethod
    def from_levels(cls, levels: np.ndarray, phase_levels: int = PHASE_LEVELS, geometry=None) -> "SlmFrame":
        levels = np.mod(levels, phase_levels).astype(np.int16)
        phase = levels * (2 * math.pi / phase_levels)
        return cls(phase=phase, levels=levels, phase_levels=phase_levels, geometry=geometry)

    @classmethod
    def uniform(cls, side: int, level: int = 0, phase_levels: int = PHASE_LEVELS) -> "SlmFrame":
        return cls.from_levels(np.full((side, side), level), phase_levels)


def phase_lut(phase_levels: int) -> np.ndarray:
    return np.exp(2j * math.pi * np.arange(phase_levels) / phase_levels)


@dataclass
class FieldImage:
    """Complex readout-plane field, DC at the center."""

    data: np.ndarray
    oversample: int = 1


@dataclass
class IntensityImage:
    """Nonnegative readout-plane intensity (or captured counts), DC at the center."""

    data: np.ndarray
    oversample: int = 1
    counts: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape


@dataclass
class TargetIntensity:
    data: np.ndarray
    kind: Literal["delta", "captured"] = "captured"


# --- Masks & composition ---


def spin_phase_mask(cfg: SpinConfig, pixels_per_spin: int) -> np.ndarray:
    """Per-pixel s_j: pi/2 for sigma=+1, 3pi/2 for sigma=-1, constant over each M x M spin."""
    s = np.where(cfg.lattice() > 0, math.pi / 2, 3 * math.pi / 2)
    return np.kron(s, np.ones((pixels_per_spin, pixels_per_spin)))


def macropixel_checkerboard(active_size: int) -> np.ndarray:
    """Per-pixel c_j in {-1,+1}: +1 where (macro_row + macro_col) is even."""
    idx = np.arange(active_size) // MACROPIXEL
    return np.where((idx[:, None] + idx[None, :]) % 2 == 0, 1, -1).astype(np.int8)


def inactive_checkerboard_levels(side: int, phase_levels: int = PHASE_LEVELS) -> np.ndarray:
    r, c = np.indices((side, side))
    return np.where((r + c) % 2 == 0, phase_levels // 4, 3 * phase_levels // 4)


def alpha_from_amplitudes(amplitudes: np.ndarray) -> np.ndarray:
    return np.arccos(np.clip(np.asarray(amplitudes, dtype=np.float64), 0.0, 1.0))


def quantize_alpha(alpha: np.ndarray, phase_levels: Optional[int]) -> np.ndarray:
    if phase_levels is None:
        return np.asarray(alpha, dtype=np.float64)
    step = 2 * math.pi / phase_levels
    return np.rint(np.asarray(alpha) / step) * step


def realized_amplitudes(alpha: np.ndarray, phase_levels: Optional[int] = PHASE_LEVELS) -> np.ndarray:
    """cos of the alpha actually displayed after quantization."""
    return np.cos(quantize_alpha(alpha, phase_levels))


def amplitude_encoding_error(inst: NppInstance, phase_levels: Optional[int] = PHASE_LEVELS) -> float:
    """Largest |cos(q(alpha)) - zeta| over the instance."""
    return float(np.max(np.abs(realized_amplitudes(np.asarray(inst.alpha), phase_levels) - np.asarray(inst.zeta))))


def compose_phase(
    spin_mask: np.ndarray,
    checker: np.ndarray,
    alpha: np.ndarray,
    geometry: SlmGeometry,
) -> SlmFrame:
    """theta_j = (s_j + c_j alpha_spin(j)) mod 2pi over the active window, inactive checkerboard elsewhere."""
    n = geometry.active_size
    if spin_mask.shape != (n, n) or checker.shape != (n, n):
        raise DimensionError(f"masks must be {n}x{n}, got {spin_mask.shape} and {checker.shape}")
    alpha = np.asarray(alpha, dtype=np.float64).reshape(-1)
    if alpha.size != geometry.n_spins:
        raise DimensionError(f"expected {geometry.n_spins} spin amplitudes, got {alpha.size}")
    m = geometry.pixels_per_spin
    alpha_px = np.kron(alpha.reshape(geometry.spins_per_side, -1), np.ones((m, m)))

    o = geometry.active_origin
    window = (slice(o, o + n), slice(o, o + n))
    levels_count = geometry.phase_levels
    if levels_count is not None:
        step = 2 * math.pi / levels_count
        # s and alpha are quantized separately so +alpha and -alpha round symmetrically.
        s_levels = np.rint(spin_mask / step).astype(np.int64)
        a_levels = np.rint(alpha_px / step).astype(np.int64)
        levels = inactive_checkerboard_levels(geometry.frame_side, levels_count)
        levels[window] = s_levels + checker * a_levels
        return SlmFrame.from_levels(levels, levels_count, geometry)

    phase = inactive_checkerboard_levels(geometry.frame_side) * (2 * math.pi / PHASE_LEVELS)
    phase[window] = np.mod(spin_mask + checker * alpha_px, 2 * math.pi)
    return SlmFrame(phase=phase, geometry=geometry)


def encode_frame(cfg: SpinConfig, amplitudes: np.ndarray, geometry: SlmGeometry) -> SlmFrame:
    """Compose the frame for spins `cfg` carrying per-spin amplitudes (cos alpha)."""
    if cfg.size != geometry.n_spins:
        raise DimensionError(f"geometry holds {geometry.n_spins} spins, configuration has {cfg.size}")
    return compose_phase(
        spin_phase_mask(cfg, geometry.pixels_per_spin),
        macropixel_checkerboard(geometry.active_size),
        alpha_from_amplitudes(amplitudes),
        geometry,
    )


def grating_frame(side: int, period: int = 2, phase_levels: int = PHASE_LEVELS) -> SlmFrame:
    """Horizontal binary grating: rows alternate between phase 0 and pi every period/2 rows."""
    rows = (np.arange(side) // max(1, period // 2)) % 2
    levels = np.repeat((rows * (phase_levels // 2))[:, None], side, axis=1)
    return SlmFrame.from_levels(levels, phase_levels)


# --- Propagation ---


def gaussian_envelope(side: int, waist: float) -> np.ndarray:
    """exp(-(x^2 + y^2) / waist^2) about the frame center, in pixels."""
    x = np.arange(side) - (side - 1) / 2
    g = np.exp(-(x**2) / waist**2)
    return np.outer(g, g)


def propagate(
    field_in: np.ndarray,
    oversample: int = 1,
    window: Optional[int] = None,
) -> np.ndarray:
    """Unnormalized DFT of the zero-padded field, DC-centered, optionally cropped to a centered window."""
    if oversample < 1:
        raise GeometryError(f"oversample must be >= 1, got {oversample}")
    h, w = field_in.shape
    if oversample > 1:
        padded = np.zeros((h * oversample, w * oversample), dtype=np.complex128)
        padded[:h, :w] = field_in
        field_in = padded
    spectrum = np.fft.fftshift(np.fft.fft2(field_in))
    if window is None:
        return spectrum
    return crop_center(spectrum, window)


def crop_center(data: np.ndarray, size: int) -> np.ndarray:
    """size x size window whose center pixel is the DC bin (index side//2)."""
    side = data.shape[0]
    if size < 1 or size > side:
        raise GeometryError(f"window {size} does not fit a grid of side {side}")
    start = side // 2 - size // 2
    return data[start : start + size, start : start + size]


def forward_field(frame: SlmFrame, oversample: int = 1, beam_waist: Optional[float] = None) -> FieldImage:
    """Plane-wave (or Gaussian) illumination of the frame, Fourier-transformed to the readout plane."""
    field_in = frame.field()
    if beam_waist is not None:
        field_in = field_in * gaussian_envelope(frame.width, beam_waist)
    return FieldImage(propagate(field_in, oversample), oversample)


def pixel_envelope(grid_side: int) -> np.ndarray:
    """sinc^2 pixel-aperture factor per readout bin; equals 1 at DC."""
    u = (np.arange(grid_side) - grid_side // 2) / grid_side
    s = np.sinc(u) ** 2
    return np.outer(s, s)


def intensity(image: FieldImage, with_pixel_envelope: bool = False) -> IntensityImage:
    data = np.abs(image.data) ** 2
    if with_pixel_envelope:
        data = data * pixel_envelope(data.shape[0])
    return IntensityImage(data, image.oversample)


def center_intensity(frame: SlmFrame, roi: int, oversample: int = 1, beam_waist: Optional[float] = None) -> float:
    """Intensity summed over the centered roi x roi window; roi=1 is the DC bin alone."""
    grid = frame.width * oversample
    if roi < 1 or roi > grid:
        raise GeometryError(f"roi {roi} does not fit a readout grid of side {grid}")
    field_out = forward_field(frame, oversample, beam_waist).data
    return float(np.sum(np.abs(crop_center(field_out, roi)) ** 2))


def dc_intensity_formula(cfg: SpinConfig, amplitudes: np.ndarray, pixels_per_spin: int) -> float:
    """Analytic DC intensity M^4 (sum_a sigma_a a_a)^2 of a noise-free composed frame."""
    s = math.fsum(np.asarray(amplitudes, dtype=np.float64) * cfg.vector)
    return float(pixels_per_spin) ** 4 * s * s


# --- Costs & energies ---


ImageLike = Union[IntensityImage, TargetIntensity, np.ndarray]


def _array(image: ImageLike) -> np.ndarray:
    return np.asarray(getattr(image, "data", image), dtype=np.float64)


def cost(image: ImageLike, target: ImageLike) -> float:
    """sum over pixels of (I - I_target)^2."""
    a, b = _array(image), _array(target)
    if a.shape != b.shape:
        raise DimensionError(f"image {a.shape} and target {b.shape} differ in shape")
    diff = a - b
    return float(np.sum(diff * diff))


def total_energy(image: ImageLike, normalize: bool = False) -> float:
    """sum_{x,y} I(x,y); normalized, the sum is divided by pixels x peak (1 for a flat image)."""
    data = _array(image)
    total = float(np.sum(data))
    if not normalize:
        return total
    peak = float(np.max(data)) if data.size else 0.0
    return total / (data.size * peak) if peak > 0 else 0.0


def energy_series(images: Sequence[ImageLike]) -> np.ndarray:
    """Total energy per image, normalized to the series maximum."""
    values = np.array([total_energy(im) for im in images], dtype=np.float64)
    top = values.max() if values.size else 0.0
    return values / top if top > 0 else values


def delta_target(shape: tuple[int, int], peak: float = 1.0) -> TargetIntensity:
    data = np.zeros(shape, dtype=np.float64)
    data[shape[0] // 2, shape[1] // 2] = peak
    return TargetIntensity(data, "delta")


def captured_target(image: ImageLike) -> TargetIntensity:
    return TargetIntensity(_array(image).copy(), "captured")


def coupling_matrix(inst: NppInstance, target: TargetIntensity, scale: float = 1.0) -> np.ndarray:
    """J_mn = -2 kappa zeta_m zeta_n for a delta target at the readout center (sinc^2 = 1 at DC)."""
    if target.kind != "delta":
        raise NotSupported(f"couplings are only instantiated for a delta target, not {target.kind!r}")
    zeta = np.asarray(inst.zeta, dtype=np.float64)
    return -2.0 * scale * np.outer(zeta, zeta)
