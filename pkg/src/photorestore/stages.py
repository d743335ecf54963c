"""The four restoration stage contracts and their classical reference backends.

Stage order is fixed: damage -> denoise -> face -> colorize. Each reference
backend is a self-contained deterministic algorithm honoring the same
parameter surface a deep-model backend would receive, so the two are
swappable without touching callers:

  damage    mask-guided fill by iterative neighborhood diffusion
  denoise   bilateral smoothing, effect scaled by strength x steps
  face      bicubic upscale + unsharp detail boost (no face detection here;
            that belongs to an external backend)
  colorize  deterministic tone mapping (neutral replicate or sepia)

Zero-effect parameters are bit-exact identities, which is what makes the
whole-pipeline passthrough tests possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import ndimage

from . import imaging
from .errors import ParameterError, ShapeError

STAGE_ORDER = ("damage", "denoise", "face", "colorize")

# inpainting: Jacobi sweeps stop below this max per-pixel change,
# with an iteration budget of steps * _INPAINT_ITERS_PER_STEP
_INPAINT_TOL = 0.1
_INPAINT_ITERS_PER_STEP = 50

# denoise: sigmas grow linearly with effort = strength * steps, capped so the
# bilateral window stays desk-sized
_DENOISE_SPATIAL_GAIN = 5.0
_DENOISE_SPATIAL_CAP = 3.0
_DENOISE_RANGE_GAIN = 60.0
_DENOISE_RANGE_CAP = 75.0

# face: unsharp mask settings
_UNSHARP_SIGMA = 1.5
_UNSHARP_GAIN = 1.0

# sepia gains applied to the gray value (row sums of the fixed sepia matrix
# along the gray axis)
SEPIA_GAINS = (1.07, 0.74, 0.43)

COLORIZE_MODES = ("neutral", "sepia")


@dataclass
class StageParams:
    """Per-stage parameter set shared by reference and external backends."""

    backend_id: str
    strength: float = 1.0
    steps: int = 30
    guidance: float = 1.0
    prompt: str = ""
    checkpoint: str = ""
    upscale: int = 1
    seed: int = 0
    extras: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise ParameterError(f"strength must be in [0, 1], got {self.strength}")
        if self.steps < 1:
            raise ParameterError(f"steps must be >= 1, got {self.steps}")
        if self.guidance < 0:
            raise ParameterError(f"guidance must be >= 0, got {self.guidance}")
        if self.upscale < 1:
            raise ParameterError(f"upscale must be >= 1, got {self.upscale}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "StageParams":
        return cls(**data)


# ---------------------------------------------------------------------------
# damage: diffusion inpainting
# ---------------------------------------------------------------------------

def inpaint_reference(img: np.ndarray, mask: np.ndarray, params: StageParams) -> np.ndarray:
    """Fill masked pixels by Jacobi averaging from the mask boundary.

    Unmasked pixels are returned bit-exact. Masked pixels converge to the
    harmonic interpolant of the surrounding content (max change < 0.1
    intensity, budget steps * 50 sweeps).
    """
    imaging.validate_image(img)
    imaging.validate_mask(mask)
    imaging.check_same_dims(img, mask)
    hole = mask > 0
    if hole.all():
        raise ParameterError("mask covers the entire image; no boundary to diffuse from")
    if not hole.any():
        return img.copy()

    max_iters = params.steps * _INPAINT_ITERS_PER_STEP
    h, w = hole.shape

    # in-bounds 4-neighbor count per pixel
    ncount = np.full((h, w), 4.0)
    ncount[0, :] -= 1
    ncount[-1, :] -= 1
    ncount[:, 0] -= 1
    ncount[:, -1] -= 1

    def fill_channel(ch: np.ndarray) -> np.ndarray:
        x = ch.astype(np.float64)
        x[hole] = ch[~hole].mean()
        for _ in range(max_iters):
            acc = np.zeros_like(x)
            acc[1:, :] += x[:-1, :]
            acc[:-1, :] += x[1:, :]
            acc[:, 1:] += x[:, :-1]
            acc[:, :-1] += x[:, 1:]
            new_vals = acc[hole] / ncount[hole]
            delta = np.abs(new_vals - x[hole]).max()
            x[hole] = new_vals
            if delta < _INPAINT_TOL:
                break
        out = ch.copy()
        out[hole] = np.clip(np.floor(x[hole] + 0.5), 0, 255).astype(np.uint8)
        return out

    if img.ndim == 2:
        return fill_channel(img)
    out = img.copy()
    for c in range(img.shape[2]):
        out[:, :, c] = fill_channel(img[:, :, c])
    return out


# ---------------------------------------------------------------------------
# denoise: edge-preserving smoothing
# ---------------------------------------------------------------------------

def denoise_reference(img: np.ndarray, params: StageParams) -> np.ndarray:
    """Bilateral smoothing whose sigmas scale with strength * steps.

    strength 0 is a bit-exact identity.
    """
    imaging.validate_image(img)
    if params.strength == 0:
        return img.copy()
    effort = params.strength * params.steps
    sigma_spatial = min(_DENOISE_SPATIAL_GAIN * effort, _DENOISE_SPATIAL_CAP)
    sigma_range = min(_DENOISE_RANGE_GAIN * effort, _DENOISE_RANGE_CAP)
    return imaging.bilateral_blur(img, sigma_spatial, sigma_range)


def estimate_noise_sigma(img: np.ndarray) -> float:
    """Robust additive-noise estimate: MAD of Laplacian residuals.

    The raw MAD is turned into a standard deviation with the 0.6745 normal
    consistency factor, then divided by the Laplacian kernel's L2 gain
    (sqrt(20)) so the result is on the pixel-intensity scale.
    """
    imaging.validate_image(img)
    gray = imaging.to_grayscale(img).astype(np.float64)
    lap = ndimage.convolve(gray, np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]],
                                          dtype=np.float64), mode="nearest")
    mad = np.median(np.abs(lap - np.median(lap)))
    return float(mad / 0.6745 / math.sqrt(20.0))


def auto_steps(img: np.ndarray, k: float = 2.0) -> int:
    """Suggested denoise step count, proportional to estimated noise."""
    sigma = estimate_noise_sigma(img)
    return int(np.clip(round(k * sigma), 10, 100))


# ---------------------------------------------------------------------------
# face: upscale + detail boost
# ---------------------------------------------------------------------------

def face_restore_reference(img: np.ndarray, params: StageParams) -> np.ndarray:
    """Bicubic upscale by params.upscale, then unsharp masking by strength.

    upscale 1 with strength 0 is a bit-exact identity.
    """
    imaging.validate_image(img)
    if params.upscale not in (1, 2, 4):
        raise ParameterError(f"upscale must be 1, 2 or 4, got {params.upscale}")
    out = img
    if params.upscale > 1:
        out = imaging.resize(out, float(params.upscale), "bicubic")
    if params.strength == 0:
        return out.copy() if out is img else out
    amount = _UNSHARP_GAIN * params.strength
    blurred = imaging.gaussian_blur(out, _UNSHARP_SIGMA).astype(np.float64)
    sharp = out.astype(np.float64) + amount * (out.astype(np.float64) - blurred)
    return np.clip(np.floor(sharp + 0.5), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# colorize: deterministic tone mapping
# ---------------------------------------------------------------------------

def colorize_reference(img: np.ndarray, params: StageParams) -> np.ndarray:
    """Map a grayscale image to 3 channels: `neutral` replicate or `sepia`.

    3-channel input is first collapsed to luma; mode comes from
    params.extras["mode"] and defaults to neutral.
    """
    imaging.validate_image(img)
    gray = imaging.to_grayscale(img)
    mode = params.extras.get("mode", "neutral")
    if mode not in COLORIZE_MODES:
        raise ParameterError(f"unknown colorize mode {mode!r}, expected one of {COLORIZE_MODES}")
    if mode == "neutral":
        return np.repeat(gray[:, :, None], 3, axis=2)
    v = gray.astype(np.float64)
    channels = [np.clip(np.floor(gain * v + 0.5), 0, 255).astype(np.uint8)
                for gain in SEPIA_GAINS]
    return np.stack(channels, axis=2)
