"""Deterministic raster primitives everything else builds on.

Images are 8-bit numpy arrays: shape (H, W) for grayscale, (H, W, 3) for
color, row-major, channel-interleaved. Masks are (H, W) uint8 arrays holding
only 0 and 255 (255 = damaged / to-restore). All operations are pure: same
inputs (seed included) give bit-identical outputs.

Conventions fixed for the whole repo:
  - luma: BT.601 (0.299 R + 0.587 G + 0.114 B), rounded half-up
  - border policy: edge replication for every filter
  - gaussian kernels: truncated at 3 sigma, renormalized to sum 1
  - RNG: numpy PCG64, always constructed through make_rng(seed)
"""

from __future__ import annotations

import math
from io import BytesIO
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ParameterError, ShapeError

BLUR_KINDS = ("gaussian", "median", "bilateral")
RESIZE_METHODS = ("nearest", "bilinear", "bicubic")

_PIL_RESAMPLE = {
    "nearest": Image.Resampling.NEAREST,
    "bilinear": Image.Resampling.BILINEAR,
    "bicubic": Image.Resampling.BICUBIC,
}


def make_rng(seed: int) -> np.random.Generator:
    """Repo-wide deterministic generator (PCG64) for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(master_seed: int, index: int) -> int:
    """Stable per-record seed derived from (master seed, record index)."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_image(img: np.ndarray) -> np.ndarray:
    """Check the 8-bit image contract; returns the array unchanged."""
    if not isinstance(img, np.ndarray):
        raise ShapeError(f"image must be a numpy array, got {type(img).__name__}")
    if img.dtype != np.uint8:
        raise ShapeError(f"image dtype must be uint8, got {img.dtype}")
    if img.ndim == 2:
        h, w = img.shape
    elif img.ndim == 3 and img.shape[2] == 3:
        h, w = img.shape[:2]
    else:
        raise ShapeError(f"image must be (H, W) or (H, W, 3), got shape {img.shape}")
    if h < 1 or w < 1:
        raise ShapeError(f"image dimensions must be >= 1, got {w}x{h}")
    return img


def validate_mask(mask: np.ndarray) -> np.ndarray:
    """Check the binary-mask contract (uint8, (H, W), values in {0, 255})."""
    if not isinstance(mask, np.ndarray) or mask.dtype != np.uint8 or mask.ndim != 2:
        raise ShapeError("mask must be a 2-D uint8 array")
    bad = (mask != 0) & (mask != 255)
    if bad.any():
        raise ShapeError("mask must be strictly binary (0 or 255)")
    return mask


def check_same_dims(img: np.ndarray, mask: np.ndarray) -> None:
    if img.shape[:2] != mask.shape[:2]:
        raise ShapeError(
            f"mask dims {mask.shape[1]}x{mask.shape[0]} do not match "
            f"image dims {img.shape[1]}x{img.shape[0]}"
        )


def channel_count(img: np.ndarray) -> int:
    return 1 if img.ndim == 2 else img.shape[2]


def _quantize(x: np.ndarray) -> np.ndarray:
    """Round half-up and clamp to the 8-bit range."""
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# color
# ---------------------------------------------------------------------------

def to_grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luma; identity (copy) on single-channel input."""
    validate_image(img)
    if img.ndim == 2:
        return img.copy()
    x = img.astype(np.float64)
    luma = 0.299 * x[:, :, 0] + 0.587 * x[:, :, 1] + 0.114 * x[:, :, 2]
    return _quantize(luma)


# ---------------------------------------------------------------------------
# blurring
# ---------------------------------------------------------------------------

def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """1-D gaussian taps over [-r, r] with r = ceil(3 sigma), summing to 1."""
    if sigma <= 0:
        raise ParameterError(f"gaussian sigma must be > 0, got {sigma}")
    radius = max(1, math.ceil(3.0 * sigma))
    taps = np.exp(-np.arange(-radius, radius + 1, dtype=np.float64) ** 2
                  / (2.0 * sigma * sigma))
    return taps / taps.sum()


def _per_channel(img: np.ndarray, fn) -> np.ndarray:
    if img.ndim == 2:
        return fn(img)
    out = np.empty_like(img)
    for c in range(img.shape[2]):
        out[:, :, c] = fn(img[:, :, c])
    return out


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    validate_image(img)
    taps = gaussian_kernel_1d(sigma)

    def blur_channel(ch: np.ndarray) -> np.ndarray:
        x = ch.astype(np.float64)
        x = ndimage.correlate1d(x, taps, axis=0, mode="nearest")
        x = ndimage.correlate1d(x, taps, axis=1, mode="nearest")
        return _quantize(x)

    return _per_channel(img, blur_channel)


def median_blur(img: np.ndarray, radius: int) -> np.ndarray:
    validate_image(img)
    if radius < 1:
        raise ParameterError(f"median radius must be >= 1, got {radius}")
    size = 2 * int(radius) + 1
    return _per_channel(img, lambda ch: ndimage.median_filter(ch, size=size, mode="nearest"))


def bilateral_blur(img: np.ndarray, sigma_spatial: float, sigma_range: float) -> np.ndarray:
    """Edge-preserving smoothing; channels are filtered independently."""
    validate_image(img)
    if sigma_spatial <= 0 or sigma_range <= 0:
        raise ParameterError(
            f"bilateral sigmas must be > 0, got spatial={sigma_spatial} range={sigma_range}"
        )
    radius = max(1, math.ceil(3.0 * sigma_spatial))
    offsets = [(dy, dx) for dy in range(-radius, radius + 1)
               for dx in range(-radius, radius + 1)]
    inv_2ss = 1.0 / (2.0 * sigma_spatial * sigma_spatial)
    inv_2sr = 1.0 / (2.0 * sigma_range * sigma_range)

    def filter_channel(ch: np.ndarray) -> np.ndarray:
        x = ch.astype(np.float64)
        padded = np.pad(x, radius, mode="edge")
        h, w = x.shape
        num = np.zeros_like(x)
        den = np.zeros_like(x)
        for dy, dx in offsets:
            shifted = padded[radius + dy:radius + dy + h, radius + dx:radius + dx + w]
            w_spatial = math.exp(-(dy * dy + dx * dx) * inv_2ss)
            weight = w_spatial * np.exp(-((shifted - x) ** 2) * inv_2sr)
            num += weight * shifted
            den += weight
        return _quantize(num / den)

    return _per_channel(img, filter_channel)


def apply_blur(img: np.ndarray, kind: str, **params) -> np.ndarray:
    """Dispatch to gaussian(sigma=) | median(radius=) | bilateral(sigma_spatial=, sigma_range=)."""
    if kind == "gaussian":
        return gaussian_blur(img, params["sigma"])
    if kind == "median":
        return median_blur(img, params["radius"])
    if kind == "bilateral":
        return bilateral_blur(img, params["sigma_spatial"], params["sigma_range"])
    raise ParameterError(f"unknown blur kind {kind!r}, expected one of {BLUR_KINDS}")


# ---------------------------------------------------------------------------
# resampling
# ---------------------------------------------------------------------------

def resize(img: np.ndarray, scale: float, method: str = "bilinear") -> np.ndarray:
    """Scale both dimensions by `scale`; output dims round(dim*scale), min 1."""
    validate_image(img)
    if scale <= 0:
        raise ParameterError(f"scale must be > 0, got {scale}")
    h, w = img.shape[:2]
    new_w = max(1, int(math.floor(w * scale + 0.5)))
    new_h = max(1, int(math.floor(h * scale + 0.5)))
    return resize_to(img, new_w, new_h, method)


def resize_to(img: np.ndarray, new_w: int, new_h: int, method: str = "bilinear") -> np.ndarray:
    validate_image(img)
    if method not in _PIL_RESAMPLE:
        raise ParameterError(f"unknown resize method {method!r}, expected one of {RESIZE_METHODS}")
    if new_w < 1 or new_h < 1:
        raise ParameterError(f"target dims must be >= 1, got {new_w}x{new_h}")
    if (new_w, new_h) == (img.shape[1], img.shape[0]) and method == "nearest":
        return img.copy()
    pil = Image.fromarray(img)
    out = np.asarray(pil.resize((new_w, new_h), resample=_PIL_RESAMPLE[method]))
    return np.ascontiguousarray(out)


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------

def add_gaussian_noise(img: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Per-pixel additive N(0, sigma^2), rounded and clamped to [0, 255]."""
    validate_image(img)
    if sigma < 0:
        raise ParameterError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return img.copy()
    noise = rng.normal(0.0, sigma, size=img.shape)
    return _quantize(img.astype(np.float64) + noise)


# ---------------------------------------------------------------------------
# PNG I/O
# ---------------------------------------------------------------------------

def load_png(path: str | Path) -> np.ndarray:
    """Read an 8-bit PNG (or any PIL-readable raster) as a 1- or 3-channel image."""
    with Image.open(path) as pil:
        if pil.mode == "L":
            arr = np.asarray(pil)
        elif pil.mode == "RGB":
            arr = np.asarray(pil)
        else:
            arr = np.asarray(pil.convert("RGB"))
    return validate_image(np.ascontiguousarray(arr))


def save_png(img: np.ndarray, path: str | Path) -> Path:
    validate_image(img)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img).save(path, format="PNG")
    return path


def encode_png(img: np.ndarray) -> bytes:
    validate_image(img)
    buf = BytesIO()
    Image.fromarray(img).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    try:
        with Image.open(BytesIO(data)) as pil:
            if pil.mode not in ("L", "RGB"):
                pil = pil.convert("RGB")
            arr = np.ascontiguousarray(np.asarray(pil))
    except Exception as exc:
        raise ShapeError(f"could not decode PNG payload: {exc}") from exc
    return validate_image(arr)
