"""Pixel metrics for regression testing restorations against originals.

PSNR is capped at 99.0 dB so identical pairs don't put infinities in
tables. SSIM uses the standard stabilizers for the 8-bit range and
non-overlapping 8x8 windows (stride 8); rows/columns past the last full
window are ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import imaging
from .errors import RegionError, ShapeError

PSNR_CAP_DB = 99.0

_SSIM_WINDOW = 8
_SSIM_C1 = (0.01 * 255.0) ** 2
_SSIM_C2 = (0.03 * 255.0) ** 2


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float
    psnr_in_mask: float | None = None
    psnr_out_mask: float | None = None

    def to_row(self) -> dict:
        return {
            "psnr": round(self.psnr_db, 4),
            "ssim": round(self.ssim, 6),
            "psnr_in_mask": None if self.psnr_in_mask is None else round(self.psnr_in_mask, 4),
            "psnr_out_mask": None if self.psnr_out_mask is None else round(self.psnr_out_mask, 4),
        }


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    imaging.validate_image(a)
    imaging.validate_image(b)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")


def mse(a: np.ndarray, b: np.ndarray) -> float:
    _check_pair(a, b)
    diff = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(diff * diff))


def _psnr_from_mse(value: float) -> float:
    if value <= 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(255.0 ** 2 / value))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10 log10(255^2 / MSE), in dB, capped at 99.0."""
    return _psnr_from_mse(mse(a, b))


def masked_psnr(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> tuple[float, float]:
    """(inside-mask dB, outside-mask dB); both regions must be non-empty."""
    _check_pair(a, b)
    imaging.validate_mask(mask)
    imaging.check_same_dims(a, mask)
    inside = mask > 0
    if not inside.any() or inside.all():
        raise RegionError("masked PSNR needs both a non-empty and a non-full region")
    diff = a.astype(np.float64) - b.astype(np.float64)
    sq = diff * diff
    if a.ndim == 3:
        inside3 = np.repeat(inside[:, :, None], 3, axis=2)
        mse_in = float(sq[inside3].mean())
        mse_out = float(sq[~inside3].mean())
    else:
        mse_in = float(sq[inside].mean())
        mse_out = float(sq[~inside].mean())
    return _psnr_from_mse(mse_in), _psnr_from_mse(mse_out)


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM over non-overlapping 8x8 windows (per channel)."""
    _check_pair(a, b)
    h, w = a.shape[:2]
    if h < _SSIM_WINDOW or w < _SSIM_WINDOW:
        raise ShapeError(f"ssim needs at least {_SSIM_WINDOW}x{_SSIM_WINDOW} images, got {w}x{h}")
    if a.ndim == 2:
        planes = [(a, b)]
    else:
        planes = [(a[:, :, c], b[:, :, c]) for c in range(a.shape[2])]
    scores = []
    for pa, pb in planes:
        scores.append(_ssim_plane(pa.astype(np.float64), pb.astype(np.float64)))
    return float(np.mean(scores))


def _ssim_plane(x: np.ndarray, y: np.ndarray) -> float:
    h, w = x.shape
    wh = (h // _SSIM_WINDOW) * _SSIM_WINDOW
    ww = (w // _SSIM_WINDOW) * _SSIM_WINDOW
    x = x[:wh, :ww].reshape(wh // _SSIM_WINDOW, _SSIM_WINDOW, ww // _SSIM_WINDOW, _SSIM_WINDOW)
    y = y[:wh, :ww].reshape(wh // _SSIM_WINDOW, _SSIM_WINDOW, ww // _SSIM_WINDOW, _SSIM_WINDOW)
    x = x.transpose(0, 2, 1, 3).reshape(-1, _SSIM_WINDOW * _SSIM_WINDOW)
    y = y.transpose(0, 2, 1, 3).reshape(-1, _SSIM_WINDOW * _SSIM_WINDOW)
    mx = x.mean(axis=1)
    my = y.mean(axis=1)
    vx = x.var(axis=1)
    vy = y.var(axis=1)
    cov = ((x - mx[:, None]) * (y - my[:, None])).mean(axis=1)
    num = (2 * mx * my + _SSIM_C1) * (2 * cov + _SSIM_C2)
    den = (mx * mx + my * my + _SSIM_C1) * (vx + vy + _SSIM_C2)
    return float(np.mean(num / den))


def report(a: np.ndarray, b: np.ndarray, mask: np.ndarray | None = None) -> MetricReport:
    """Full metric bundle for one restored/original pair."""
    in_db = out_db = None
    if mask is not None:
        in_db, out_db = masked_psnr(a, b, mask)
    return MetricReport(psnr_db=psnr(a, b), ssim=ssim(a, b),
                        psnr_in_mask=in_db, psnr_out_mask=out_db)
