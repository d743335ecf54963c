"""End-to-end corpus evaluation over a degradation manifest.

For each manifest record: load the noisiest tier (gbcn) and the crack mask,
pad the mask, run the automatic pipeline, and score the result against the
record's clean grayscale tier. Emits a CSV table with one row per image plus
an aggregate row; records whose files are missing become failure rows and
the run continues.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import degrade, imaging, metrics
from .backends import BackendRegistry
from .errors import ParameterError
from .pipeline import run_auto
from .presets import PipelinePreset

log = logging.getLogger(__name__)

TABLE_COLUMNS = ("image_id", "status", "psnr", "ssim", "psnr_in_mask",
                 "psnr_out_mask", "psnr_degraded")


def evaluate_record(record: dict, base_dir: Path, preset: PipelinePreset,
                    pad_radius: int,
                    registry: BackendRegistry | None = None) -> dict:
    image_id = Path(record["tier_gbcn"]).stem
    try:
        original = imaging.load_png(base_dir / record["tier_g"])
        degraded = imaging.load_png(base_dir / record["tier_gbcn"])
        mask = imaging.load_png(base_dir / record["mask"])
        if mask.ndim != 2:
            mask = imaging.to_grayscale(mask)
        padded = degrade.pad_mask(mask, pad_radius)
        restored = run_auto(degraded, preset, mask=padded, registry=registry)
        restored = _match_geometry(restored, original)
        rep = metrics.report(restored, _match_channels(original, restored),
                             mask=padded if 0 < (padded > 0).sum() < padded.size else None)
        row = {"image_id": image_id, "status": "ok",
               "psnr_degraded": round(metrics.psnr(degraded, original), 4)}
        row.update(rep.to_row())
        return row
    except Exception as exc:
        log.warning("record %s failed: %s", image_id, exc)
        return {"image_id": image_id, "status": f"error: {exc}", "psnr": None,
                "ssim": None, "psnr_in_mask": None, "psnr_out_mask": None,
                "psnr_degraded": None}


def _match_geometry(restored, original):
    """Scale the restored image back to the original's grid when upscaled."""
    if restored.shape[:2] != original.shape[:2]:
        restored = imaging.resize_to(restored, original.shape[1], original.shape[0],
                                     "bilinear")
    return restored


def _match_channels(original, restored):
    """Expand the gray original when the pipeline produced color."""
    if restored.ndim == 3 and original.ndim == 2:
        return np.repeat(original[:, :, None], 3, axis=2)
    return original


def corpus_eval(manifest_path: str | Path, preset: PipelinePreset,
                pad_radius: int, out_path: str | Path,
                registry: BackendRegistry | None = None, jobs: int = 1) -> Path:
    """Evaluate a whole manifest; writes the CSV table and returns its path."""
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ParameterError(f"manifest {manifest_path} does not exist")
    if pad_radius < 0:
        raise ParameterError(f"pad radius must be >= 0, got {pad_radius}")
    records = degrade.read_manifest(manifest_path)
    base_dir = manifest_path.parent

    if jobs <= 1:
        rows = [evaluate_record(r, base_dir, preset, pad_radius, registry)
                for r in records]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(evaluate_record, r, base_dir, preset,
                                   pad_radius, registry) for r in records]
            rows = [f.result() for f in futures]

    ok_rows = [r for r in rows if r["status"] == "ok"]
    aggregate = {"image_id": "AGGREGATE", "status": f"ok={len(ok_rows)}/{len(rows)}"}
    for col in ("psnr", "ssim", "psnr_in_mask", "psnr_out_mask", "psnr_degraded"):
        values = [r[col] for r in ok_rows if r[col] is not None]
        aggregate[col] = round(sum(values) / len(values), 4) if values else None

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        for row in rows + [aggregate]:
            writer.writerow({col: ("" if row.get(col) is None else row.get(col))
                             for col in TABLE_COLUMNS})
    return out_path
