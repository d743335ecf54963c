"""Staged old-photo restoration toolkit.

Core pieces: deterministic raster primitives (imaging), synthetic
degradation with ground-truth masks (degrade), the four-stage restoration
pipeline with classical reference backends and an external-model adapter
(stages, backends, pipeline), pixel metrics and ballot aggregation
(metrics, ballots, corpus), plus an HTTP service and CLI on top.
"""

from .degrade import DegradationRecipe, TierSet, build_dataset, degrade_tiers, pad_mask
from .imaging import load_png, make_rng, save_png, to_grayscale
from .metrics import MetricReport, masked_psnr, psnr, ssim
from .pipeline import RestorationSession, create_session, load_session, run_auto
from .presets import PipelinePreset, get_preset
from .stages import STAGE_ORDER, StageParams

__version__ = "0.1.0"

__all__ = [
    "DegradationRecipe",
    "MetricReport",
    "PipelinePreset",
    "RestorationSession",
    "STAGE_ORDER",
    "StageParams",
    "TierSet",
    "build_dataset",
    "create_session",
    "degrade_tiers",
    "get_preset",
    "load_png",
    "load_session",
    "make_rng",
    "masked_psnr",
    "pad_mask",
    "psnr",
    "run_auto",
    "save_png",
    "ssim",
    "to_grayscale",
    "__version__",
]
