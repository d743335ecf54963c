"""Synthetic old-photo degradation with ground-truth crack masks.

Four cumulative tiers are produced from a clean source image:

  g     grayscale
  gb    + blur or downscale (downscaled images are scaled back up so all
          tiers stay aligned)
  gbc   + cracks, with the exact binary mask retained as ground truth
  gbcn  + additive gaussian noise

Every random draw comes from a caller-supplied generator, so a (recipe,
seed) pair replays the whole tier set byte-for-byte. Cracks are random-walk
polylines stroked with a sampled width; the walk may branch.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import imaging
from .errors import ParameterError, ShapeError

log = logging.getLogger(__name__)

FILL_STYLES = ("white", "black", "speckle")

# direction jitter of the crack walk, radians per step
_TURN_SIGMA = 0.35
# speckle fill draws uniformly from this intensity band
_SPECKLE_LO, _SPECKLE_HI = 170, 255

SOURCE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass
class DegradationRecipe:
    """Parameter ranges driving tier synthesis; all sampling happens per image.

    Defaults are tuned to look like worn mid-century prints; they are
    configuration, not a contract.
    """

    blur_enabled: bool = True
    blur_kind_weights: dict[str, float] = field(
        default_factory=lambda: {"gaussian": 1 / 3, "median": 1 / 3, "bilateral": 1 / 3})
    gaussian_sigma_range: tuple[float, float] = (0.8, 2.5)
    median_radius_range: tuple[int, int] = (1, 2)
    bilateral_sigma_spatial_range: tuple[float, float] = (1.0, 3.0)
    bilateral_sigma_range_range: tuple[float, float] = (20.0, 60.0)
    downscale_factor_range: tuple[float, float] = (0.25, 0.5)
    downscale_probability: float = 0.5
    allow_blur_after_downscale: bool = False
    crack_count_range: tuple[int, int] = (1, 4)
    crack_walk_steps_range: tuple[int, int] = (30, 120)
    crack_width_range: tuple[int, int] = (2, 6)
    crack_branch_probability: float = 0.08
    crack_fill: str = "white"
    noise_sigma_range: tuple[float, float] = (5.0, 25.0)

    def __post_init__(self):
        for name in ("gaussian_sigma_range", "median_radius_range",
                     "bilateral_sigma_spatial_range", "bilateral_sigma_range_range",
                     "downscale_factor_range", "crack_count_range",
                     "crack_walk_steps_range", "crack_width_range",
                     "noise_sigma_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ParameterError(f"{name} must satisfy lo <= hi, got ({lo}, {hi})")
        for name in ("downscale_probability", "crack_branch_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ParameterError(f"{name} must be in [0, 1], got {p}")
        lo, hi = self.downscale_factor_range
        if not (0.0 < lo and hi <= 1.0):
            raise ParameterError(f"downscale_factor_range must sit in (0, 1], got ({lo}, {hi})")
        if self.crack_count_range[0] < 0:
            raise ParameterError("crack_count_range must be non-negative")
        if self.crack_width_range[0] < 1 and self.crack_count_range[1] > 0:
            raise ParameterError("crack_width_range must be >= 1 pixel")
        if self.noise_sigma_range[0] < 0:
            raise ParameterError("noise_sigma_range must be non-negative")
        if self.crack_fill not in FILL_STYLES:
            raise ParameterError(f"crack_fill must be one of {FILL_STYLES}, got {self.crack_fill!r}")
        total = sum(self.blur_kind_weights.values())
        if self.blur_kind_weights and abs(total - 1.0) > 1e-9:
            raise ParameterError(f"blur_kind_weights must sum to 1, got {total}")
        unknown = set(self.blur_kind_weights) - set(imaging.BLUR_KINDS)
        if unknown:
            raise ParameterError(f"unknown blur kinds in weights: {sorted(unknown)}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DegradationRecipe":
        kwargs = dict(data)
        for key, value in kwargs.items():
            if key.endswith("_range") and isinstance(value, list):
                kwargs[key] = tuple(value)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "DegradationRecipe":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class TierSet:
    """One image's four degradation tiers plus the crack ground truth."""

    g: np.ndarray
    gb: np.ndarray
    gbc: np.ndarray
    gbcn: np.ndarray
    crack_mask: np.ndarray
    recipe_draws: dict


# ---------------------------------------------------------------------------
# crack masks
# ---------------------------------------------------------------------------

def _disc_offsets(radius: float) -> np.ndarray:
    r = int(np.ceil(radius))
    ys, xs = np.mgrid[-r:r + 1, -r:r + 1]
    keep = ys * ys + xs * xs <= radius * radius + 1e-9
    return np.stack([ys[keep], xs[keep]], axis=1)


def _stamp_points(mask: np.ndarray, points: np.ndarray, width: int) -> None:
    h, w = mask.shape
    offsets = _disc_offsets(width / 2.0)
    ys = np.round(points[:, 0]).astype(np.int64)
    xs = np.round(points[:, 1]).astype(np.int64)
    all_y = (ys[:, None] + offsets[None, :, 0]).ravel()
    all_x = (xs[:, None] + offsets[None, :, 1]).ravel()
    keep = (all_y >= 0) & (all_y < h) & (all_x >= 0) & (all_x < w)
    mask[all_y[keep], all_x[keep]] = 255


def _walk(start_y: float, start_x: float, angle: float, steps: int,
          rng: np.random.Generator, branch_prob: float,
          branches: list) -> np.ndarray:
    points = np.empty((steps + 1, 2), dtype=np.float64)
    y, x = start_y, start_x
    points[0] = (y, x)
    for i in range(steps):
        angle += rng.normal(0.0, _TURN_SIGMA)
        y += np.sin(angle)
        x += np.cos(angle)
        points[i + 1] = (y, x)
        remaining = steps - (i + 1)
        if remaining >= 4 and rng.random() < branch_prob:
            side = 1.0 if rng.random() < 0.5 else -1.0
            branches.append((y, x, angle + side * rng.uniform(0.5, 1.2), remaining // 2))
    return points


def generate_crack_mask(width: int, height: int, recipe: DegradationRecipe,
                        rng: np.random.Generator) -> np.ndarray:
    """Binary crack mask from random-walk polylines; deterministic under seed."""
    if width < 8 or height < 8:
        raise ParameterError(f"mask dims must be >= 8x8, got {width}x{height}")
    mask = np.zeros((height, width), dtype=np.uint8)
    lo, hi = recipe.crack_count_range
    count = int(rng.integers(lo, hi + 1))
    for _ in range(count):
        steps = int(rng.integers(recipe.crack_walk_steps_range[0],
                                 recipe.crack_walk_steps_range[1] + 1))
        stroke = int(rng.integers(recipe.crack_width_range[0],
                                  recipe.crack_width_range[1] + 1))
        start_y = rng.uniform(0, height)
        start_x = rng.uniform(0, width)
        angle = rng.uniform(0, 2 * np.pi)
        pending = [(start_y, start_x, angle, steps)]
        while pending:
            y0, x0, a0, n = pending.pop(0)
            branches: list = []
            points = _walk(y0, x0, a0, n, rng, recipe.crack_branch_probability, branches)
            _stamp_points(mask, points, stroke)
            pending.extend(branches)
    return mask


def mask_coverage(mask: np.ndarray) -> float:
    """Fraction of pixels marked damaged."""
    imaging.validate_mask(mask)
    return float((mask > 0).sum()) / mask.size


def apply_crack(img: np.ndarray, mask: np.ndarray, fill: str,
                rng: np.random.Generator) -> np.ndarray:
    """Overwrite masked pixels with the fill style; unmasked pixels untouched."""
    imaging.validate_image(img)
    imaging.validate_mask(mask)
    imaging.check_same_dims(img, mask)
    if fill not in FILL_STYLES:
        raise ParameterError(f"fill must be one of {FILL_STYLES}, got {fill!r}")
    out = img.copy()
    hole = mask > 0
    if not hole.any():
        return out
    if fill == "white":
        out[hole] = 255
    elif fill == "black":
        out[hole] = 0
    else:
        n = int(hole.sum())
        if img.ndim == 2:
            out[hole] = rng.integers(_SPECKLE_LO, _SPECKLE_HI + 1, size=n, dtype=np.int64).astype(np.uint8)
        else:
            values = rng.integers(_SPECKLE_LO, _SPECKLE_HI + 1, size=(n, img.shape[2]),
                                  dtype=np.int64).astype(np.uint8)
            out[hole] = values
    return out


def pad_mask(mask: np.ndarray, radius: int) -> np.ndarray:
    """Dilate with a square structuring element of side 2*radius + 1."""
    imaging.validate_mask(mask)
    if radius < 0:
        raise ParameterError(f"pad radius must be >= 0, got {radius}")
    if radius == 0:
        return mask.copy()
    size = 2 * int(radius) + 1
    dilated = ndimage.maximum_filter(mask, size=size, mode="constant", cval=0)
    return dilated.astype(np.uint8)


# ---------------------------------------------------------------------------
# tier synthesis
# ---------------------------------------------------------------------------

def degrade_tiers(img: np.ndarray, recipe: DegradationRecipe,
                  rng: np.random.Generator) -> TierSet:
    """Run the full g -> gb -> gbc -> gbcn chain, recording every sampled value."""
    imaging.validate_image(img)
    draws: dict = {}

    g = imaging.to_grayscale(img)

    gb = g
    if recipe.blur_enabled:
        did_downscale = False
        if rng.random() < recipe.downscale_probability:
            factor = float(rng.uniform(*recipe.downscale_factor_range))
            draws["downscale_factor"] = factor
            h, w = g.shape
            small = imaging.resize(g, factor, "bilinear")
            gb = imaging.resize_to(small, w, h, "bilinear")
            did_downscale = True
        if not did_downscale or recipe.allow_blur_after_downscale:
            kinds = sorted(recipe.blur_kind_weights)
            weights = np.array([recipe.blur_kind_weights[k] for k in kinds])
            kind = kinds[int(rng.choice(len(kinds), p=weights / weights.sum()))]
            draws["blur_kind"] = kind
            if kind == "gaussian":
                sigma = float(rng.uniform(*recipe.gaussian_sigma_range))
                draws["gaussian_sigma"] = sigma
                gb = imaging.gaussian_blur(gb, sigma)
            elif kind == "median":
                radius = int(rng.integers(recipe.median_radius_range[0],
                                          recipe.median_radius_range[1] + 1))
                draws["median_radius"] = radius
                gb = imaging.median_blur(gb, radius)
            else:
                ss = float(rng.uniform(*recipe.bilateral_sigma_spatial_range))
                sr = float(rng.uniform(*recipe.bilateral_sigma_range_range))
                draws["bilateral_sigma_spatial"] = ss
                draws["bilateral_sigma_range"] = sr
                gb = imaging.bilateral_blur(gb, ss, sr)
    else:
        draws["blur_disabled"] = True
        gb = g.copy()

    h, w = gb.shape[:2]
    if recipe.crack_count_range[1] > 0 and (w < 8 or h < 8):
        raise ParameterError("image too small for crack synthesis (needs >= 8x8)")
    if recipe.crack_count_range[1] > 0:
        crack_mask = generate_crack_mask(w, h, recipe, rng)
    else:
        crack_mask = np.zeros((h, w), dtype=np.uint8)
    draws["crack_fill"] = recipe.crack_fill
    draws["crack_coverage"] = mask_coverage(crack_mask)
    gbc = apply_crack(gb, crack_mask, recipe.crack_fill, rng)

    sigma = float(rng.uniform(*recipe.noise_sigma_range))
    draws["noise_sigma"] = sigma
    gbcn = imaging.add_gaussian_noise(gbc, sigma, rng)

    return TierSet(g=g, gb=gb, gbc=gbc, gbcn=gbcn,
                   crack_mask=crack_mask, recipe_draws=draws)


# ---------------------------------------------------------------------------
# dataset builder
# ---------------------------------------------------------------------------

TIER_NAMES = ("g", "gb", "gbc", "gbcn")


def _list_sources(source_dir: Path) -> list[Path]:
    return sorted(p for p in source_dir.iterdir()
                  if p.suffix.lower() in SOURCE_EXTENSIONS and p.is_file())


def _build_record(index: int, src: Path, out_dir: Path, recipe: DegradationRecipe,
                  master_seed: int) -> dict:
    seed = imaging.derive_seed(master_seed, index)
    img = imaging.load_png(src)
    tiers = degrade_tiers(img, recipe, imaging.make_rng(seed))
    stem = f"{index:05d}_{src.stem}"
    record = {"source": str(src), "seed": seed}
    for tier in TIER_NAMES:
        rel = f"{stem}_{tier}.png"
        imaging.save_png(getattr(tiers, tier), out_dir / rel)
        record[f"tier_{tier}"] = rel
    mask_rel = f"{stem}_mask.png"
    imaging.save_png(tiers.crack_mask, out_dir / mask_rel)
    record["mask"] = mask_rel
    record["draws"] = tiers.recipe_draws
    return record


def build_dataset(source_dir: str | Path, output_dir: str | Path,
                  recipe: DegradationRecipe, count: int, seed: int,
                  jobs: int = 1) -> Path:
    """Degrade `count` images from source_dir; returns the manifest path.

    Output layout: per-image tier PNGs + mask PNG in output_dir plus
    manifest.jsonl (one JSON record per line: source, tier_*, mask, seed,
    draws). Fully deterministic for a given (seed, sorted source order);
    rerunning overwrites with identical bytes.
    """
    source_dir = Path(source_dir)
    output_dir = Path(output_dir)
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    if not source_dir.is_dir():
        raise ParameterError(f"source dir {source_dir} does not exist")
    sources = _list_sources(source_dir)
    if not sources:
        raise ParameterError(f"source dir {source_dir} contains no images")

    selected: list[Path] = []
    for path in sources:
        if len(selected) == count:
            break
        try:
            imaging.load_png(path)
        except (OSError, ShapeError) as exc:
            log.warning("skipping unreadable image %s: %s", path, exc)
            continue
        selected.append(path)
    if len(selected) < count:
        raise ParameterError(
            f"source dir has only {len(selected)} readable images, need {count}")

    output_dir.mkdir(parents=True, exist_ok=True)
    if jobs <= 1:
        records = [_build_record(i, src, output_dir, recipe, seed)
                   for i, src in enumerate(selected)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_build_record, i, src, output_dir, recipe, seed)
                       for i, src in enumerate(selected)]
            records = [f.result() for f in futures]

    manifest_path = output_dir / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return manifest_path


def read_manifest(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
