"""Named per-stage parameter bundles.

The built-in catalog ships three presets:

  default         the evaluated automatic-mode settings (null prompt,
                  strength 1.0, 30 steps, guidance 1.0 for damage removal;
                  "4K, DSLR", strength 0.008, 50 steps, guidance 3.0 for
                  denoise; face model tag v1.3 with 2x upscale; colorize
                  checkpoint tag "modelscope")
  strong-denoise  same but denoise strength 0.08, the alternate published
                  setting
  identity        zero-effect parameters at every stage; end-to-end output
                  equals the input apart from the 1->3 channel expansion at
                  colorize

A JSON catalog file can add or override presets by name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ParameterError
from .stages import STAGE_ORDER, StageParams


@dataclass
class PipelinePreset:
    name: str
    damage: StageParams
    denoise: StageParams
    face: StageParams
    colorize: StageParams

    def params_for(self, stage: str) -> StageParams:
        if stage not in STAGE_ORDER:
            raise ParameterError(f"unknown stage {stage!r}")
        return getattr(self, stage)

    def to_dict(self) -> dict:
        return {stage: self.params_for(stage).to_dict() for stage in STAGE_ORDER}

    @classmethod
    def from_dict(cls, name: str, data: dict) -> "PipelinePreset":
        missing = [s for s in STAGE_ORDER if s not in data]
        if missing:
            raise ParameterError(f"preset {name!r} is missing stages: {missing}")
        return cls(name=name, **{s: StageParams.from_dict(data[s]) for s in STAGE_ORDER})


def default_preset() -> PipelinePreset:
    return PipelinePreset(
        name="default",
        damage=StageParams(backend_id="damage.reference", strength=1.0, steps=30,
                           guidance=1.0, prompt=""),
        denoise=StageParams(backend_id="denoise.reference", strength=0.008, steps=50,
                            guidance=3.0, prompt="4K, DSLR"),
        face=StageParams(backend_id="face.reference", strength=0.5, steps=1,
                         guidance=0.0, checkpoint="v1.3", upscale=2),
        colorize=StageParams(backend_id="colorize.reference", strength=1.0, steps=1,
                             guidance=0.0, checkpoint="modelscope",
                             extras={"mode": "neutral"}),
    )


def strong_denoise_preset() -> PipelinePreset:
    preset = default_preset()
    return replace(preset, name="strong-denoise",
                   denoise=replace(preset.denoise, strength=0.08))


def identity_preset() -> PipelinePreset:
    return PipelinePreset(
        name="identity",
        damage=StageParams(backend_id="damage.skip"),
        denoise=StageParams(backend_id="denoise.reference", strength=0.0, steps=1),
        face=StageParams(backend_id="face.reference", strength=0.0, steps=1, upscale=1),
        colorize=StageParams(backend_id="colorize.reference",
                             extras={"mode": "neutral"}),
    )


def builtin_presets() -> dict[str, PipelinePreset]:
    presets = [default_preset(), strong_denoise_preset(), identity_preset()]
    return {p.name: p for p in presets}


def load_preset_catalog(path: str | Path | None = None) -> dict[str, PipelinePreset]:
    """Built-in presets, optionally extended/overridden by a JSON catalog file."""
    catalog = builtin_presets()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        entries = data.get("presets", data)
        for name, spec in entries.items():
            catalog[name] = PipelinePreset.from_dict(name, spec)
    return catalog


def get_preset(name: str, catalog: dict[str, PipelinePreset] | None = None) -> PipelinePreset:
    catalog = catalog if catalog is not None else builtin_presets()
    try:
        return catalog[name]
    except KeyError:
        raise ParameterError(
            f"unknown preset {name!r}; available: {sorted(catalog)}") from None


_FIELD_TYPES = {
    "backend_id": str, "strength": float, "steps": int, "guidance": float,
    "prompt": str, "checkpoint": str, "upscale": int, "seed": int,
}


def apply_overrides(preset: PipelinePreset, overrides: list[str]) -> PipelinePreset:
    """Apply `stage.field=value` overrides (e.g. denoise.strength=0.05).

    Extras entries use `stage.extras.key=value`.
    """
    updated = {stage: preset.params_for(stage) for stage in STAGE_ORDER}
    for item in overrides:
        if "=" not in item:
            raise ParameterError(f"override {item!r} must look like stage.field=value")
        key, value = item.split("=", 1)
        parts = key.split(".")
        if len(parts) == 3 and parts[1] == "extras":
            stage, _, extra_key = parts
            if stage not in STAGE_ORDER:
                raise ParameterError(f"unknown stage in override {item!r}")
            params = updated[stage]
            extras = dict(params.extras)
            extras[extra_key] = value
            updated[stage] = replace(params, extras=extras)
            continue
        if len(parts) != 2:
            raise ParameterError(f"override {item!r} must look like stage.field=value")
        stage, fieldname = parts
        if stage not in STAGE_ORDER:
            raise ParameterError(f"unknown stage in override {item!r}")
        if fieldname not in _FIELD_TYPES:
            raise ParameterError(f"unknown field in override {item!r}")
        updated[stage] = replace(updated[stage], **{fieldname: _FIELD_TYPES[fieldname](value)})
    return PipelinePreset(name=preset.name, **updated)
