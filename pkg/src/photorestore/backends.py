"""Backend registry and the file-protocol adapter for external deep models.

A backend is either `reference` (a classical algorithm from stages.py, or a
no-op "skip"), or `external`: a separate program invoked through a strict
file protocol so model weights never enter this package. The protocol, per
call, inside an isolated workdir:

  input.png   written by us (plus mask.png when a mask applies)
  params.txt  UTF-8 key=value lines: strength, steps, guidance, prompt,
              checkpoint, upscale, seed, extra.<key> entries
  output.png  must be written by the program; exit code 0 means success

Placeholders {input}, {mask}, {output}, {params} in the command template are
substituted with absolute paths before the program runs.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imaging, stages
from .errors import (
    BackendFailure,
    BackendTimeout,
    DuplicateBackendError,
    ParameterError,
    ProtocolError,
    UnknownBackendError,
)
from .stages import STAGE_ORDER, StageParams

DEFAULT_TIMEOUT_S = 300.0

_PARAMS_SCHEMA = {
    "strength": {"type": "number", "min": 0.0, "max": 1.0},
    "steps": {"type": "integer", "min": 1},
    "guidance": {"type": "number", "min": 0.0},
    "prompt": {"type": "string"},
    "checkpoint": {"type": "string"},
    "upscale": {"type": "integer", "min": 1},
    "seed": {"type": "integer"},
}


@dataclass
class BackendDescriptor:
    backend_id: str
    stage: str
    kind: str  # "reference" | "external"
    command_template: str = ""
    requires_mask: bool = False
    timeout_s: float = DEFAULT_TIMEOUT_S
    params_schema: dict = field(default_factory=lambda: dict(_PARAMS_SCHEMA))

    def __post_init__(self):
        if self.stage not in STAGE_ORDER:
            raise ParameterError(f"unknown stage {self.stage!r}, expected one of {STAGE_ORDER}")
        if self.kind not in ("reference", "external"):
            raise ParameterError(f"backend kind must be reference or external, got {self.kind!r}")
        if self.kind == "external" and not self.command_template:
            raise ParameterError(f"external backend {self.backend_id!r} needs a command_template")

    def public_view(self) -> dict:
        # command templates stay server-side; clients only need identity + schema
        return {
            "backend_id": self.backend_id,
            "stage": self.stage,
            "kind": self.kind,
            "requires_mask": self.requires_mask,
            "params_schema": self.params_schema,
        }


class BackendRegistry:
    """Id-unique backend catalog; read-mostly, mutation serialized."""

    def __init__(self):
        self._backends: dict[str, BackendDescriptor] = {}
        self._lock = threading.Lock()

    def register(self, descriptor: BackendDescriptor) -> None:
        with self._lock:
            if descriptor.backend_id in self._backends:
                raise DuplicateBackendError(
                    f"backend id {descriptor.backend_id!r} already registered")
            self._backends[descriptor.backend_id] = descriptor

    def resolve(self, backend_id: str) -> BackendDescriptor:
        try:
            return self._backends[backend_id]
        except KeyError:
            raise UnknownBackendError(f"no backend registered with id {backend_id!r}") from None

    def list(self, stage: str | None = None) -> list[BackendDescriptor]:
        backends = sorted(self._backends.values(), key=lambda b: b.backend_id)
        if stage is None:
            return backends
        return [b for b in backends if b.stage == stage]


def build_default_registry() -> BackendRegistry:
    """Reference + skip backends for all four stages."""
    registry = BackendRegistry()
    for stage in STAGE_ORDER:
        registry.register(BackendDescriptor(
            backend_id=f"{stage}.reference", stage=stage, kind="reference",
            requires_mask=(stage == "damage")))
        registry.register(BackendDescriptor(
            backend_id=f"{stage}.skip", stage=stage, kind="reference"))
    return registry


def load_backend_file(registry: BackendRegistry, path: str | Path) -> list[BackendDescriptor]:
    """Register external backends declared in a JSON descriptor file."""
    import json

    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    entries = data["backends"] if isinstance(data, dict) else data
    added = []
    for entry in entries:
        descriptor = BackendDescriptor(
            backend_id=entry["backend_id"],
            stage=entry["stage"],
            kind="external",
            command_template=entry["command_template"],
            requires_mask=bool(entry.get("requires_mask", entry["stage"] == "damage")),
            timeout_s=float(entry.get("timeout_s", DEFAULT_TIMEOUT_S)),
        )
        registry.register(descriptor)
        added.append(descriptor)
    return added


# ---------------------------------------------------------------------------
# external protocol
# ---------------------------------------------------------------------------

def format_params_file(params: StageParams) -> str:
    lines = [
        f"strength={params.strength}",
        f"steps={params.steps}",
        f"guidance={params.guidance}",
        f"prompt={params.prompt}",
        f"checkpoint={params.checkpoint}",
        f"upscale={params.upscale}",
        f"seed={params.seed}",
    ]
    for key in sorted(params.extras):
        lines.append(f"extra.{key}={params.extras[key]}")
    return "\n".join(lines) + "\n"


def run_external_backend(descriptor: BackendDescriptor, img: np.ndarray,
                         mask: np.ndarray | None, params: StageParams,
                         workdir: str | Path, timeout_s: float | None = None) -> np.ndarray:
    """Run one external-backend call inside `workdir` and return output.png.

    Raises BackendFailure on nonzero exit (with captured diagnostics),
    BackendTimeout past the wall-clock budget, and ProtocolError when
    output.png is missing, unreadable, or has the wrong geometry.
    """
    if descriptor.kind != "external":
        raise ParameterError(f"backend {descriptor.backend_id!r} is not external")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    stage = descriptor.stage
    budget = descriptor.timeout_s if timeout_s is None else timeout_s

    input_path = workdir / "input.png"
    output_path = workdir / "output.png"
    params_path = workdir / "params.txt"
    imaging.save_png(img, input_path)
    mask_path = ""
    if mask is not None:
        imaging.validate_mask(mask)
        imaging.check_same_dims(img, mask)
        mask_path = str(workdir / "mask.png")
        imaging.save_png(mask, Path(mask_path))
    params_path.write_text(format_params_file(params), encoding="utf-8")

    command = descriptor.command_template.format(
        input=str(input_path), mask=mask_path,
        output=str(output_path), params=str(params_path))
    try:
        proc = subprocess.run(shlex.split(command), capture_output=True,
                              text=True, timeout=budget)
    except subprocess.TimeoutExpired:
        raise BackendTimeout(
            f"backend {descriptor.backend_id!r} exceeded {budget:.0f}s", stage=stage)
    except OSError as exc:
        raise BackendFailure(
            f"backend {descriptor.backend_id!r} could not be launched: {exc}",
            stage=stage, diagnostics=str(exc))
    if proc.returncode != 0:
        diagnostics = (proc.stderr or proc.stdout or "").strip()
        raise BackendFailure(
            f"backend {descriptor.backend_id!r} exited {proc.returncode}",
            stage=stage, exit_code=proc.returncode, diagnostics=diagnostics)

    if not output_path.is_file():
        raise ProtocolError(
            f"backend {descriptor.backend_id!r} wrote no output.png", stage=stage)
    try:
        out = imaging.load_png(output_path)
    except Exception as exc:
        raise ProtocolError(
            f"backend {descriptor.backend_id!r} wrote corrupt output.png: {exc}",
            stage=stage)
    expected_w = img.shape[1] * params.upscale
    expected_h = img.shape[0] * params.upscale
    if out.shape[1] != expected_w or out.shape[0] != expected_h:
        raise ProtocolError(
            f"backend {descriptor.backend_id!r} returned {out.shape[1]}x{out.shape[0]}, "
            f"expected {expected_w}x{expected_h}", stage=stage)
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def run_backend(registry: BackendRegistry, stage: str, img: np.ndarray,
                mask: np.ndarray | None, params: StageParams,
                workdir_root: str | Path | None = None,
                timeout_s: float | None = None) -> np.ndarray:
    """Compute one stage output through whichever backend params name."""
    descriptor = registry.resolve(params.backend_id)
    if descriptor.stage != stage:
        raise ParameterError(
            f"backend {params.backend_id!r} serves stage {descriptor.stage!r}, "
            f"not {stage!r}")
    if descriptor.requires_mask and mask is None:
        raise ParameterError(f"backend {params.backend_id!r} requires a mask")

    if descriptor.kind == "external":
        if workdir_root is not None:
            workdir = tempfile.mkdtemp(prefix=f"{stage}-", dir=str(workdir_root))
        else:
            workdir = tempfile.mkdtemp(prefix=f"photorestore-{stage}-")
        return run_external_backend(descriptor, img,
                                    mask if stage == "damage" else None,
                                    params, workdir, timeout_s=timeout_s)

    if descriptor.backend_id.endswith(".skip"):
        return img.copy()
    if stage == "damage":
        return stages.inpaint_reference(img, mask, params)
    if stage == "denoise":
        return stages.denoise_reference(img, params)
    if stage == "face":
        return stages.face_restore_reference(img, params)
    return stages.colorize_reference(img, params)
