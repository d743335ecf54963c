"""Session state machine: preview, commit ("Move"), rollback, automatic mode.

A session walks the fixed stage order damage -> denoise -> face -> colorize.
Stage k's input is stage k-1's committed output; previews compute the same
candidate without mutating anything. Rollback discards the commits at and
after the target stage.

Sessions can live purely in memory or be rooted in a directory, in which
case every commit persists the output image, the mask actually used, a
state.json snapshot and a transcript.jsonl whose replay reproduces the final
image bit-exactly (reference backends). Timestamps are wall-clock bookkeeping
and take no part in determinism.
"""

from __future__ import annotations

import json
import shutil
import threading
import time
import uuid
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import imaging
from .backends import BackendRegistry, build_default_registry, run_backend
from .errors import ParameterError, RollbackRangeError, StateError
from .presets import PipelinePreset, default_preset
from .stages import STAGE_ORDER, StageParams

STATE_FILE = "state.json"
TRANSCRIPT_FILE = "transcript.jsonl"
ORIGINAL_FILE = "original.png"
PENDING_MASK_FILE = "pending_mask.png"


@dataclass
class StageCommit:
    stage: str
    params: StageParams
    mask: np.ndarray | None
    output: np.ndarray
    committed_at: float


class RestorationSession:
    """One photo's restoration in progress."""

    def __init__(self, original: np.ndarray, preset: PipelinePreset,
                 registry: BackendRegistry | None = None,
                 session_id: str | None = None,
                 root: str | Path | None = None,
                 created_at: float | None = None):
        imaging.validate_image(original)
        self.session_id = session_id or uuid.uuid4().hex
        self.original = original.copy()
        self.original.setflags(write=False)
        self.preset = preset
        self.registry = registry if registry is not None else build_default_registry()
        self.commits: list[StageCommit] = []
        self.pending_mask: np.ndarray | None = None
        self.created_at = created_at if created_at is not None else time.time()
        self.root = Path(root) if root is not None else None
        self.lock = threading.RLock()
        if self.root is not None:
            self._persist_initial()

    # -- state ------------------------------------------------------------

    @property
    def cursor(self) -> int:
        return len(self.commits)

    @property
    def status(self) -> str:
        return "complete" if self.cursor == len(STAGE_ORDER) else "active"

    def current_stage(self) -> str | None:
        if self.status == "complete":
            return None
        return STAGE_ORDER[self.cursor]

    def stage_input(self) -> np.ndarray:
        return self.commits[-1].output if self.commits else self.original

    def result(self) -> np.ndarray:
        if self.status != "complete":
            raise StateError(f"session {self.session_id} is not complete "
                             f"(cursor {self.cursor})")
        return self.commits[-1].output

    def to_state_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "preset": self.preset.to_dict(),
            "preset_name": self.preset.name,
            "created_at": self.created_at,
            "cursor": self.cursor,
            "status": self.status,
            "commits": [
                {
                    "stage": c.stage,
                    "params": c.params.to_dict(),
                    "mask": self._mask_ref(i) if c.mask is not None else None,
                    "output": self._output_ref(i),
                    "committed_at": c.committed_at,
                }
                for i, c in enumerate(self.commits)
            ],
        }

    # -- mask handling ----------------------------------------------------

    def set_mask(self, mask: np.ndarray) -> None:
        """Attach the damage-stage mask (kept until commit consumes it)."""
        imaging.validate_mask(mask)
        imaging.check_same_dims(self.original, mask)
        with self.lock:
            self.pending_mask = mask.copy()
            if self.root is not None:
                imaging.save_png(self.pending_mask, self.root / PENDING_MASK_FILE)

    def attach_mask_png(self, data: bytes) -> None:
        """Attach an uploaded mask PNG, keeping the payload bytes verbatim."""
        mask = imaging.decode_png(data)
        if mask.ndim != 2:
            raise ParameterError("mask PNG must be single-channel")
        imaging.validate_mask(mask)
        imaging.check_same_dims(self.original, mask)
        with self.lock:
            self.pending_mask = mask
            if self.root is not None:
                (self.root / PENDING_MASK_FILE).write_bytes(data)

    def mask_png_bytes(self) -> bytes | None:
        """The attached mask as PNG bytes (the uploaded payload when rooted)."""
        if self.root is not None and (self.root / PENDING_MASK_FILE).is_file():
            return (self.root / PENDING_MASK_FILE).read_bytes()
        if self.pending_mask is not None:
            return imaging.encode_png(self.pending_mask)
        return None

    # -- compute ----------------------------------------------------------

    def _resolve_mask(self, stage: str, mask: np.ndarray | None) -> np.ndarray | None:
        if mask is not None and stage != "damage":
            raise ParameterError(f"masks are only accepted at the damage stage, not {stage!r}")
        if stage != "damage":
            return None
        chosen = mask if mask is not None else self.pending_mask
        if chosen is not None:
            imaging.validate_mask(chosen)
            imaging.check_same_dims(self.stage_input(), chosen)
        return chosen

    def _compute(self, params: StageParams, mask: np.ndarray | None) -> tuple[np.ndarray, np.ndarray | None]:
        if self.status == "complete":
            raise StateError(f"session {self.session_id} is already complete")
        stage = STAGE_ORDER[self.cursor]
        used_mask = self._resolve_mask(stage, mask)
        workdir_root = self.root if self.root is not None else None
        output = run_backend(self.registry, stage, self.stage_input(), used_mask,
                             params, workdir_root=workdir_root)
        return output, used_mask

    def preview(self, params: StageParams, mask: np.ndarray | None = None) -> np.ndarray:
        """Candidate output for the current stage; session state untouched."""
        with self.lock:
            output, _ = self._compute(params, mask)
        return output

    def commit(self, params: StageParams, mask: np.ndarray | None = None) -> "RestorationSession":
        """Compute the current stage and advance the cursor (the Move action)."""
        with self.lock:
            output, used_mask = self._compute(params, mask)
            self.commits.append(StageCommit(
                stage=STAGE_ORDER[self.cursor], params=params,
                mask=None if used_mask is None else used_mask.copy(),
                output=output, committed_at=time.time()))
            if self.root is not None:
                self._persist_commit(len(self.commits) - 1)
                self._persist_state()
        return self

    def rollback(self, to_stage: int) -> "RestorationSession":
        """Discard commits at and after `to_stage`; cursor moves back to it."""
        with self.lock:
            if not 0 <= to_stage <= self.cursor:
                raise RollbackRangeError(
                    f"rollback target {to_stage} outside [0, {self.cursor}]")
            dropped = range(to_stage, len(self.commits))
            self.commits = self.commits[:to_stage]
            if self.root is not None:
                for i in dropped:
                    for path in (self.root / self._output_ref(i),
                                 self.root / self._mask_ref(i)):
                        path.unlink(missing_ok=True)
                self._persist_state()
        return self

    # -- persistence ------------------------------------------------------

    def _output_ref(self, index: int) -> str:
        return f"outputs/stage{index}_{STAGE_ORDER[index]}.png"

    def _mask_ref(self, index: int) -> str:
        return f"masks/stage{index}_{STAGE_ORDER[index]}.png"

    def _persist_initial(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        imaging.save_png(self.original, self.root / ORIGINAL_FILE)
        self._persist_state()

    def _persist_commit(self, index: int) -> None:
        commit = self.commits[index]
        imaging.save_png(commit.output, self.root / self._output_ref(index))
        if commit.mask is not None:
            imaging.save_png(commit.mask, self.root / self._mask_ref(index))

    def _persist_state(self) -> None:
        state_path = self.root / STATE_FILE
        state_path.write_text(
            json.dumps(self.to_state_dict(), sort_keys=True, indent=2) + "\n",
            encoding="utf-8")
        transcript_path = self.root / TRANSCRIPT_FILE
        with open(transcript_path, "w", encoding="utf-8", newline="\n") as fh:
            for i, commit in enumerate(self.commits):
                fh.write(json.dumps({
                    "stage": commit.stage,
                    "backend_id": commit.params.backend_id,
                    "params": commit.params.to_dict(),
                    "mask": self._mask_ref(i) if commit.mask is not None else None,
                    "output": self._output_ref(i),
                    "seed": commit.params.seed,
                }, sort_keys=True) + "\n")


def create_session(img: np.ndarray, preset: PipelinePreset | None = None,
                   registry: BackendRegistry | None = None,
                   root: str | Path | None = None,
                   session_id: str | None = None) -> RestorationSession:
    """Fresh session at cursor 0; the original is stored immutably."""
    preset = preset if preset is not None else default_preset()
    return RestorationSession(img, preset, registry=registry, root=root,
                              session_id=session_id)


def load_session(root: str | Path, registry: BackendRegistry | None = None) -> RestorationSession:
    """Rehydrate a persisted session directory."""
    root = Path(root)
    state = json.loads((root / STATE_FILE).read_text(encoding="utf-8"))
    original = imaging.load_png(root / ORIGINAL_FILE)
    preset = PipelinePreset.from_dict(state.get("preset_name", "default"), state["preset"])
    session = RestorationSession(original, preset, registry=registry,
                                 session_id=state["session_id"],
                                 created_at=state["created_at"])
    for entry in state["commits"]:
        mask = imaging.load_png(root / entry["mask"]) if entry["mask"] else None
        if mask is not None and mask.ndim != 2:
            mask = imaging.to_grayscale(mask)
        session.commits.append(StageCommit(
            stage=entry["stage"],
            params=StageParams.from_dict(entry["params"]),
            mask=mask,
            output=imaging.load_png(root / entry["output"]),
            committed_at=entry["committed_at"]))
    pending = root / PENDING_MASK_FILE
    if pending.is_file():
        session.pending_mask = imaging.load_png(pending)
    session.root = root  # set after replaying state so loading never rewrites
    return session


def delete_session_dir(root: str | Path) -> None:
    shutil.rmtree(root, ignore_errors=True)


# ---------------------------------------------------------------------------
# automatic mode
# ---------------------------------------------------------------------------

def run_auto_session(img: np.ndarray, preset: PipelinePreset | None = None,
                     mask: np.ndarray | None = None,
                     registry: BackendRegistry | None = None,
                     root: str | Path | None = None) -> RestorationSession:
    """create_session + four commits with the preset's parameters.

    When no mask is supplied and the damage backend demands one, the damage
    stage falls back to the skip backend (real photos may carry no damage
    annotation).
    """
    preset = preset if preset is not None else default_preset()
    registry = registry if registry is not None else build_default_registry()
    session = create_session(img, preset, registry=registry, root=root)
    if mask is not None:
        session.set_mask(mask)
    for stage in STAGE_ORDER:
        params = preset.params_for(stage)
        if stage == "damage" and mask is None:
            descriptor = registry.resolve(params.backend_id)
            if descriptor.requires_mask:
                params = replace(params, backend_id="damage.skip")
        session.commit(params)
    return session


def run_auto(img: np.ndarray, preset: PipelinePreset | None = None,
             mask: np.ndarray | None = None,
             registry: BackendRegistry | None = None) -> np.ndarray:
    """Fully automatic end-to-end restoration; returns the final image."""
    return run_auto_session(img, preset, mask=mask, registry=registry).result()


# ---------------------------------------------------------------------------
# transcript replay
# ---------------------------------------------------------------------------

def read_transcript(root: str | Path) -> list[dict]:
    records = []
    with open(Path(root) / TRANSCRIPT_FILE, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def replay_transcript(root: str | Path,
                      registry: BackendRegistry | None = None) -> np.ndarray:
    """Recompute a persisted session from its transcript; returns the final image.

    With reference backends the result is bit-identical to the stored
    outputs, which is the repo's replayability guarantee.
    """
    root = Path(root)
    registry = registry if registry is not None else build_default_registry()
    records = read_transcript(root)
    current = imaging.load_png(root / ORIGINAL_FILE)
    for i, record in enumerate(records):
        stage = record["stage"]
        if stage != STAGE_ORDER[i]:
            raise StateError(f"transcript stage order broken at index {i}: {stage!r}")
        params = StageParams.from_dict(record["params"])
        mask = None
        if record.get("mask"):
            mask = imaging.load_png(root / record["mask"])
            if mask.ndim != 2:
                mask = imaging.to_grayscale(mask)
        current = run_backend(registry, stage, current, mask, params)
    return current
