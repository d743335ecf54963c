"""Session-scoped HTTP API: the browser UI's backend and automation surface.

Every successful call maps 1:1 onto a pipeline operation, so replaying a
recorded call sequence against a fresh server reproduces the same final
image (reference backends). Sessions persist to disk and survive restarts.

Status mapping: 404 unknown session, 409 state errors (commit on a complete
session, rollback out of range, result before completion), 422 invalid
params or mask geometry, 502 external backend failures. Error bodies are
machine readable: {"code", "message", "stage"}.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, File, Form, Request, Response, UploadFile
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import imaging
from .backends import BackendRegistry, build_default_registry, load_backend_file
from .errors import (
    BackendError,
    BackendFailure,
    BackendTimeout,
    ParameterError,
    PhotoRestoreError,
    ShapeError,
    StateError,
    UnknownBackendError,
    UnknownSessionError,
)
from .pipeline import (
    STATE_FILE,
    RestorationSession,
    create_session,
    delete_session_dir,
    load_session,
)
from .presets import PipelinePreset, get_preset, load_preset_catalog
from .stages import STAGE_ORDER, StageParams

DEFAULT_MAX_SESSION_AGE_S = 24 * 3600.0


@dataclass
class ServiceConfig:
    session_root: Path
    backend_file: Path | None = None
    preset_file: Path | None = None
    external_timeout_s: float | None = None
    max_session_age_s: float = DEFAULT_MAX_SESSION_AGE_S


class StageParamsBody(BaseModel):
    backend_id: str
    strength: float = Field(default=1.0, ge=0.0, le=1.0)
    steps: int = Field(default=30, ge=1)
    guidance: float = Field(default=1.0, ge=0.0)
    prompt: str = ""
    checkpoint: str = ""
    upscale: int = Field(default=1, ge=1)
    seed: int = 0
    extras: dict[str, str] = Field(default_factory=dict)

    def to_params(self) -> StageParams:
        return StageParams(**self.model_dump())


class RollbackBody(BaseModel):
    to_stage: int = Field(ge=0)


class SessionStore:
    """Disk-backed session registry with per-session serialization."""

    def __init__(self, root: Path, registry: BackendRegistry,
                 presets: dict[str, PipelinePreset],
                 max_age_s: float = DEFAULT_MAX_SESSION_AGE_S):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.registry = registry
        self.presets = presets
        self.max_age_s = max_age_s
        self._sessions: dict[str, RestorationSession] = {}
        self._lock = threading.Lock()

    def create(self, img, preset_name: str) -> RestorationSession:
        preset = get_preset(preset_name, self.presets)
        session_id = uuid.uuid4().hex
        session = create_session(img, preset, registry=self.registry,
                                 root=self.root / session_id,
                                 session_id=session_id)
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> RestorationSession:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is not None:
            return session
        session_dir = self.root / session_id
        if not (session_dir / STATE_FILE).is_file():
            raise UnknownSessionError(f"no session {session_id!r}")
        session = load_session(session_dir, registry=self.registry)
        with self._lock:
            return self._sessions.setdefault(session_id, session)

    def sweep(self, now: float | None = None) -> int:
        """Drop sessions older than max_age_s; never touches a locked session."""
        now = now if now is not None else time.time()
        removed = 0
        for state_path in self.root.glob(f"*/{STATE_FILE}"):
            session_dir = state_path.parent
            if now - state_path.stat().st_mtime <= self.max_age_s:
                continue
            session_id = session_dir.name
            with self._lock:
                session = self._sessions.get(session_id)
            if session is not None:
                if not session.lock.acquire(blocking=False):
                    continue
                try:
                    with self._lock:
                        self._sessions.pop(session_id, None)
                finally:
                    session.lock.release()
            delete_session_dir(session_dir)
            removed += 1
        return removed


def session_view(session: RestorationSession) -> dict:
    base = f"/sessions/{session.session_id}"
    committed = {c.stage for c in session.commits}
    links = {"original": f"{base}/original", "preview": f"{base}/preview",
             "commit": f"{base}/commit"}
    if session.pending_mask is not None:
        links["mask"] = f"{base}/mask"
    if session.status == "complete":
        links["result"] = f"{base}/result"
    return {
        "session_id": session.session_id,
        "cursor": session.cursor,
        "status": session.status,
        "current_stage": session.current_stage(),
        "stages": [{"name": s, "committed": s in committed} for s in STAGE_ORDER],
        "preset": session.preset.name,
        "links": links,
    }


def _error_body(code: str, message: str, stage: str | None = None) -> dict:
    return {"code": code, "message": message, "stage": stage}


def build_service(config: ServiceConfig,
                  registry: BackendRegistry | None = None) -> FastAPI:
    registry = registry if registry is not None else build_default_registry()
    if config.backend_file is not None:
        load_backend_file(registry, config.backend_file)
    if config.external_timeout_s is not None:
        for descriptor in registry.list():
            if descriptor.kind == "external":
                descriptor.timeout_s = config.external_timeout_s
    presets = load_preset_catalog(config.preset_file)
    store = SessionStore(config.session_root, registry, presets,
                         max_age_s=config.max_session_age_s)

    app = FastAPI(title="photorestore")
    app.state.store = store

    @app.exception_handler(PhotoRestoreError)
    async def _handle_toolkit_error(_request: Request, exc: PhotoRestoreError):
        stage = getattr(exc, "stage", None)
        if isinstance(exc, UnknownSessionError):
            return JSONResponse(status_code=404,
                                content=_error_body("unknown-session", str(exc.args[0])))
        if isinstance(exc, BackendTimeout):
            return JSONResponse(status_code=502,
                                content=_error_body("backend-timeout", str(exc), stage))
        if isinstance(exc, BackendFailure):
            body = _error_body("backend-failure", str(exc), stage)
            body["diagnostics"] = exc.diagnostics
            return JSONResponse(status_code=502, content=body)
        if isinstance(exc, BackendError):
            return JSONResponse(status_code=502,
                                content=_error_body("backend-protocol", str(exc), stage))
        if isinstance(exc, StateError):
            return JSONResponse(status_code=409,
                                content=_error_body("state-error", str(exc)))
        if isinstance(exc, (ParameterError, ShapeError, UnknownBackendError)):
            message = str(exc.args[0]) if exc.args else str(exc)
            return JSONResponse(status_code=422,
                                content=_error_body("invalid-params", message))
        return JSONResponse(status_code=500,
                            content=_error_body("internal", str(exc)))

    @app.post("/sessions", status_code=201)
    async def create_session_endpoint(image: UploadFile = File(...),
                                      preset: str = Form("default")):
        data = await image.read()
        img = imaging.decode_png(data)
        store.sweep()
        session = store.create(img, preset)
        return session_view(session)

    @app.get("/sessions/{session_id}")
    async def get_session_endpoint(session_id: str):
        return session_view(store.get(session_id))

    @app.post("/sessions/{session_id}/mask")
    async def upload_mask_endpoint(session_id: str, request: Request):
        session = store.get(session_id)
        data = await request.body()
        session.attach_mask_png(data)
        return {"ok": True, "session_id": session_id}

    @app.get("/sessions/{session_id}/mask")
    async def download_mask_endpoint(session_id: str):
        session = store.get(session_id)
        data = session.mask_png_bytes()
        if data is None:
            return JSONResponse(status_code=404,
                                content=_error_body("no-mask", "no mask uploaded"))
        return Response(content=data, media_type="image/png")

    @app.get("/sessions/{session_id}/original")
    async def original_endpoint(session_id: str):
        session = store.get(session_id)
        return Response(content=imaging.encode_png(session.original),
                        media_type="image/png")

    @app.post("/sessions/{session_id}/preview")
    async def preview_endpoint(session_id: str, body: StageParamsBody):
        session = store.get(session_id)
        output = session.preview(body.to_params())
        return Response(content=imaging.encode_png(output), media_type="image/png")

    @app.post("/sessions/{session_id}/commit")
    async def commit_endpoint(session_id: str, body: StageParamsBody):
        session = store.get(session_id)
        session.commit(body.to_params())
        return session_view(session)

    @app.post("/sessions/{session_id}/rollback")
    async def rollback_endpoint(session_id: str, body: RollbackBody):
        session = store.get(session_id)
        session.rollback(body.to_stage)
        return session_view(session)

    @app.get("/sessions/{session_id}/result")
    async def result_endpoint(session_id: str):
        session = store.get(session_id)
        return Response(content=imaging.encode_png(session.result()),
                        media_type="image/png")

    @app.get("/backends")
    async def backends_endpoint(stage: str | None = None):
        if stage is not None and stage not in STAGE_ORDER:
            raise ParameterError(f"unknown stage {stage!r}, expected one of {STAGE_ORDER}")
        return [d.public_view() for d in registry.list(stage)]

    return app
