"""Local feedback service: analyze essays over HTTP and host the browser UI.

Endpoints:
  POST /api/analyze   {"text": ..., "options": {...}} -> AnalysisResult
  GET  /api/models    configured model list
  GET  /api/health    ok / degraded (degraded = inference server unreachable)

Everything stays on the local machine; CORS is enabled for the UI origin and
essays are never persisted.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import httpx
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .corpus import CorpusSplit
from .inference import ModelConfig
from .pipeline import ExperimentConfig, analyze
from .prompts import ConfigError, MAX_SHOTS, TaskKind
from .spelling import TextNormalizer, identity_normalizer


@dataclass
class ServerSettings:
    model: ModelConfig = field(default_factory=ModelConfig)
    extra_models: list[str] = field(default_factory=list)
    shots: int = 0
    mode: str = "few_shot"
    parallelism: int = 4
    shot_split: CorpusSplit | None = None
    normalizer: TextNormalizer = identity_normalizer
    ui_dir: Path | None = None
    transport: httpx.BaseTransport | None = None  # injection point for tests
    allowed_origins: list[str] = field(default_factory=lambda: ["*"])


class AnalyzeOptions(BaseModel):
    model: str | None = None
    shots: int | None = None
    mode: str | None = None


class AnalyzeRequest(BaseModel):
    text: str
    options: AnalyzeOptions | None = None


def probe_model_endpoint(settings: ServerSettings) -> bool:
    try:
        client = httpx.Client(timeout=3.0, transport=settings.transport)
        response = client.get(settings.model.endpoint)
        return response.status_code < 500
    except httpx.HTTPError:
        return False


def create_app(settings: ServerSettings) -> FastAPI:
    app = FastAPI(title="argmine feedback service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=settings.allowed_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/api/health")
    def health() -> dict:
        reachable = probe_model_endpoint(settings)
        return {
            "status": "ok" if reachable else "degraded",
            "model_endpoint_reachable": reachable,
            "model": settings.model.model,
        }

    @app.get("/api/models")
    def models() -> dict:
        names = [settings.model.model] + [
            m for m in settings.extra_models if m != settings.model.model
        ]
        return {"models": names, "default": settings.model.model}

    @app.post("/api/analyze")
    def analyze_essay(request: AnalyzeRequest) -> dict:
        if not request.text or not request.text.strip():
            raise HTTPException(status_code=422, detail="essay text is empty")
        options = request.options or AnalyzeOptions()
        model = settings.model
        if options.model:
            known = [settings.model.model] + settings.extra_models
            if options.model not in known:
                raise HTTPException(status_code=422, detail=f"unknown model {options.model!r}")
            model = replace(settings.model, model=options.model)
        shots = settings.shots if options.shots is None else options.shots
        mode = options.mode or settings.mode
        if mode == "fine_tuned":
            shots = 0
        if not 0 <= shots <= MAX_SHOTS:
            raise HTTPException(status_code=422, detail=f"shots must be 0..{MAX_SHOTS}")
        try:
            cfg = ExperimentConfig(
                task=TaskKind.TYPE_AND_QUALITY,
                model=model,
                segmentation="inferred",
                mode=mode,
                shots=shots,
                runs=1,
                parallelism=settings.parallelism,
            )
            result = analyze(
                request.text,
                cfg,
                shot_split=settings.shot_split,
                transport=settings.transport,
                normalizer=settings.normalizer,
            )
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        payload = result.to_obj()
        payload["options"] = {"model": model.model, "shots": shots, "mode": mode}
        return payload

    if settings.ui_dir is not None and settings.ui_dir.is_dir():
        index = settings.ui_dir / "index.html"

        @app.get("/")
        def root() -> FileResponse:
            return FileResponse(index)

        app.mount("/", StaticFiles(directory=settings.ui_dir), name="ui")

    return app
