"""HTTP application exposing the backend wire protocol.

Every response body is JSON. Successful calls return the documented
payload; every failure returns ``{"error": "..."}`` with a non-200
status. Validation problems are 400, a service that has not finished
loading (or lacks a model for the requested role) is 503.
"""

from __future__ import annotations

from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import __version__
from .config import SidecarConfig
from .models import ModelRegistry, build_registry


class NerRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    texts: list[str]


class SimilarityRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    pairs: list[tuple[str, str]]


class NliPair(BaseModel):
    model_config = ConfigDict(extra="forbid")
    premise: str
    hypothesis: str


class NliRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    pairs: list[NliPair]


class AugmentRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    texts: list[str]
    prompt_id: str
    seed: int = Field(default=0, ge=0)


def _clip(texts: list[str], limit: int) -> tuple[list[str], bool]:
    clipped = [t[:limit] for t in texts]
    return clipped, any(len(t) > limit for t in texts)


def create_app(config: SidecarConfig | None = None, preload: bool = True) -> FastAPI:
    """Build the service.

    With ``preload=True`` models load synchronously before the app is
    returned. With ``preload=False`` they load during startup (lifespan),
    and every endpoint answers 503 until that has happened.
    """
    cfg = config if config is not None else SidecarConfig()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if app.state.registry is None:
            app.state.registry = build_registry(cfg)
        yield

    app = FastAPI(
        title="hallu-sidecar",
        version=__version__,
        lifespan=lifespan,
        docs_url=None,
        redoc_url=None,
        openapi_url=None,
    )
    app.state.config = cfg
    app.state.registry = build_registry(cfg) if preload else None

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        errors = exc.errors()
        if errors:
            loc = ".".join(str(p) for p in errors[0].get("loc", ()) if p != "body")
            msg = errors[0].get("msg", "invalid request")
            detail = f"invalid request: {loc}: {msg}" if loc else f"invalid request: {msg}"
        else:
            detail = "invalid request"
        return JSONResponse(status_code=400, content={"error": detail})

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        return JSONResponse(status_code=exc.status_code, content={"error": str(exc.detail)})

    @app.exception_handler(Exception)
    async def on_unexpected_error(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"error": f"internal error: {exc}"})

    def ready(request: Request) -> ModelRegistry:
        registry = request.app.state.registry
        if registry is None:
            raise HTTPException(503, "service is starting; models are not loaded yet")
        return registry

    def model_for(registry: ModelRegistry, role: str):
        model = registry.get(role)
        if model is None:
            raise HTTPException(503, f"no model loaded for role '{role}'")
        return model

    def check_batch(size: int):
        if size > cfg.max_batch_size:
            raise HTTPException(400, f"batch of {size} exceeds max_batch_size {cfg.max_batch_size}")

    @app.get("/v1/health")
    def health(request: Request):
        registry = ready(request)
        return {"status": "ok", "capabilities": registry.capabilities}

    @app.post("/v1/ner")
    def ner(request: Request, body: NerRequest):
        registry = ready(request)
        model = model_for(registry, "ner")
        check_batch(len(body.texts))
        texts, truncated = _clip(body.texts, cfg.max_text_length)
        payload = {"entities": model.extract(texts)}
        if truncated:
            payload["truncated"] = True
        return payload

    @app.post("/v1/similarity")
    def similarity(request: Request, body: SimilarityRequest):
        registry = ready(request)
        model = model_for(registry, "similarity")
        check_batch(len(body.pairs))
        truncated = False
        pairs = []
        for a, b in body.pairs:
            ca, cb = a[: cfg.max_text_length], b[: cfg.max_text_length]
            truncated = truncated or len(a) > cfg.max_text_length or len(b) > cfg.max_text_length
            pairs.append((ca, cb))
        payload = {"scores": model.score(pairs)}
        if truncated:
            payload["truncated"] = True
        return payload

    @app.post("/v1/nli")
    def nli(request: Request, body: NliRequest):
        registry = ready(request)
        model = model_for(registry, "nli")
        check_batch(len(body.pairs))
        for i, pair in enumerate(body.pairs):
            if pair.premise == "" or pair.hypothesis == "":
                raise HTTPException(400, f"pair {i}: premise and hypothesis must be non-empty")
        truncated = False
        pairs = []
        for pair in body.pairs:
            prem = pair.premise[: cfg.max_text_length]
            hyp = pair.hypothesis[: cfg.max_text_length]
            truncated = (
                truncated
                or len(pair.premise) > cfg.max_text_length
                or len(pair.hypothesis) > cfg.max_text_length
            )
            pairs.append((prem, hyp))
        payload = {"verdicts": model.judge(pairs)}
        if truncated:
            payload["truncated"] = True
        return payload

    @app.post("/v1/augment")
    def augment(request: Request, body: AugmentRequest):
        registry = ready(request)
        model = model_for(registry, "augment")
        check_batch(len(body.texts))
        templates = getattr(model, "templates", None)
        if templates is not None and body.prompt_id not in templates:
            raise HTTPException(400, f"unknown prompt_id '{body.prompt_id}'")
        texts, truncated = _clip(body.texts, cfg.max_text_length)
        try:
            results = model.augment(texts, body.prompt_id, body.seed)
        except KeyError:
            raise HTTPException(400, f"unknown prompt_id '{body.prompt_id}'")
        payload = {"texts": results}
        if truncated:
            payload["truncated"] = True
        return payload

    return app
