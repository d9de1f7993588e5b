"""HTTP service exposing the query pipeline under ``/v1``.

JSON over HTTP; request logs are emitted as JSON lines. Invalid requests
map to 400, an unavailable backend to 503 with the failing role; a
single degraded QA backend still answers 200 with a note. An app created
without an engine (index not loaded yet) reports a degraded health
status and refuses queries with 503.
"""

from __future__ import annotations

import json
import logging
import time

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import BackendUnavailableError, ProtocolError
from .engine import INCLUDE_FLAGS, Engine, QueryRequest

logger = logging.getLogger("litrank.service")


class QueryBody(BaseModel):
    queries: list[str] = Field(default_factory=list)
    top_n: int = 30
    top_k: int = 3
    variant: str = "CAQ"
    include: list[str] = Field(default_factory=lambda: list(INCLUDE_FLAGS))
    budget: int | None = None


def create_app(engine: Engine | None) -> FastAPI:
    app = FastAPI(title="litrank", version="1")

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.middleware("http")
    async def _request_log(request: Request, call_next):
        started = time.perf_counter()
        response = await call_next(request)
        logger.info(json.dumps({
            "method": request.method,
            "path": request.url.path,
            "status": response.status_code,
            "duration_s": round(time.perf_counter() - started, 6),
        }))
        return response

    @app.get("/v1/health")
    def health() -> JSONResponse:
        if engine is None:
            return JSONResponse(content={"status": "degraded",
                                         "reason": "index not loaded"})
        return JSONResponse(content=engine.health())

    @app.get("/v1/corpus")
    def corpus() -> JSONResponse:
        if engine is None:
            return JSONResponse(status_code=503,
                                content={"detail": "index not loaded"})
        return JSONResponse(content=engine.corpus_manifest())

    @app.post("/v1/query")
    def query(body: QueryBody) -> JSONResponse:
        if engine is None:
            return JSONResponse(status_code=503,
                                content={"detail": "index not loaded"})
        request = QueryRequest(
            queries=body.queries,
            top_n=body.top_n,
            top_k=body.top_k,
            variant=body.variant,
            include=tuple(body.include),
            budget=body.budget,
        )
        try:
            response = engine.run(request)
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        except BackendUnavailableError as exc:
            return JSONResponse(status_code=503, content={
                "detail": str(exc), "role": exc.role})
        except ProtocolError as exc:
            return JSONResponse(status_code=503, content={
                "detail": str(exc), "role": exc.role})
        return JSONResponse(content=response)

    if engine is not None and engine.settings.ui_dir:
        app.mount("/", StaticFiles(directory=engine.settings.ui_dir, html=True),
                  name="ui")
    return app


def serve(engine: Engine, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(engine), host=host, port=port, log_level="info")
