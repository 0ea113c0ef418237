"""Local HTTP service exposing the pipelines and the auditor.

The browser extension (and any other client) talks to this service so
that API keys and heavy parsing stay out of the page context. Offline
requests are fully deterministic: same body, same response bytes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from .audit import run_audit
from .dom import parse
from .errors import GateFailure, PatchError, ProviderError, RestructError, SequenceError
from .llm import ModelParams, RemoteChatProvider
from .pipeline import TransformOptions, transform
from .similarity import LexicalProvider, RemoteEmbeddingProvider

DEFAULT_PORT = 8787
DEFAULT_MAX_BODY = 8 * 1024 * 1024
# Only extension origins may call the service unless overridden.
DEFAULT_CORS_REGEX = r"^(chrome|moz)-extension://.*$"


@dataclass
class ServiceConfig:
    port: int = DEFAULT_PORT
    base_url: str = ""
    api_key: str = ""
    model: str = "gpt-4o"
    embed_model: str = ""
    max_body_bytes: int = DEFAULT_MAX_BODY
    cors_origin_regex: str = DEFAULT_CORS_REGEX
    defaults: TransformOptions = field(default_factory=TransformOptions)

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise ValueError(f"port {self.port} out of range")

    @classmethod
    def from_env(cls, env=None) -> "ServiceConfig":
        env = os.environ if env is None else env
        return cls(
            port=int(env.get("RESTRUCT_PORT", DEFAULT_PORT)),
            base_url=env.get("RESTRUCT_BASE_URL", ""),
            api_key=env.get("RESTRUCT_API_KEY", ""),
            model=env.get("RESTRUCT_MODEL", "gpt-4o"),
            embed_model=env.get("RESTRUCT_EMBED_MODEL", ""),
            cors_origin_regex=env.get("RESTRUCT_CORS_ORIGIN", DEFAULT_CORS_REGEX),
        )


def _error(status: int, message: str, **extra) -> JSONResponse:
    return JSONResponse({"error": message, **extra}, status_code=status)


def build_providers(config: ServiceConfig, provider: str):
    """LLM and embedding providers for a request; offline stays in-process."""
    if provider == "offline":
        return None, LexicalProvider()
    llm = RemoteChatProvider(config.base_url, config.api_key)
    if config.embed_model:
        embed = RemoteEmbeddingProvider(config.base_url, config.api_key, config.embed_model)
    else:
        embed = LexicalProvider()
    return llm, embed


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig.from_env()
    app = FastAPI(title="restruct", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=config.cors_origin_regex,
        allow_methods=["GET", "POST"],
        allow_headers=["content-type"],
    )

    async def read_json_body(request: Request):
        body = await request.body()
        if len(body) > config.max_body_bytes:
            return None, _error(413, "request body too large")
        try:
            import json

            data = json.loads(body)
        except (ValueError, UnicodeDecodeError):
            return None, _error(400, "body is not valid JSON")
        if not isinstance(data, dict):
            return None, _error(400, "body must be a JSON object")
        return data, None

    @app.get("/healthz")
    async def healthz():
        return PlainTextResponse("ok")

    @app.post("/v1/audit")
    async def audit_endpoint(request: Request):
        data, failure = await read_json_body(request)
        if failure is not None:
            return failure
        html = data.get("html")
        if not isinstance(html, str):
            return _error(400, 'field "html" must be a string')
        report = run_audit(parse(html))
        return JSONResponse(report.to_json_dict())

    @app.post("/v1/transform")
    async def transform_endpoint(request: Request):
        data, failure = await read_json_body(request)
        if failure is not None:
            return failure
        html = data.get("html")
        mode = data.get("mode")
        if not isinstance(html, str):
            return _error(400, 'field "html" must be a string')
        if mode not in ("regenerate", "reorganize"):
            return _error(400, f'unknown mode: {mode!r}')
        options = data.get("options") or {}
        if not isinstance(options, dict):
            return _error(400, '"options" must be an object')
        defaults = config.defaults
        try:
            opts = TransformOptions(
                mode=mode,
                provider=options.get("provider", defaults.provider),
                threshold=float(options.get("threshold", defaults.threshold)),
                budget=int(options.get("budget", defaults.budget)),
                max_attempts=int(options.get("max_attempts", defaults.max_attempts)),
            )
        except (ValueError, TypeError) as exc:
            return _error(400, f"invalid options: {exc}")
        if opts.provider == "mock":
            return _error(400, "the mock provider is only available in-process")

        llm, embed = build_providers(config, opts.provider)
        params = ModelParams(model=config.model)
        try:
            result = transform(
                parse(html), opts, llm_provider=llm, embed_provider=embed, params=params
            )
        except GateFailure as exc:
            return _error(
                422,
                "similarity gate failed",
                best_score=exc.best_score,
                threshold=exc.threshold,
                attempts=exc.attempts,
            )
        except (ProviderError, SequenceError, PatchError) as exc:
            return _error(502, f"provider failure: {exc}")
        except RestructError as exc:
            return _error(400, str(exc))
        return JSONResponse(result.to_json_dict())

    return app


def run_service(config: ServiceConfig | None = None) -> None:
    import uvicorn

    config = config or ServiceConfig.from_env()
    uvicorn.run(create_app(config), host="127.0.0.1", port=config.port)
