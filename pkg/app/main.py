# python
import time
import uuid
from contextlib import asynccontextmanager

# project
from app.api.experiment_endpoints import router as experiment_router
from app.api.health_check import router as health_router
from app.api.thermo_endpoints import router as thermo_router
from app.core.config import Settings
from app.core.logging import get_logger, setup_logging

# 3rd party
import structlog
from fastapi import FastAPI, Request
import uvicorn

settings = Settings()

setup_logging(str(settings.log_dir), level=settings.log_level)

logger = get_logger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Log the run settings on startup and the shutdown."""
    logger.info(
        "API starting",
        version=settings.app_version,
        output_dir=str(settings.output_dir / "api"),
        workers=settings.workers,
    )
    yield
    logger.info("API shutting down")


app = FastAPI(
    title=settings.app_name,
    version=settings.app_version,
    description="Quantum-trajectory work and heat experiments",
    lifespan=lifespan,
)


@app.middleware("http")
async def log_requests(request: Request, call_next):
    """Bind a request id and route to every event logged while serving the request."""
    started = time.perf_counter()
    request_id = request.headers.get("x-request-id") or uuid.uuid4().hex[:12]
    client_ip = request.client.host if request.client else "unknown"

    with structlog.contextvars.bound_contextvars(
        request_id=request_id,
        method=request.method,
        path=request.url.path,
    ):
        logger.info("Request received", client_ip=client_ip)
        try:
            response = await call_next(request)
        except Exception as exc:
            logger.error(
                "Request failed",
                error=str(exc),
                error_type=type(exc).__name__,
                elapsed=round(time.perf_counter() - started, 4),
                exc_info=True,
            )
            raise
        logger.info(
            "Request completed",
            status_code=response.status_code,
            elapsed=round(time.perf_counter() - started, 4),
        )
    response.headers["x-request-id"] = request_id
    return response


app.include_router(health_router, tags=["health-check"])
app.include_router(experiment_router, prefix="/experiments", tags=["experiments"])
app.include_router(thermo_router, prefix="/thermo", tags=["thermo"])

if __name__ == "__main__":
    uvicorn.run("app.main:app", host="0.0.0.0", port=8000)
