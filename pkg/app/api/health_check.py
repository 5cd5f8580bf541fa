# project
from app.core.config import Settings
from app.core.logging import get_logger
from app.schemas.experiment import Preset
from app.schemas.requests import HealthReport

# 3rd party
from fastapi import APIRouter


router = APIRouter(prefix="/health", tags=["health-check"])

logger = get_logger(__name__)


@router.get("/check", summary="Liveness and run capabilities", response_model=HealthReport)
async def health_check() -> HealthReport:
    settings = Settings()
    logger.debug("Health check requested")
    return HealthReport(
        status="200 OK",
        app=settings.app_name,
        version=settings.app_version,
        presets=[preset.value for preset in Preset],
        workers=settings.workers,
    )
