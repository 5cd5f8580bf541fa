# python
from typing import Optional

# project
from app.core.config import Settings, apply_overrides, preset_config
from app.core.error_utils import handle_endpoint_error
from app.core.experiments import run_experiment
from app.core.logging import get_logger
from app.schemas.experiment import ExperimentSummary, Preset
from app.schemas.requests import ExperimentRequest

# 3rd party
from fastapi import APIRouter


router = APIRouter()
logger = get_logger(__name__)


@router.post("/{preset}", response_model=ExperimentSummary)
def run_preset(preset: Preset, request: Optional[ExperimentRequest] = None) -> ExperimentSummary:
    """Run a preset with optional overrides

    Args:
        preset (Preset): experiment to run
        request (ExperimentRequest, optional): dotted-key overrides

    Returns:
        ExperimentSummary: written files and the result document
    """
    overrides = request.overrides if request else {}
    settings = Settings()
    logger.info("Experiment requested", preset=preset.value, overrides=sorted(overrides))
    try:
        cfg = apply_overrides(preset_config(preset), overrides)
        return run_experiment(cfg, settings.output_dir / "api", settings.workers)
    except Exception as e:
        handle_endpoint_error(e, logger, "Failed to run experiment", preset=preset.value)
