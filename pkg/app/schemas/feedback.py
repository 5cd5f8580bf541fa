# 3rd party
from pydantic import BaseModel, ConfigDict, Field

# project
from app.schemas.qubit import StateSeries


class FeedbackParams(BaseModel):
    """Gain law g_t = (1 - f dphi_t) g."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    f: float = Field(default=3.0, ge=0.0, description="Feedback strength")
    enabled: bool = False


class ReferenceTrajectory(StateSeries):
    """Backaction-free evolution on the grid of the controlled run."""
