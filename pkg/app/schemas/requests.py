from typing import Any, Dict, List

from pydantic import BaseModel, Field


class ExperimentRequest(BaseModel):
    """
    Overrides applied to a preset before it runs.
    """

    overrides: Dict[str, Any] = Field(
        default_factory=dict,
        description="Dotted config keys, e.g. {'run.n_traj': 50, 'feedback.f': 2.0}",
    )


class FreeEnergyResponse(BaseModel):
    """Closed-form equilibrium quantities of the driven qubit."""

    epsilon: float
    g: float
    nu: float
    beta: float
    energies_initial: List[float] = Field(..., description="Eigenvalues of H_0, ascending")
    energies_final: List[float] = Field(..., description="Eigenvalues of H_tau, ascending")
    delta_f: float = Field(..., description="-(1/beta) ln(Z_tau / Z_0)")


class HealthReport(BaseModel):
    status: str
    app: str
    version: str
    presets: List[str] = Field(..., description="Experiments runnable via POST /experiments/{preset}")
    workers: int
