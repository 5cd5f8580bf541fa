# python
from enum import Enum
from typing import Optional

# project
from app.schemas.measurement import Scheme, TrajectoryRecord
from app.schemas.thermo import TrajectoryBundle, TransitionDecomposition

# 3rd party
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class InitialStateKind(str, Enum):
    THERMAL = "thermal"
    EIGENSTATE = "eigenstate"
    EXPLICIT = "explicit"


class InitialStateSpec(BaseModel):
    """How trajectories are initialized.

    thermal: eigenstate n of H_0 drawn with probability P0_n at inverse temperature beta.
    eigenstate: eigenstate `index` of H_0 (0 = lower energy).
    explicit: the given (rho11, Re rho12, Im rho12).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: InitialStateKind = InitialStateKind.EIGENSTATE
    beta: Optional[float] = Field(default=None, ge=0.0)
    index: int = Field(default=0, ge=0, le=1)
    coords: Optional[tuple[float, float, float]] = None

    @model_validator(mode="after")
    def _check_kind(self) -> "InitialStateSpec":
        if self.kind == InitialStateKind.THERMAL and self.beta is None:
            raise ValueError("thermal initial state needs beta")
        if self.kind == InitialStateKind.EXPLICIT and self.coords is None:
            raise ValueError("explicit initial state needs coords")
        return self


class EnsembleConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_traj: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2**64)
    scheme: Scheme = Scheme.ITO_EULER
    steps: int = Field(ge=1)
    record_stride: int = Field(default=1, ge=1)
    initial_state: InitialStateSpec = InitialStateSpec()
    stream_offset: int = Field(default=0, ge=0, description="Stream id of trajectory 0")
    clamp_tolerance: float = Field(default=1e-4, gt=0.0)
    batch_size: int = Field(default=128, ge=1)
    full_series: bool = Field(default=False, description="Keep per-step records of every trajectory")

    @model_validator(mode="after")
    def _check_stride(self) -> "EnsembleConfig":
        if self.steps % self.record_stride:
            raise ValueError(f"record_stride {self.record_stride} must divide steps {self.steps}")
        return self


class MomentSummary(BaseModel):
    mean: float
    variance: float
    stderr: float

    @classmethod
    def of(cls, samples: np.ndarray) -> "MomentSummary":
        n = len(samples)
        variance = float(np.var(samples, ddof=1)) if n > 1 else 0.0
        return cls(mean=float(np.mean(samples)), variance=variance, stderr=(variance / n) ** 0.5)


class EnsembleResult(BaseModel):
    """Ensemble statistics; per-trajectory arrays are ordered by trajectory index."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: EnsembleConfig
    times: np.ndarray
    mean_state: np.ndarray
    stderr_state: np.ndarray
    entropy: np.ndarray
    work: MomentSummary
    heat: MomentSummary
    work_totals: np.ndarray
    heat_totals: np.ndarray
    initial_index: np.ndarray
    clamp_events: int
    clamp_fraction: float
    max_first_law_residual: float
    bundle: TrajectoryBundle
    records: Optional[list[TrajectoryRecord]] = None


class TransitionRun(BaseModel):
    """Per-eigenstate ensembles and the transition decomposition built from them."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    decomposition: TransitionDecomposition
    columns: list[EnsembleResult]
