# python
import math
from enum import Enum

# project
from app.schemas.qubit import DensityDelta, DensityMatrix
from app.schemas.thermo import ThermoLedger

# 3rd party
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Scheme(str, Enum):
    """Stochastic integration scheme for the measurement part of a step."""

    ITO_EULER = "ito-euler"
    STRATONOVICH_HEUN = "stratonovich-heun"
    BAYESIAN = "bayesian"

    @classmethod
    def from_alias(cls, value: str) -> "Scheme":
        aliases = {
            "ito": cls.ITO_EULER,
            "stratonovich": cls.STRATONOVICH_HEUN,
            "bayes": cls.BAYESIAN,
        }
        return aliases.get(value, None) or cls(value)


class DetectorModel(BaseModel):
    """Phenomenological detector: contrast, symmetric noise, baseline current."""

    model_config = ConfigDict(frozen=True)

    delta_i: float = Field(description="Signal contrast I2 - I1")
    s0: float = Field(ge=0.0, description="Symmetric noise spectral density")
    i0: float = Field(default=0.0, description="Baseline current")

    @model_validator(mode="after")
    def _check_noise(self) -> "DetectorModel":
        if self.delta_i != 0.0 and self.s0 <= 0.0:
            raise ValueError("s0 must be positive when delta_i != 0")
        return self

    @property
    def tau_m(self) -> float:
        """Measurement time 2 S0 / dI^2."""
        if self.delta_i == 0.0:
            return math.inf
        return 2.0 * self.s0 / self.delta_i**2

    @property
    def coupling(self) -> float:
        """dI / S0, the coefficient of the xi terms (zero for a blind detector)."""
        if self.delta_i == 0.0:
            return 0.0
        return self.delta_i / self.s0

    @property
    def dephasing_rate(self) -> float:
        """Gamma = dI^2 / (4 S0)."""
        if self.delta_i == 0.0:
            return 0.0
        return self.delta_i**2 / (4.0 * self.s0)

    @property
    def noise_variance(self) -> float:
        """sigma^2 = S0 / 2 of the white noise xi."""
        return 0.5 * self.s0


class NoiseProcess(BaseModel):
    """Gaussian detector noise for one trajectory, keyed by (seed, stream_id)."""

    model_config = ConfigDict(frozen=True)

    seed: int = Field(ge=0, lt=2**64)
    stream_id: int = Field(ge=0)
    sigma_step: float = Field(ge=0.0, description="sqrt(S0 / (2 dt))")

    @classmethod
    def for_detector(
        cls, seed: int, stream_id: int, detector: DetectorModel, dt: float
    ) -> "NoiseProcess":
        return cls(
            seed=seed,
            stream_id=stream_id,
            sigma_step=math.sqrt(detector.s0 / (2.0 * dt)),
        )


class StepDecomposition(BaseModel):
    """Additive split d rho = d_rho_w + d_rho_q of one integration step."""

    model_config = ConfigDict(frozen=True)

    d_rho_w: DensityDelta
    d_rho_q: DensityDelta
    xi: float


class TrajectoryRecord(BaseModel):
    """Full time series of one realization.

    State arrays have steps + 1 rows, increment arrays have steps rows.
    Coordinates are (rho11, Re rho12, Im rho12).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    trajectory: int
    times: np.ndarray
    states: np.ndarray
    xi: np.ndarray
    currents: np.ndarray
    d_rho_w: np.ndarray
    d_rho_q: np.ndarray
    work: np.ndarray
    heat: np.ndarray
    energy_change: np.ndarray
    gains: np.ndarray
    ledger: ThermoLedger
    clamp_events: int = 0

    @model_validator(mode="after")
    def _check_lengths(self) -> "TrajectoryRecord":
        steps = len(self.xi)
        if len(self.times) != steps + 1 or len(self.states) != steps + 1:
            raise ValueError("state series must have steps + 1 entries")
        for name in ("currents", "d_rho_w", "d_rho_q", "work", "heat", "energy_change", "gains"):
            if len(getattr(self, name)) != steps:
                raise ValueError(f"{name} must have {steps} entries")
        return self

    @property
    def steps(self) -> int:
        return len(self.xi)

    def state(self, k: int) -> DensityMatrix:
        return DensityMatrix.from_coords(self.states[k])

    def decomposition(self, k: int) -> StepDecomposition:
        return StepDecomposition(
            d_rho_w=DensityDelta.from_coords(self.d_rho_w[k]),
            d_rho_q=DensityDelta.from_coords(self.d_rho_q[k]),
            xi=float(self.xi[k]),
        )

    @property
    def decompositions(self) -> list[StepDecomposition]:
        return [self.decomposition(k) for k in range(self.steps)]
