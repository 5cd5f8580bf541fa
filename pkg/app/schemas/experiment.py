from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.ensemble import EnsembleConfig, InitialStateKind, InitialStateSpec, MomentSummary
from app.schemas.feedback import FeedbackParams
from app.schemas.measurement import DetectorModel, Scheme
from app.schemas.qubit import DriveProtocol, ThermalSpec
from app.schemas.thermo import JarzynskiEstimate, Matrix2, TransitionDecomposition


class Preset(str, Enum):
    FIG1 = "fig1"
    FIG2 = "fig2"
    FIG3A = "fig3a"
    FIG3B = "fig3b"
    JARZYNSKI = "jarzynski"
    HEAT = "heat"


class PhysicsConfig(BaseModel):
    """Physical parameters; times are in the units of dt."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epsilon: float = Field(default=0.1, description="Static splitting")
    g: float = Field(default=0.625, ge=0.0, description="Peak drive amplitude")
    nu: float = Field(default=8.0, ge=0.0)
    dt: float = Field(default=0.01, gt=0.0)
    tau_steps: int = Field(default=3000, ge=1)
    delta_i: float = Field(default=1.0, description="Detector contrast")
    s0: float = Field(default=2500.0, ge=0.0, description="Detector noise spectral density")
    i0: float = 0.0
    beta: float = Field(default=10.0, ge=0.0)
    hbar: float = Field(default=1.0, gt=0.0)

    @property
    def tau(self) -> float:
        return self.tau_steps * self.dt

    def protocol(self) -> DriveProtocol:
        return DriveProtocol(g=self.g, nu=self.nu, tau=self.tau, epsilon=self.epsilon, hbar=self.hbar)

    def detector(self) -> DetectorModel:
        return DetectorModel(delta_i=self.delta_i, s0=self.s0, i0=self.i0)

    def thermal(self) -> ThermalSpec:
        return ThermalSpec(beta=self.beta)

    def caption_ratios(self) -> dict[str, float]:
        """S0/dI^2, hbar/g, hbar/epsilon and tau in units of dt."""
        inf = float("inf")
        return {
            "s0_over_delta_i2": self.s0 / self.delta_i**2 / self.dt if self.delta_i else inf,
            "hbar_over_g": self.hbar / self.g / self.dt if self.g else inf,
            "hbar_over_epsilon": self.hbar / abs(self.epsilon) / self.dt if self.epsilon else inf,
            "tau": float(self.tau_steps),
        }


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    scheme: Scheme = Scheme.BAYESIAN
    n_traj: int = Field(default=300, ge=1)
    seed: int = Field(default=20141024, ge=0, lt=2**64)
    record_stride: int = Field(default=1, ge=1)
    batch_size: int = Field(default=128, ge=1)
    clamp_tolerance: float = Field(default=1e-4, gt=0.0)
    initial: InitialStateKind = InitialStateKind.EIGENSTATE
    initial_index: int = Field(default=0, ge=0, le=1)
    initial_coords: Optional[tuple[float, float, float]] = None


class SweepConfig(BaseModel):
    """Parameter sweeps used by the jarzynski and heat experiments."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tau_steps: list[int] = Field(default_factory=list)
    delta_i: list[float] = Field(default_factory=list)


class ExperimentConfig(BaseModel):
    """Fully resolved experiment; written into every output."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    preset: Preset
    physics: PhysicsConfig = PhysicsConfig()
    run: RunConfig = RunConfig()
    feedback: FeedbackParams = FeedbackParams()
    sweep: SweepConfig = SweepConfig()

    @model_validator(mode="after")
    def _check_grid(self) -> "ExperimentConfig":
        steps = [self.physics.tau_steps, *self.sweep.tau_steps]
        for n in steps:
            if n % self.run.record_stride:
                raise ValueError(f"run.record_stride {self.run.record_stride} must divide {n} steps")
        if self.run.initial == InitialStateKind.EXPLICIT and self.run.initial_coords is None:
            raise ValueError("run.initial_coords is required for an explicit initial state")
        return self

    def initial_state(self) -> InitialStateSpec:
        return InitialStateSpec(
            kind=self.run.initial,
            beta=self.physics.beta if self.run.initial == InitialStateKind.THERMAL else None,
            index=self.run.initial_index,
            coords=self.run.initial_coords,
        )

    def ensemble(self, steps: Optional[int] = None) -> EnsembleConfig:
        return EnsembleConfig(
            n_traj=self.run.n_traj,
            seed=self.run.seed,
            scheme=self.run.scheme,
            steps=steps or self.physics.tau_steps,
            record_stride=self.run.record_stride,
            initial_state=self.initial_state(),
            clamp_tolerance=self.run.clamp_tolerance,
            batch_size=self.run.batch_size,
        )


# -- output documents ------------------------------------------------------


class TransitionsDocument(BaseModel):
    preset: Preset
    seed: int
    steps: int
    feedback: bool
    decomposition: TransitionDecomposition
    unitary_p_tau: Matrix2
    no_feedback: Optional[TransitionDecomposition] = None
    clamp_events: int
    max_first_law_residual: float
    config: ExperimentConfig


class JarzynskiRow(BaseModel):
    steps: int
    feedback: JarzynskiEstimate
    no_feedback: JarzynskiEstimate
    work_only: JarzynskiEstimate
    unitary: JarzynskiEstimate
    relative_deviation: float = Field(description="|dF_feedback - dF_exact| / |dF_exact|")
    within_3_stderr: bool


class JarzynskiSummary(BaseModel):
    preset: Preset
    seed: int
    beta: float
    delta_f_exact: float
    delta_f_est: float = Field(description="Feedback estimate at physics.tau_steps")
    delta_f_est_stderr: float
    published_delta_f: float = -0.495
    published_feedback_values: dict[str, float] = Field(
        default_factory=lambda: {"1400": -0.488, "2500": -0.496},
        description="Published feedback estimates keyed by protocol length in steps",
    )
    rows: list[JarzynskiRow]
    config: ExperimentConfig


class HeatRow(BaseModel):
    delta_i: float
    measurement_rate: float = Field(description="dI^2 / S0")
    heat: MomentSummary
    work: MomentSummary
    histogram_edges: list[float]
    histogram_counts: list[int]
    max_first_law_residual: float


class HeatStatistics(BaseModel):
    preset: Preset
    seed: int
    rows: list[HeatRow]
    config: ExperimentConfig


class ExperimentSummary(BaseModel):
    """What a run produced; returned by the CLI and the API."""

    preset: Preset
    seed: int
    files: list[str]
    document: Optional[dict] = None
