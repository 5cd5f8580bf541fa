# python
from typing import Optional

# 3rd party
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

LEDGER_TOLERANCE_PER_STEP = 1e-14
STOCHASTIC_TOLERANCE = 1e-10
DISTRIBUTION_TOLERANCE = 1e-12

Matrix2 = list[list[float]]


class ThermoLedger(BaseModel):
    """Cumulative work, heat and internal energy of one trajectory."""

    model_config = ConfigDict(frozen=True)

    w_cum: float = 0.0
    q_cum: float = 0.0
    u0: float
    u_now: float
    max_residual: float = 0.0
    steps: int = 0

    @model_validator(mode="after")
    def _check_first_law(self) -> "ThermoLedger":
        mismatch = abs(self.u_now - self.u0 - self.w_cum - self.q_cum)
        allowed = LEDGER_TOLERANCE_PER_STEP * max(self.steps, 1)
        if mismatch > allowed:
            raise ValueError(
                f"ledger mismatch {mismatch:.3e} exceeds {allowed:.3e} after {self.steps} steps"
            )
        return self


class TrajectoryBundle(BaseModel):
    """Endpoints and integrated increments of a set of trajectories.

    All arrays are (n_traj, 3) in (rho11, Re rho12, Im rho12) coordinates.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    initial: np.ndarray
    final: np.ndarray
    sum_dw: np.ndarray
    sum_dq: np.ndarray

    @property
    def n_traj(self) -> int:
        return len(self.initial)

    def subset(self, mask: np.ndarray) -> "TrajectoryBundle":
        return TrajectoryBundle(
            initial=self.initial[mask],
            final=self.final[mask],
            sum_dw=self.sum_dw[mask],
            sum_dq=self.sum_dq[mask],
        )

    @classmethod
    def from_records(cls, records: list) -> "TrajectoryBundle":
        return cls(
            initial=np.array([r.states[0] for r in records]),
            final=np.array([r.states[-1] for r in records]),
            sum_dw=np.array([r.d_rho_w.sum(axis=0) for r in records]),
            sum_dq=np.array([r.d_rho_q.sum(axis=0) for r in records]),
        )


class TransitionColumn(BaseModel):
    """Transition statistics out of initial eigenstate n (entries indexed by m)."""

    n: int = Field(ge=0, le=1)
    n_traj: int
    p_tau: list[float]
    dp_w: list[float]
    dp_q: list[float]
    p0: list[float]
    p_tau_stderr: list[float]
    dp_w_stderr: list[float]
    dp_q_stderr: list[float]
    max_identity_residual: float = Field(
        description="Largest per-trajectory |P_tau - P0 - dP_W - dP_Q|"
    )


class TransitionDecomposition(BaseModel):
    """P_tau, dP_W, dP_Q as 2x2 matrices indexed [m][n]."""

    p_tau: Matrix2
    dp_w: Matrix2
    dp_q: Matrix2
    p0: Matrix2
    p_tau_stderr: Matrix2
    dp_w_stderr: Matrix2
    dp_q_stderr: Matrix2
    n_traj: list[int]
    max_identity_residual: float

    @model_validator(mode="after")
    def _check_invariants(self) -> "TransitionDecomposition":
        p_tau = np.array(self.p_tau)
        dp_w = np.array(self.dp_w)
        dp_q = np.array(self.dp_q)
        p0 = np.array(self.p0)
        if np.any(np.abs(p_tau.sum(axis=0) - 1.0) > STOCHASTIC_TOLERANCE):
            raise ValueError("columns of p_tau must sum to 1")
        if np.any(p_tau < -STOCHASTIC_TOLERANCE) or np.any(p_tau > 1.0 + STOCHASTIC_TOLERANCE):
            raise ValueError("entries of p_tau must lie in [0, 1]")
        if np.any(np.abs(dp_w.sum(axis=0)) > STOCHASTIC_TOLERANCE):
            raise ValueError("columns of dp_w must sum to 0")
        if np.any(np.abs(dp_q.sum(axis=0)) > STOCHASTIC_TOLERANCE):
            raise ValueError("columns of dp_q must sum to 0")
        if np.any(np.abs(p_tau - p0 - dp_w - dp_q) > STOCHASTIC_TOLERANCE):
            raise ValueError("p_tau - p0 must equal dp_w + dp_q")
        return self

    @classmethod
    def from_columns(cls, columns: list[TransitionColumn]) -> "TransitionDecomposition":
        ordered = sorted(columns, key=lambda c: c.n)
        if [c.n for c in ordered] != [0, 1]:
            raise ValueError("need exactly one column per initial eigenstate")

        def stack(name: str) -> Matrix2:
            return np.array([getattr(c, name) for c in ordered]).T.tolist()

        return cls(
            p_tau=stack("p_tau"),
            dp_w=stack("dp_w"),
            dp_q=stack("dp_q"),
            p0=stack("p0"),
            p_tau_stderr=stack("p_tau_stderr"),
            dp_w_stderr=stack("dp_w_stderr"),
            dp_q_stderr=stack("dp_q_stderr"),
            n_traj=[c.n_traj for c in ordered],
            max_identity_residual=max(c.max_identity_residual for c in ordered),
        )

    def work_only(self) -> np.ndarray:
        """P^W = P^0 + dP^W: transition matrix with the heat contribution removed."""
        return np.array(self.p0) + np.array(self.dp_w)


class DiscreteDistribution(BaseModel):
    """Atoms of an energy-change distribution.

    quasi=True admits negative weights (e.g. the work-only matrix P^0 + dP^W).
    """

    support: list[float]
    probabilities: list[float]
    covariance: Optional[Matrix2] = None
    quasi: bool = False

    @model_validator(mode="after")
    def _check_normalized(self) -> "DiscreteDistribution":
        if len(self.support) != len(self.probabilities):
            raise ValueError("support and probabilities differ in length")
        if abs(sum(self.probabilities) - 1.0) > DISTRIBUTION_TOLERANCE:
            raise ValueError("probabilities must sum to 1")
        if not self.quasi and min(self.probabilities) < -DISTRIBUTION_TOLERANCE:
            raise ValueError("probabilities must be nonnegative")
        return self


class JarzynskiEstimate(BaseModel):
    """Free energy estimate -(1/beta) ln <exp(-beta W)> with its standard error."""

    label: str
    beta: float
    delta_f: float
    stderr: float
