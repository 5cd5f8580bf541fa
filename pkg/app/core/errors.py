"""Exception hierarchy shared by the simulator, the CLI and the API."""

from typing import Sequence


class TrajThermoError(Exception):
    """Base class for every error raised deliberately by trajthermo."""


class DomainError(TrajThermoError, ValueError):
    """Argument outside the domain of an operation (e.g. t outside [0, tau])."""


class PreconditionError(TrajThermoError, ValueError):
    """Inputs violate a documented precondition (e.g. non-stochastic matrix)."""


class NumericalError(TrajThermoError, ArithmeticError):
    """A numerically impossible intermediate value was produced."""


class IntegrationBlowupError(TrajThermoError, RuntimeError):
    """The integrated state left the physical set beyond the clamp tolerance."""

    def __init__(self, step: int, trajectory: int, violation: float) -> None:
        self.step = step
        self.trajectory = trajectory
        self.violation = violation
        super().__init__(
            f"state left the physical set at step {step} of trajectory "
            f"{trajectory} (violation {violation:.3e})"
        )


class FirstLawViolation(TrajThermoError, RuntimeError):
    """dU != dW + dQ within tolerance: the step decomposition is inconsistent."""

    def __init__(self, step: int, trajectory: int, residual: float) -> None:
        self.step = step
        self.trajectory = trajectory
        self.residual = residual
        super().__init__(
            f"first-law residual {residual:.3e} at step {step} of trajectory {trajectory}"
        )


class ConfigError(TrajThermoError, ValueError):
    """Configuration file or overrides failed validation."""

    def __init__(self, message: str, key_paths: Sequence[str] = ()) -> None:
        self.key_paths = list(key_paths)
        detail = f" ({', '.join(self.key_paths)})" if self.key_paths else ""
        super().__init__(f"{message}{detail}")


class InvariantViolation(TrajThermoError, RuntimeError):
    """A result failed its invariant checks and must not be written."""
