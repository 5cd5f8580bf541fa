# python
import math

# 3rd party
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Slack allowed on positivity/population bounds of validated states
PHYSICALITY_TOLERANCE = 1e-9


class DensityMatrix(BaseModel):
    """Conditional qubit state.

    Only rho11 and rho12 are stored; rho22 = 1 - rho11 and rho21 = conj(rho12),
    so the trace is identically one.
    """

    model_config = ConfigDict(frozen=True)

    rho11: float
    rho12: complex = 0j

    @model_validator(mode="after")
    def _check_physical(self) -> "DensityMatrix":
        p = self.rho11
        if p < -PHYSICALITY_TOLERANCE or p > 1.0 + PHYSICALITY_TOLERANCE:
            raise ValueError(f"rho11={p} outside [0, 1]")
        excess = abs(self.rho12) ** 2 - p * (1.0 - p)
        if excess > PHYSICALITY_TOLERANCE:
            raise ValueError(f"|rho12|^2 exceeds rho11*rho22 by {excess:.3e}")
        return self

    @property
    def rho22(self) -> float:
        return 1.0 - self.rho11

    @property
    def rho21(self) -> complex:
        return self.rho12.conjugate()

    def as_coords(self) -> np.ndarray:
        """State as the real vector (rho11, Re rho12, Im rho12)."""
        return np.array([self.rho11, self.rho12.real, self.rho12.imag])

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.rho11, self.rho12], [self.rho21, self.rho22]], dtype=complex
        )

    @classmethod
    def from_coords(cls, coords: np.ndarray) -> "DensityMatrix":
        return cls(rho11=float(coords[0]), rho12=complex(coords[1], coords[2]))

    @classmethod
    def from_pauli_vector(cls, x: float, y: float, z: float) -> "DensityMatrix":
        """rho = (I + x sx + y sy + z sz) / 2, so Im rho12 = -y / 2."""
        return cls(rho11=0.5 * (1.0 + z), rho12=complex(0.5 * x, -0.5 * y))

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix":
        return cls(rho11=0.5, rho12=0j)


class DensityDelta(BaseModel):
    """Traceless increment of a density matrix (no positivity constraint)."""

    model_config = ConfigDict(frozen=True)

    d11: float = 0.0
    d12: complex = 0j

    def as_coords(self) -> np.ndarray:
        return np.array([self.d11, self.d12.real, self.d12.imag])

    @classmethod
    def from_coords(cls, coords: np.ndarray) -> "DensityDelta":
        return cls(d11=float(coords[0]), d12=complex(coords[1], coords[2]))

    def __add__(self, other: "DensityDelta") -> "DensityDelta":
        return DensityDelta(d11=self.d11 + other.d11, d12=self.d12 + other.d12)


class QubitOperator(BaseModel):
    """Hermitian operator c0*I + cx*sx + cy*sy + cz*sz."""

    model_config = ConfigDict(frozen=True)

    c0: float = 0.0
    cx: float = 0.0
    cy: float = 0.0
    cz: float = 0.0

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.cz])

    @property
    def norm(self) -> float:
        return math.sqrt(self.cx**2 + self.cy**2 + self.cz**2)

    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.c0 + self.cz, self.cx - 1j * self.cy],
                [self.cx + 1j * self.cy, self.c0 - self.cz],
            ],
            dtype=complex,
        )

    def __sub__(self, other: "QubitOperator") -> "QubitOperator":
        return QubitOperator(
            c0=self.c0 - other.c0,
            cx=self.cx - other.cx,
            cy=self.cy - other.cy,
            cz=self.cz - other.cz,
        )


class DriveProtocol(BaseModel):
    """Driving lambda_t = g / cosh(nu (1 - t/tau)) on top of the static splitting."""

    model_config = ConfigDict(frozen=True)

    g: float = Field(ge=0.0, description="Peak drive amplitude")
    nu: float = Field(ge=0.0, description="Shape parameter")
    tau: float = Field(gt=0.0, description="Protocol duration")
    epsilon: float = Field(description="Static splitting")
    hbar: float = Field(default=1.0, gt=0.0)


class SpectralDecomposition(BaseModel):
    """Eigenvalues and rank-1 projectors of a qubit Hamiltonian.

    Index 0 is the lower eigenvalue, index 1 the upper one.
    """

    model_config = ConfigDict(frozen=True)

    e_minus: float
    e_plus: float
    proj_minus: QubitOperator
    proj_plus: QubitOperator
    degenerate: bool = False

    @property
    def energies(self) -> tuple[float, float]:
        return (self.e_minus, self.e_plus)

    def projector(self, index: int) -> QubitOperator:
        return (self.proj_minus, self.proj_plus)[index]

    def projector_vectors(self) -> np.ndarray:
        """Rows are the Pauli vectors of the two projectors (c = +-n/2)."""
        return np.array([self.proj_minus.vector, self.proj_plus.vector])


class ThermalSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: float = Field(ge=0.0, description="Inverse temperature, inf allowed")


class StateSeries(BaseModel):
    """States on a time grid as rows of (rho11, Re rho12, Im rho12)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    states: np.ndarray

    def state(self, k: int) -> DensityMatrix:
        return DensityMatrix.from_coords(self.states[k])

    def __len__(self) -> int:
        return len(self.times)
