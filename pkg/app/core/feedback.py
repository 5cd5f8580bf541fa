"""Rabi-phase feedback: reference evolution, phase error and the gain law."""

# python
import math

# project
from app.core.sme import unitary_delta
from app.core.thermo import nominal_pauli_series
from app.schemas.feedback import FeedbackParams, ReferenceTrajectory
from app.schemas.qubit import DensityMatrix, DriveProtocol

# 3rd party
import numpy as np

# Projections shorter than this carry no usable phase
PROJECTION_THRESHOLD = 1e-12


def advance_reference(coords: np.ndarray, pauli_next: np.ndarray, dt: float, hbar: float) -> np.ndarray:
    """One backaction-free step, computed exactly as the integrator does with dq = 0."""
    coords = np.atleast_2d(coords)
    return coords + unitary_delta(coords, pauli_next, dt, hbar)


def reference_trajectory(init: DensityMatrix, protocol: DriveProtocol, steps: int) -> ReferenceTrajectory:
    """Unitary evolution of init on the grid of a controlled run of the given length."""
    dt = protocol.tau / steps
    pauli = nominal_pauli_series(protocol, steps)
    states = np.empty((steps + 1, 3))
    states[0] = init.as_coords()
    current = states[:1]
    for k in range(steps):
        current = advance_reference(current, pauli[k + 1], dt, protocol.hbar)
        states[k + 1] = current[0]
    return ReferenceTrajectory(times=np.arange(steps + 1) * dt, states=states)


def rabi_phase(coords: np.ndarray) -> np.ndarray:
    """atan2(2 Im rho12, 2 rho11 - 1); grows along a positive sx rotation."""
    coords = np.atleast_2d(coords)
    return np.arctan2(2.0 * coords[:, 2], 2.0 * coords[:, 0] - 1.0)


def wrap_angle(angle: np.ndarray) -> np.ndarray:
    """Map onto (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(angle, dtype=float), 2.0 * math.pi)


def phase_error_array(actual: np.ndarray, desired: np.ndarray) -> np.ndarray:
    actual = np.atleast_2d(actual)
    desired = np.atleast_2d(desired)
    dphi = wrap_angle(rabi_phase(actual) - rabi_phase(desired))
    usable = (_projection_norm(actual) >= PROJECTION_THRESHOLD) & (
        _projection_norm(desired) >= PROJECTION_THRESHOLD
    )
    return np.where(usable, dphi, 0.0)


def _projection_norm(coords: np.ndarray) -> np.ndarray:
    return np.hypot(2.0 * coords[:, 2], 2.0 * coords[:, 0] - 1.0)


def phase_error(actual: DensityMatrix, desired: DensityMatrix) -> float:
    """Lead of the actual Rabi phase over the desired one, in (-pi, pi]."""
    return float(phase_error_array(actual.as_coords(), desired.as_coords())[0])


def controlled_gain(g: float, fp: FeedbackParams, dphi: float | np.ndarray) -> float | np.ndarray:
    """g_t = (1 - f dphi) g, unclipped."""
    return (1.0 - fp.f * dphi) * g
