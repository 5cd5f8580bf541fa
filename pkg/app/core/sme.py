"""Vectorized kernels of the conditional (stochastic) master equation.

Every kernel acts on arrays of shape (n, 3) holding (rho11, Re rho12, Im rho12)
for n independent trajectories. Measurement terms follow the Ito form

    d rho11 = rho11 (1 - rho11) (2 dI/S0) xi dt
    d rho12 = [-Gamma rho12 + (1 - 2 rho11) rho12 (dI/S0) xi] dt,   Gamma = dI^2/(4 S0)

and the unitary part is the exact rotation generated by H = c0 + c.sigma.
"""

# project
from app.schemas.measurement import DetectorModel, Scheme

# 3rd party
import numpy as np

# Positivity violations at or below this level are floating-point rounding
ROUNDING_TOLERANCE = 1e-12


def rotate_coords(coords: np.ndarray, pauli: np.ndarray, dt: float, hbar: float = 1.0) -> np.ndarray:
    """Apply U = exp(-i H dt/hbar) to the states: the Bloch vector turns by 2|c|dt/hbar about c."""
    coords = np.atleast_2d(coords)
    pauli = np.broadcast_to(np.asarray(pauli, dtype=float), coords.shape)

    x = 2.0 * coords[:, 1]
    y = -2.0 * coords[:, 2]
    z = 2.0 * coords[:, 0] - 1.0
    r = np.stack([x, y, z], axis=-1)

    norm = np.sqrt(np.einsum("ij,ij->i", pauli, pauli))
    safe = np.where(norm > 0.0, norm, 1.0)
    axis = pauli / safe[:, None]
    theta = 2.0 * norm * dt / hbar
    cos_t = np.cos(theta)[:, None]
    sin_t = np.sin(theta)[:, None]

    along = np.einsum("ij,ij->i", axis, r)[:, None]
    rotated = r * cos_t + np.cross(axis, r) * sin_t + axis * along * (1.0 - cos_t)
    return np.stack(
        [0.5 * (1.0 + rotated[:, 2]), 0.5 * rotated[:, 0], -0.5 * rotated[:, 1]],
        axis=-1,
    )


def unitary_delta(coords: np.ndarray, pauli: np.ndarray, dt: float, hbar: float = 1.0) -> np.ndarray:
    coords = np.atleast_2d(coords)
    return rotate_coords(coords, pauli, dt, hbar) - coords


def measurement_drift(coords: np.ndarray, detector: DetectorModel) -> np.ndarray:
    """Ito drift of the measurement terms: pure dephasing of the coherence."""
    gamma = detector.dephasing_rate
    drift = np.zeros_like(coords)
    drift[:, 1] = -gamma * coords[:, 1]
    drift[:, 2] = -gamma * coords[:, 2]
    return drift


def measurement_noise(coords: np.ndarray, detector: DetectorModel) -> np.ndarray:
    """Coefficient vector b multiplying xi dt."""
    a = detector.coupling
    p = coords[:, 0]
    odd = a * (1.0 - 2.0 * p)
    return np.stack(
        [2.0 * a * p * (1.0 - p), odd * coords[:, 1], odd * coords[:, 2]], axis=-1
    )


def noise_jacobian(coords: np.ndarray, detector: DetectorModel) -> np.ndarray:
    """d b_i / d x_j over (rho11, Re rho12, Im rho12), shape (n, 3, 3)."""
    a = detector.coupling
    p = coords[:, 0]
    jac = np.zeros(coords.shape + (3,))
    jac[:, 0, 0] = 2.0 * a * (1.0 - 2.0 * p)
    jac[:, 1, 0] = -2.0 * a * coords[:, 1]
    jac[:, 1, 1] = a * (1.0 - 2.0 * p)
    jac[:, 2, 0] = -2.0 * a * coords[:, 2]
    jac[:, 2, 2] = a * (1.0 - 2.0 * p)
    return jac


def stratonovich_correction(coords: np.ndarray, detector: DetectorModel) -> np.ndarray:
    """-(1/2) sigma^2 (b . grad) b with sigma^2 = S0/2."""
    b = measurement_noise(coords, detector)
    jac = noise_jacobian(coords, detector)
    return -0.5 * detector.noise_variance * np.einsum("nij,nj->ni", jac, b)


def stratonovich_drift(coords: np.ndarray, detector: DetectorModel) -> np.ndarray:
    return measurement_drift(coords, detector) + stratonovich_correction(coords, detector)


def ito_euler_increment(
    coords: np.ndarray, xi: np.ndarray, dt: float, detector: DetectorModel
) -> np.ndarray:
    """Euler-Maruyama step of the Ito measurement terms."""
    xi = np.asarray(xi, dtype=float).reshape(-1, 1)
    return (
        measurement_drift(coords, detector) * dt
        + measurement_noise(coords, detector) * xi * dt
    )


def heun_increment(
    coords: np.ndarray, xi: np.ndarray, dt: float, detector: DetectorModel
) -> np.ndarray:
    """Predictor-corrector step on the Stratonovich form, xi frozen over the step."""
    xi = np.asarray(xi, dtype=float).reshape(-1, 1)
    drift0 = stratonovich_drift(coords, detector)
    noise0 = measurement_noise(coords, detector)
    predictor = coords + drift0 * dt + noise0 * xi * dt
    drift1 = stratonovich_drift(predictor, detector)
    noise1 = measurement_noise(predictor, detector)
    return 0.5 * (drift0 + drift1) * dt + 0.5 * (noise0 + noise1) * xi * dt


def bayesian_increment(
    coords: np.ndarray, xi: np.ndarray, dt: float, detector: DetectorModel
) -> np.ndarray:
    """Bayes update with the step-averaged current I = I0 + dI (rho11 - 1/2) + xi.

    The current's likelihoods under the two basis states have variance
    S0/(2 dt); their log ratio is s = 2 dt (dI/S0)(dI (rho11 - 1/2) + xi).
    """
    xi = np.asarray(xi, dtype=float)
    p = coords[:, 0]
    s = 2.0 * dt * detector.coupling * (detector.delta_i * (p - 0.5) + xi)
    up = np.exp(0.5 * s)
    down = np.exp(-0.5 * s)
    norm = p * up + (1.0 - p) * down
    updated = np.stack(
        [p * up / norm, coords[:, 1] / norm, coords[:, 2] / norm], axis=-1
    )
    return updated - coords


_INCREMENTS = {
    Scheme.ITO_EULER: ito_euler_increment,
    Scheme.STRATONOVICH_HEUN: heun_increment,
    Scheme.BAYESIAN: bayesian_increment,
}


def measurement_step(
    coords: np.ndarray,
    xi: np.ndarray,
    dt: float,
    detector: DetectorModel,
    scheme: Scheme,
) -> np.ndarray:
    """Nonunitary increment of one step under the chosen scheme."""
    coords = np.atleast_2d(coords)
    if detector.delta_i == 0.0:
        return np.zeros_like(coords)
    return _INCREMENTS[scheme](coords, xi, dt, detector)


def positivity_violation(coords: np.ndarray) -> np.ndarray:
    """How far each state lies outside the physical set (0 inside)."""
    p = coords[:, 0]
    clipped = np.clip(p, 0.0, 1.0)
    excess = coords[:, 1] ** 2 + coords[:, 2] ** 2 - clipped * (1.0 - clipped)
    return np.maximum(np.abs(p - clipped), np.maximum(excess, 0.0))


def project_physical(coords: np.ndarray) -> np.ndarray:
    """Clip rho11 to [0, 1] and shrink rho12 onto the positivity disk."""
    p = np.clip(coords[:, 0], 0.0, 1.0)
    bound = p * (1.0 - p)
    modulus2 = coords[:, 1] ** 2 + coords[:, 2] ** 2
    outside = modulus2 > bound
    scale = np.ones_like(p)
    scale[outside] = np.sqrt(bound[outside] / modulus2[outside])
    return np.stack([p, coords[:, 1] * scale, coords[:, 2] * scale], axis=-1)
