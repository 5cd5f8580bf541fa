"""Exact 2x2 algebra: drive protocol, Hamiltonians, spectra, Gibbs states."""

# python
import math

# project
from app.core.errors import DomainError
from app.schemas.qubit import (
    DensityMatrix,
    DriveProtocol,
    QubitOperator,
    SpectralDecomposition,
    ThermalSpec,
)

# 3rd party
import numpy as np
from scipy.special import entr

# Below this Pauli norm a Hamiltonian is treated as degenerate
DEGENERACY_THRESHOLD = 1e-15

_TIME_SLACK = 1e-12


def coords_to_bloch(coords: np.ndarray) -> np.ndarray:
    """(rho11, Re rho12, Im rho12) -> (x, y, z) along the last axis."""
    coords = np.asarray(coords, dtype=float)
    return np.stack(
        [2.0 * coords[..., 1], -2.0 * coords[..., 2], 2.0 * coords[..., 0] - 1.0],
        axis=-1,
    )


def bloch_to_coords(bloch: np.ndarray) -> np.ndarray:
    """(x, y, z) -> (rho11, Re rho12, Im rho12) along the last axis."""
    bloch = np.asarray(bloch, dtype=float)
    return np.stack(
        [0.5 * (1.0 + bloch[..., 2]), 0.5 * bloch[..., 0], -0.5 * bloch[..., 1]],
        axis=-1,
    )


def delta_to_bloch(delta: np.ndarray) -> np.ndarray:
    """Traceless increment (d11, Re d12, Im d12) -> Bloch increment."""
    delta = np.asarray(delta, dtype=float)
    return 2.0 * np.stack([delta[..., 1], -delta[..., 2], delta[..., 0]], axis=-1)


def drive_shape(t: np.ndarray | float, protocol: DriveProtocol) -> np.ndarray | float:
    """sech(nu (1 - t/tau)); multiply by the gain to get lambda_t."""
    return 1.0 / np.cosh(protocol.nu * (1.0 - np.asarray(t) / protocol.tau))


def drive_amplitude(t: float, p: DriveProtocol) -> float:
    """lambda_t = g / cosh(nu (1 - t/tau)) for 0 <= t <= tau.

    Raises:
        DomainError: t outside [0, tau]
    """
    if t < -_TIME_SLACK * p.tau or t > p.tau * (1.0 + _TIME_SLACK):
        raise DomainError(f"t={t} outside [0, {p.tau}]")
    return float(p.g * drive_shape(t, p))


def hamiltonian_at(t: float, p: DriveProtocol) -> QubitOperator:
    """H_t = epsilon sz + lambda_t sx."""
    return QubitOperator(cz=p.epsilon, cx=drive_amplitude(t, p))


def eigendecompose(h: QubitOperator) -> SpectralDecomposition:
    """Spectrum c0 -+ |c| with projectors (I -+ n.sigma)/2, n = c/|c|.

    A vanishing Pauli vector yields the computational basis with the
    degeneracy flag set.
    """
    radius = h.norm
    if radius < DEGENERACY_THRESHOLD:
        n = np.array([0.0, 0.0, 1.0])
        degenerate = True
    else:
        n = h.vector / radius
        degenerate = False

    proj_plus = QubitOperator(c0=0.5, cx=0.5 * n[0], cy=0.5 * n[1], cz=0.5 * n[2])
    proj_minus = QubitOperator(c0=0.5, cx=-0.5 * n[0], cy=-0.5 * n[1], cz=-0.5 * n[2])
    return SpectralDecomposition(
        e_minus=h.c0 - radius,
        e_plus=h.c0 + radius,
        proj_minus=proj_minus,
        proj_plus=proj_plus,
        degenerate=degenerate,
    )


def thermal_state(spec: ThermalSpec, h: QubitOperator) -> DensityMatrix:
    """Gibbs state exp(-beta H)/Z, Bloch vector -tanh(beta |c|) n."""
    spectrum = eigendecompose(h)
    if spectrum.degenerate:
        return DensityMatrix.maximally_mixed()
    n = 2.0 * spectrum.proj_plus.vector
    polarization = 1.0 if math.isinf(spec.beta) else math.tanh(spec.beta * h.norm)
    return DensityMatrix.from_pauli_vector(*(-polarization * n))


def eigenstate(spectrum: SpectralDecomposition, index: int) -> DensityMatrix:
    """The pure state Pi_index (trace one, so the projector is itself a state)."""
    n = 2.0 * spectrum.projector(index).vector
    return DensityMatrix.from_pauli_vector(*n)


def eigen_populations(rho: DensityMatrix, spectrum: SpectralDecomposition) -> tuple[float, float]:
    """tr{Pi_m rho} for m = 0, 1."""
    return (
        expectation(rho, spectrum.proj_minus),
        expectation(rho, spectrum.proj_plus),
    )


def expectation(rho: DensityMatrix, a: QubitOperator) -> float:
    """tr{rho A} = c0 + c . r with r the Pauli vector of rho."""
    x, y, z = _pauli_vector(rho)
    return a.c0 + a.cx * x + a.cy * y + a.cz * z


def _pauli_vector(rho: DensityMatrix) -> tuple[float, float, float]:
    return (2.0 * rho.rho12.real, -2.0 * rho.rho12.imag, 2.0 * rho.rho11 - 1.0)


def bloch_coordinates(rho: DensityMatrix) -> tuple[float, float, float]:
    """(2 Re rho12, 2 Im rho12, 2 rho11 - 1).

    y here is the mirror of the Pauli-vector component used by expectation()
    and from_pauli_vector(); entropy and purity do not depend on its sign.
    """
    return (2.0 * rho.rho12.real, 2.0 * rho.rho12.imag, 2.0 * rho.rho11 - 1.0)


def log_partition(beta: float, h: QubitOperator) -> float:
    """ln Z = -beta c0 + ln(2 cosh(beta |c|))."""
    x = beta * h.norm
    return -beta * h.c0 + float(np.logaddexp(x, -x))


def free_energy_difference(spec: ThermalSpec, h0: QubitOperator, htau: QubitOperator) -> float:
    """Delta F = -(1/beta) ln(Z_tau / Z_0).

    Raises:
        DomainError: beta = 0
    """
    if spec.beta <= 0.0 or math.isinf(spec.beta):
        raise DomainError(f"free energy difference needs 0 < beta < inf, got {spec.beta}")
    return -(log_partition(spec.beta, htau) - log_partition(spec.beta, h0)) / spec.beta


def entropy_of_bloch(bloch: np.ndarray) -> np.ndarray:
    """Von Neumann entropy (natural log) of each Bloch vector along the last axis."""
    radius = np.minimum(np.linalg.norm(np.asarray(bloch, dtype=float), axis=-1), 1.0)
    return entr(0.5 * (1.0 + radius)) + entr(0.5 * (1.0 - radius))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """-sum p ln p over the eigenvalues (1 +- |r|)/2 (natural log, k = 1)."""
    return float(entropy_of_bloch(np.array(bloch_coordinates(rho))))


def purity(rho: DensityMatrix) -> float:
    """tr{rho^2} = (1 + |r|^2)/2."""
    return 0.5 * (1.0 + sum(c * c for c in bloch_coordinates(rho)))
