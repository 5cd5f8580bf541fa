"""Work and heat bookkeeping, transition decomposition, TPM statistics, Jarzynski."""

# python
import math
from typing import Optional

# project
from app.core.errors import DomainError, FirstLawViolation, NumericalError, PreconditionError
from app.core.qubit import (
    coords_to_bloch,
    delta_to_bloch,
    drive_shape,
    eigendecompose,
    eigenstate,
    expectation,
    hamiltonian_at,
)
from app.schemas.measurement import StepDecomposition
from app.schemas.qubit import (
    DensityDelta,
    DensityMatrix,
    DriveProtocol,
    QubitOperator,
    SpectralDecomposition,
)
from app.schemas.thermo import (
    STOCHASTIC_TOLERANCE,
    DiscreteDistribution,
    JarzynskiEstimate,
    ThermoLedger,
    TrajectoryBundle,
    TransitionColumn,
)

# 3rd party
import numpy as np
from scipy.linalg import expm

# A single step may violate dU = dW + dQ by at most this much
STEP_RESIDUAL_LIMIT = 1e-10

# Energy differences closer than this are one atom of the distribution
ATOM_MERGE_TOLERANCE = 1e-9

_INITIAL_STATE_TOLERANCE = 1e-9


# -- per-step quantities on arrays of trajectories -------------------------


def energy(bloch: np.ndarray, pauli: np.ndarray) -> np.ndarray:
    """tr{H rho} without the identity part, row by row."""
    return np.einsum("ij,ij->i", np.atleast_2d(pauli), np.atleast_2d(bloch))


def work_increment(bloch_prev: np.ndarray, pauli_prev: np.ndarray, pauli_next: np.ndarray) -> np.ndarray:
    """tr{rho_k (H_{k+1} - H_k)} row by row."""
    return energy(bloch_prev, np.atleast_2d(pauli_next) - np.atleast_2d(pauli_prev))


def heat_increment(d_rho_q: np.ndarray, pauli_next: np.ndarray) -> np.ndarray:
    """tr{H_{k+1} d_rho_q} row by row (increments are traceless)."""
    return energy(delta_to_bloch(np.atleast_2d(d_rho_q)), pauli_next)


# -- scalar operations ---------------------------------------------------


def _delta_expectation(delta: DensityDelta, h: QubitOperator) -> float:
    dx, dy, dz = delta_to_bloch(delta.as_coords())
    return h.cx * dx + h.cy * dy + h.cz * dz


def step_work(rho_prev: DensityMatrix, h_prev: QubitOperator, h_now: QubitOperator) -> float:
    """dW = tr{rho_prev (H_now - H_prev)}."""
    return expectation(rho_prev, h_now - h_prev)


def step_heat(d_rho_q: DensityDelta, h_now: QubitOperator) -> float:
    """dQ = tr{H_now d_rho_q}."""
    return _delta_expectation(d_rho_q, h_now)


def ledger_start(rho0: DensityMatrix, h0: QubitOperator) -> ThermoLedger:
    u0 = expectation(rho0, h0)
    return ThermoLedger(u0=u0, u_now=u0)


def ledger_update(
    ledger: ThermoLedger,
    rho_prev: DensityMatrix,
    rho_now: DensityMatrix,
    h_prev: QubitOperator,
    h_now: QubitOperator,
    decomposition: StepDecomposition,
    trajectory: int = 0,
) -> ThermoLedger:
    """Advance the ledger by one step and check the first law for that step.

    Raises:
        FirstLawViolation: |dU - dW - dQ| above STEP_RESIDUAL_LIMIT
    """
    dw = step_work(rho_prev, h_prev, h_now)
    dq = step_heat(decomposition.d_rho_q, h_now)
    u_now = expectation(rho_now, h_now)
    residual = abs((u_now - ledger.u_now) - dw - dq)
    if residual > STEP_RESIDUAL_LIMIT:
        raise FirstLawViolation(ledger.steps, trajectory, residual)
    return ThermoLedger(
        w_cum=ledger.w_cum + dw,
        q_cum=ledger.q_cum + dq,
        u0=ledger.u0,
        u_now=u_now,
        max_residual=max(ledger.max_residual, residual),
        steps=ledger.steps + 1,
    )


# -- transition probabilities --------------------------------------------


def _mean_and_stderr(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = samples.mean(axis=0)
    if len(samples) < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(len(samples))


def transition_decomposition(
    n: int,
    bundle: TrajectoryBundle,
    basis_0: SpectralDecomposition,
    basis_tau: SpectralDecomposition,
) -> TransitionColumn:
    """Column n of P_tau, dP_W and dP_Q from trajectories started in eigenstate n.

    dP_W and dP_Q contract the time-summed increments with the final
    projectors; P0[m] = tr{Pi^tau_m rho_n0}.

    Raises:
        PreconditionError: a trajectory did not start in eigenstate n of basis_0
    """
    if bundle.n_traj == 0:
        raise PreconditionError("no trajectories for the transition column")
    expected = eigenstate(basis_0, n).as_coords()
    mismatch = float(np.abs(bundle.initial - expected).max())
    if mismatch > _INITIAL_STATE_TOLERANCE:
        raise PreconditionError(
            f"trajectories must start in eigenstate {n} of the initial Hamiltonian "
            f"(off by {mismatch:.3e})"
        )

    rows = per_trajectory_transitions(bundle, basis_tau)
    p_tau, p0, dp_w, dp_q = rows["p_tau"], rows["p0"], rows["dp_w"], rows["dp_q"]
    residual = float(np.abs(p_tau - p0 - dp_w - dp_q).max())

    p_tau_mean, p_tau_err = _mean_and_stderr(p_tau)
    dp_w_mean, dp_w_err = _mean_and_stderr(dp_w)
    dp_q_mean, dp_q_err = _mean_and_stderr(dp_q)
    return TransitionColumn(
        n=n,
        n_traj=bundle.n_traj,
        p_tau=p_tau_mean.tolist(),
        dp_w=dp_w_mean.tolist(),
        dp_q=dp_q_mean.tolist(),
        p0=p0.mean(axis=0).tolist(),
        p_tau_stderr=p_tau_err.tolist(),
        dp_w_stderr=dp_w_err.tolist(),
        dp_q_stderr=dp_q_err.tolist(),
        max_identity_residual=residual,
    )


def per_trajectory_transitions(
    bundle: TrajectoryBundle, basis_tau: SpectralDecomposition
) -> dict[str, np.ndarray]:
    """Per-trajectory P_tau, P0, dP_W, dP_Q rows indexed by final eigenstate m."""
    projectors = basis_tau.projector_vectors()
    return {
        "p_tau": 0.5 + coords_to_bloch(bundle.final) @ projectors.T,
        "p0": 0.5 + coords_to_bloch(bundle.initial) @ projectors.T,
        "dp_w": delta_to_bloch(bundle.sum_dw) @ projectors.T,
        "dp_q": delta_to_bloch(bundle.sum_dq) @ projectors.T,
    }


def unitary_propagator(protocol: DriveProtocol, steps: int) -> np.ndarray:
    """Product of exp(-i H_{k+1} dt/hbar) over the zero-order-hold grid."""
    dt = protocol.tau / steps
    u = np.eye(2, dtype=complex)
    for k in range(1, steps + 1):
        h = hamiltonian_at(k * dt, protocol).matrix()
        u = expm(-1j * h * dt / protocol.hbar) @ u
    return u


def unitary_transition_matrix(protocol: DriveProtocol, steps: int) -> np.ndarray:
    """P[m][n] = |<m_tau| U |n_0>|^2 for the measurement-free protocol."""
    u = unitary_propagator(protocol, steps)
    basis_0, basis_tau = protocol_bases(protocol, steps)
    p = np.empty((2, 2))
    for n in range(2):
        evolved = u @ basis_0.projector(n).matrix() @ u.conj().T
        for m in range(2):
            p[m, n] = float(np.real(np.trace(basis_tau.projector(m).matrix() @ evolved)))
    return p


# -- two-point-measurement statistics ------------------------------------


def tpm_distribution(
    p0_populations: tuple[float, float] | np.ndarray,
    p_tau: np.ndarray | list,
    basis_0: SpectralDecomposition,
    basis_tau: SpectralDecomposition,
    p_tau_stderr: Optional[np.ndarray | list] = None,
    quasi: bool = False,
) -> DiscreteDistribution:
    """Atoms dE_mn = E^tau_m - E^0_n weighted by P_tau[m][n] P0_n.

    Coincident atoms are merged. With p_tau_stderr the weight covariance is
    propagated assuming each column sums to one per trajectory.

    Raises:
        PreconditionError: p_tau is not column stochastic
    """
    p_tau = np.asarray(p_tau, dtype=float)
    pops = np.asarray(p0_populations, dtype=float)
    if p_tau.shape != (2, 2):
        raise PreconditionError(f"transition matrix must be 2x2, got {p_tau.shape}")
    if np.any(np.abs(p_tau.sum(axis=0) - 1.0) > STOCHASTIC_TOLERANCE):
        raise PreconditionError("transition matrix columns must sum to 1")
    if not quasi and (
        np.any(p_tau < -STOCHASTIC_TOLERANCE) or np.any(p_tau > 1.0 + STOCHASTIC_TOLERANCE)
    ):
        raise PreconditionError("transition probabilities must lie in [0, 1]")

    energies_0 = basis_0.energies
    energies_tau = basis_tau.energies
    pairs = [(m, n) for n in range(2) for m in range(2)]
    values = np.array([energies_tau[m] - energies_0[n] for m, n in pairs])
    weights = np.array([p_tau[m, n] * pops[n] for m, n in pairs])

    # group atoms in ascending order of energy change
    order = np.argsort(values, kind="stable")
    groups: list[list[int]] = []
    for i in order:
        if groups and abs(values[i] - values[groups[-1][0]]) <= ATOM_MERGE_TOLERANCE:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    merge = np.zeros((len(groups), len(pairs)))
    for row, members in enumerate(groups):
        merge[row, members] = 1.0

    covariance = None
    if p_tau_stderr is not None:
        stderr = np.asarray(p_tau_stderr, dtype=float)
        cov = np.zeros((len(pairs), len(pairs)))
        for i, (m, n) in enumerate(pairs):
            for j, (m2, n2) in enumerate(pairs):
                if n != n2:
                    continue
                var = stderr[0, n] ** 2
                cov[i, j] = pops[n] ** 2 * (var if m == m2 else -var)
        covariance = (merge @ cov @ merge.T).tolist()

    return DiscreteDistribution(
        support=[float(np.mean(values[g])) for g in groups],
        probabilities=(merge @ weights).tolist(),
        covariance=covariance,
        quasi=quasi,
    )


def jarzynski_estimate(dist: DiscreteDistribution, beta: float, label: str = "") -> JarzynskiEstimate:
    """-(1/beta) ln sum_i p_i exp(-beta W_i), stderr from the weight covariance.

    Raises:
        DomainError: beta not positive and finite
        NumericalError: the estimator sum is not positive
    """
    if not (0.0 < beta < math.inf):
        raise DomainError(f"Jarzynski estimate needs 0 < beta < inf, got {beta}")
    boltzmann = np.exp(-beta * np.asarray(dist.support))
    total = float(np.dot(dist.probabilities, boltzmann))
    if not total > 0.0:
        raise NumericalError(f"nonpositive Jarzynski sum {total!r}")

    stderr = 0.0
    if dist.covariance is not None:
        variance = float(boltzmann @ np.asarray(dist.covariance) @ boltzmann)
        stderr = math.sqrt(max(variance, 0.0)) / (beta * total)
    return JarzynskiEstimate(label=label, beta=beta, delta_f=-math.log(total) / beta, stderr=stderr)


def protocol_bases(protocol: DriveProtocol, steps: int) -> tuple[SpectralDecomposition, SpectralDecomposition]:
    """Eigenbases of the nominal H_0 and H_tau."""
    dt = protocol.tau / steps
    return (
        eigendecompose(hamiltonian_at(0.0, protocol)),
        eigendecompose(hamiltonian_at(steps * dt, protocol)),
    )


def nominal_pauli_series(protocol: DriveProtocol, steps: int) -> np.ndarray:
    """Pauli vectors (lambda_k, 0, epsilon) of the nominal drive at t_k, k = 0..steps."""
    times = np.arange(steps + 1) * (protocol.tau / steps)
    lam = protocol.g * drive_shape(times, protocol)
    return np.stack([lam, np.zeros_like(lam), np.full_like(lam, protocol.epsilon)], axis=-1)

