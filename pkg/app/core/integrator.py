"""Trajectory integration of the monitored qubit with per-step work/heat split.

One step k -> k+1 applies the measurement update to rho_k (d_rho_q), then the
exact unitary of the held Hamiltonian H_{k+1} (d_rho_w), and books
dW = tr{rho_k (H_{k+1} - H_k)}, dQ = tr{H_{k+1} d_rho_q}.
"""

# python
import math
from typing import Optional

# project
from app.core.errors import FirstLawViolation, IntegrationBlowupError
from app.core.feedback import advance_reference, controlled_gain, phase_error_array
from app.core.qubit import coords_to_bloch, drive_shape
from app.core.sme import (
    ROUNDING_TOLERANCE,
    measurement_step,
    positivity_violation,
    project_physical,
    unitary_delta,
)
from app.core.thermo import STEP_RESIDUAL_LIMIT, energy, heat_increment, work_increment
from app.schemas.feedback import FeedbackParams
from app.schemas.measurement import (
    DetectorModel,
    NoiseProcess,
    Scheme,
    StepDecomposition,
    TrajectoryRecord,
)
from app.schemas.qubit import DensityDelta, DensityMatrix, DriveProtocol, QubitOperator
from app.schemas.thermo import ThermoLedger

# 3rd party
import numpy as np
from pydantic import BaseModel, ConfigDict

DEFAULT_CLAMP_TOLERANCE = 1e-4


# -- noise ----------------------------------------------------------------


def noise_generator(seed: int, stream_id: int) -> np.random.Generator:
    """Counter-based generator owned by one trajectory."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream_id,))))


def standard_normals(seed: int, stream_ids: np.ndarray, steps: int) -> np.ndarray:
    """Unit-variance draws z[i, k] for every stream, independent of batching."""
    return np.stack([noise_generator(seed, int(s)).standard_normal(steps) for s in stream_ids])


def noise_samples(noise: NoiseProcess, count: int) -> np.ndarray:
    """xi_0 .. xi_{count-1} of one trajectory."""
    return noise.sigma_step * noise_generator(noise.seed, noise.stream_id).standard_normal(count)


def sample_noise(noise: NoiseProcess, k: int) -> float:
    """xi_k = sigma_step * z_k, deterministic in (seed, stream_id, k)."""
    if k < 0:
        raise ValueError(f"step index must be nonnegative, got {k}")
    return float(noise_samples(noise, k + 1)[k])


# -- single-step operations -------------------------------------------------


def unitary_increment(rho: DensityMatrix, h: QubitOperator, dt: float, hbar: float = 1.0) -> DensityDelta:
    """U rho U^dagger - rho for U = exp(-i h dt/hbar).

    Agrees with the commutator form -(i/hbar)[h, rho] dt only to first order in dt;
    the exact rotation keeps the unitary part energy-neutral and purity-preserving.
    """
    return DensityDelta.from_coords(unitary_delta(rho.as_coords(), h.vector, dt, hbar)[0])


def measurement_increment(rho: DensityMatrix, xi: float, dt: float, det: DetectorModel) -> DensityDelta:
    """Ito measurement increment of the conditional state."""
    return DensityDelta.from_coords(
        measurement_step(rho.as_coords(), np.array([xi]), dt, det, Scheme.ITO_EULER)[0]
    )


def detector_current(rho: DensityMatrix, xi: float, det: DetectorModel) -> float:
    """I = I0 + (dI/2)(2 rho11 - 1) + xi."""
    return det.i0 + 0.5 * det.delta_i * (2.0 * rho.rho11 - 1.0) + xi


def _advance(
    coords: np.ndarray,
    xi: np.ndarray,
    pauli_next: np.ndarray,
    dt: float,
    hbar: float,
    detector: DetectorModel,
    scheme: Scheme,
    clamp_tolerance: float,
    step_index: int,
    trajectory_ids: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Returns (new state, d_rho_w, d_rho_q, clamped mask); projection corrections land in d_rho_q."""
    dq = measurement_step(coords, xi, dt, detector, scheme)
    dw = unitary_delta(coords + dq, pauli_next, dt, hbar)
    candidate = coords + dw + dq

    violation = positivity_violation(candidate)
    worst = int(np.argmax(violation))
    if violation[worst] > clamp_tolerance:
        raise IntegrationBlowupError(step_index, int(trajectory_ids[worst]), float(violation[worst]))

    clamped = violation > ROUNDING_TOLERANCE
    if not clamped.any():
        return candidate, dw, dq, clamped
    dq = dq.copy()
    dq[clamped] += project_physical(candidate[clamped]) - candidate[clamped]
    return coords + dw + dq, dw, dq, clamped


def step(
    rho: DensityMatrix,
    t: float,
    protocol: DriveProtocol,
    det: DetectorModel,
    xi: float,
    scheme: Scheme,
    dt: float,
    gain: Optional[float] = None,
    clamp_tolerance: float = DEFAULT_CLAMP_TOLERANCE,
) -> tuple[DensityMatrix, StepDecomposition]:
    """Advance rho from t to t + dt under H(t + dt); gain overrides protocol.g.

    Raises:
        IntegrationBlowupError: the state left the physical set beyond clamp_tolerance
    """
    g = protocol.g if gain is None else gain
    pauli = np.array([g * drive_shape(t + dt, protocol), 0.0, protocol.epsilon])
    new, dw, dq, _ = _advance(
        np.atleast_2d(rho.as_coords()),
        np.array([xi]),
        pauli,
        dt,
        protocol.hbar,
        det,
        scheme,
        clamp_tolerance,
        step_index=int(round(t / dt)),
        trajectory_ids=np.array([0]),
    )
    return DensityMatrix.from_coords(new[0]), StepDecomposition(
        d_rho_w=DensityDelta.from_coords(dw[0]),
        d_rho_q=DensityDelta.from_coords(dq[0]),
        xi=xi,
    )


# -- batch engine --------------------------------------------------------


class BatchOutcome(BaseModel):
    """Results of integrating a batch of trajectories side by side.

    Full per-step series are present only when requested.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    trajectory_ids: np.ndarray
    recorded_states: np.ndarray
    initial: np.ndarray
    final: np.ndarray
    sum_dw: np.ndarray
    sum_dq: np.ndarray
    w_cum: np.ndarray
    q_cum: np.ndarray
    u0: np.ndarray
    u_now: np.ndarray
    max_residual: np.ndarray
    clamp_events: np.ndarray
    series: Optional[dict[str, np.ndarray]] = None


class BatchIntegrator:
    """Integrates many independent trajectories in lockstep with numpy.

    Rows never interact, so each trajectory's result depends only on its
    initial state and its noise draws.
    """

    def __init__(
        self,
        protocol: DriveProtocol,
        detector: DetectorModel,
        scheme: Scheme,
        steps: int,
        feedback: Optional[FeedbackParams] = None,
        clamp_tolerance: float = DEFAULT_CLAMP_TOLERANCE,
        record_stride: int = 1,
    ) -> None:
        if steps < 1:
            raise ValueError(f"steps must be positive, got {steps}")
        if steps % record_stride:
            raise ValueError(f"record_stride {record_stride} does not divide steps {steps}")
        self.protocol = protocol
        self.detector = detector
        self.scheme = scheme
        self.steps = steps
        self.dt = protocol.tau / steps
        self.feedback = feedback if feedback is not None and feedback.enabled else None
        self.clamp_tolerance = clamp_tolerance
        self.record_stride = record_stride
        self.times = np.arange(steps + 1) * self.dt
        self.shape = drive_shape(self.times, protocol)
        self.sigma_step = math.sqrt(detector.s0 / (2.0 * self.dt))

    def _pauli(self, gains: np.ndarray, k: int) -> np.ndarray:
        lam = gains * self.shape[k]
        return np.stack(
            [lam, np.zeros_like(lam), np.full_like(lam, self.protocol.epsilon)], axis=-1
        )

    def run(
        self,
        initial: np.ndarray,
        normals: np.ndarray,
        trajectory_ids: np.ndarray,
        full_series: bool = False,
    ) -> BatchOutcome:
        """Integrate rows of initial with noise sigma_step * normals[:, k].

        Raises:
            IntegrationBlowupError: a state left the physical set beyond tolerance
            FirstLawViolation: a step broke dU = dW + dQ beyond STEP_RESIDUAL_LIMIT
        """
        initial = np.atleast_2d(np.asarray(initial, dtype=float))
        n = len(initial)
        steps = self.steps
        hbar = self.protocol.hbar
        nominal = np.full(n, self.protocol.g)

        state = initial.copy()
        reference = initial.copy() if self.feedback else None
        pauli_prev = self._pauli(nominal, 0)
        u_prev = energy(coords_to_bloch(state), pauli_prev)
        u0 = u_prev.copy()

        recorded = np.empty((n, steps // self.record_stride + 1, 3))
        recorded[:, 0] = state
        sum_dw = np.zeros((n, 3))
        sum_dq = np.zeros((n, 3))
        w_cum = np.zeros(n)
        q_cum = np.zeros(n)
        max_residual = np.zeros(n)
        clamp_events = np.zeros(n, dtype=int)

        series = None
        if full_series:
            series = {
                "states": np.empty((n, steps + 1, 3)),
                "xi": np.empty((n, steps)),
                "currents": np.empty((n, steps)),
                "d_rho_w": np.empty((n, steps, 3)),
                "d_rho_q": np.empty((n, steps, 3)),
                "work": np.empty((n, steps)),
                "heat": np.empty((n, steps)),
                "energy_change": np.empty((n, steps)),
                "gains": np.empty((n, steps)),
            }
            series["states"][:, 0] = state

        for k in range(steps):
            if self.feedback:
                dphi = phase_error_array(state, reference)
                gains = controlled_gain(self.protocol.g, self.feedback, dphi)
            else:
                gains = nominal
            pauli_next = self._pauli(gains, k + 1)
            xi = self.sigma_step * normals[:, k]

            new, dw, dq, clamped = _advance(
                state,
                xi,
                pauli_next,
                self.dt,
                hbar,
                self.detector,
                self.scheme,
                self.clamp_tolerance,
                k,
                trajectory_ids,
            )

            bloch = coords_to_bloch(state)
            dw_energy = work_increment(bloch, pauli_prev, pauli_next)
            dq_energy = heat_increment(dq, pauli_next)
            u_next = energy(coords_to_bloch(new), pauli_next)
            du = u_next - u_prev
            residual = np.abs(du - dw_energy - dq_energy)
            worst = int(np.argmax(residual))
            if residual[worst] > STEP_RESIDUAL_LIMIT:
                raise FirstLawViolation(k, int(trajectory_ids[worst]), float(residual[worst]))

            if series is not None:
                series["xi"][:, k] = xi
                series["currents"][:, k] = (
                    self.detector.i0 + 0.5 * self.detector.delta_i * (2.0 * state[:, 0] - 1.0) + xi
                )
                series["d_rho_w"][:, k] = dw
                series["d_rho_q"][:, k] = dq
                series["work"][:, k] = dw_energy
                series["heat"][:, k] = dq_energy
                series["energy_change"][:, k] = du
                series["gains"][:, k] = gains
                series["states"][:, k + 1] = new

            np.maximum(max_residual, residual, out=max_residual)
            clamp_events += clamped
            sum_dw += dw
            sum_dq += dq
            w_cum += dw_energy
            q_cum += dq_energy
            if reference is not None:
                reference = advance_reference(reference, self._pauli(nominal, k + 1), self.dt, hbar)

            state = new
            pauli_prev = pauli_next
            u_prev = u_next
            if (k + 1) % self.record_stride == 0:
                recorded[:, (k + 1) // self.record_stride] = state

        return BatchOutcome(
            trajectory_ids=np.asarray(trajectory_ids),
            recorded_states=recorded,
            initial=initial,
            final=state,
            sum_dw=sum_dw,
            sum_dq=sum_dq,
            w_cum=w_cum,
            q_cum=q_cum,
            u0=u0,
            u_now=u_prev,
            max_residual=max_residual,
            clamp_events=clamp_events,
            series=series,
        )


def record_from_outcome(outcome: BatchOutcome, row: int, times: np.ndarray) -> TrajectoryRecord:
    """TrajectoryRecord of one row of a batch integrated with full_series=True."""
    series = outcome.series
    if series is None:
        raise ValueError("batch was integrated without full series")
    steps = series["xi"].shape[1]
    return TrajectoryRecord(
        trajectory=int(outcome.trajectory_ids[row]),
        times=times,
        states=series["states"][row],
        xi=series["xi"][row],
        currents=series["currents"][row],
        d_rho_w=series["d_rho_w"][row],
        d_rho_q=series["d_rho_q"][row],
        work=series["work"][row],
        heat=series["heat"][row],
        energy_change=series["energy_change"][row],
        gains=series["gains"][row],
        ledger=ThermoLedger(
            w_cum=float(outcome.w_cum[row]),
            q_cum=float(outcome.q_cum[row]),
            u0=float(outcome.u0[row]),
            u_now=float(outcome.u_now[row]),
            max_residual=float(outcome.max_residual[row]),
            steps=steps,
        ),
        clamp_events=int(outcome.clamp_events[row]),
    )


def integrate_trajectory(
    init: DensityMatrix,
    protocol: DriveProtocol,
    det: DetectorModel,
    noise: NoiseProcess,
    scheme: Scheme,
    steps: int,
    controller: Optional[FeedbackParams] = None,
    clamp_tolerance: float = DEFAULT_CLAMP_TOLERANCE,
) -> TrajectoryRecord:
    """Full record of one realization on the grid dt = tau / steps.

    The noise process supplies the stream; its sigma_step must match the grid.
    """
    integrator = BatchIntegrator(
        protocol, det, scheme, steps, feedback=controller, clamp_tolerance=clamp_tolerance
    )
    if not math.isclose(noise.sigma_step, integrator.sigma_step, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(
            f"noise sigma_step {noise.sigma_step} does not match the grid ({integrator.sigma_step})"
        )
    ids = np.array([noise.stream_id])
    outcome = integrator.run(
        init.as_coords()[None, :],
        standard_normals(noise.seed, ids, steps),
        ids,
        full_series=True,
    )
    return record_from_outcome(outcome, 0, integrator.times)
