"""Seeded Monte Carlo over trajectories and the deterministic dephasing reference."""

# python
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

# project
from app.core.errors import IntegrationBlowupError, InvariantViolation
from app.core.integrator import BatchIntegrator, BatchOutcome, record_from_outcome, standard_normals
from app.core.logging import get_logger
from app.core.qubit import (
    bloch_to_coords,
    coords_to_bloch,
    eigen_populations,
    eigendecompose,
    eigenstate,
    entropy_of_bloch,
    hamiltonian_at,
    thermal_state,
)
from app.core.thermo import nominal_pauli_series, protocol_bases, transition_decomposition
from app.schemas.ensemble import (
    EnsembleConfig,
    EnsembleResult,
    InitialStateKind,
    InitialStateSpec,
    MomentSummary,
    TransitionRun,
)
from app.schemas.feedback import FeedbackParams
from app.schemas.measurement import DetectorModel
from app.schemas.qubit import DensityMatrix, DriveProtocol, StateSeries, ThermalSpec
from app.schemas.thermo import TrajectoryBundle, TransitionDecomposition

# 3rd party
import numpy as np
from pydantic import ValidationError

logger = get_logger(__name__)

# share of trajectory steps allowed to need a positivity clamp
CLAMP_BUDGET = 1e-3


def _choice_generator(seed: int, stream_id: int) -> np.random.Generator:
    # separate child of the trajectory's stream, so noise draws are untouched
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream_id, 1)))
    )


def initial_states(
    spec: InitialStateSpec, protocol: DriveProtocol, seed: int, stream_ids: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Initial coordinates per trajectory and the eigen-index each one started in (-1 if none)."""
    n = len(stream_ids)
    h0 = hamiltonian_at(0.0, protocol)
    basis_0 = eigendecompose(h0)

    if spec.kind == InitialStateKind.EXPLICIT:
        coords = DensityMatrix.from_coords(np.asarray(spec.coords)).as_coords()
        return np.tile(coords, (n, 1)), np.full(n, -1)

    if spec.kind == InitialStateKind.EIGENSTATE:
        coords = eigenstate(basis_0, spec.index).as_coords()
        return np.tile(coords, (n, 1)), np.full(n, spec.index)

    # thermal mixture sampled trajectory by trajectory
    p_lower, _ = eigen_populations(thermal_state(ThermalSpec(beta=spec.beta), h0), basis_0)
    draws = np.array([_choice_generator(seed, int(s)).random() for s in stream_ids])
    index = np.where(draws < p_lower, 0, 1)
    states = np.array([eigenstate(basis_0, 0).as_coords(), eigenstate(basis_0, 1).as_coords()])
    return states[index], index


def _integrate_batch(
    integrator: BatchIntegrator,
    initial: np.ndarray,
    seed: int,
    stream_ids: np.ndarray,
    full_series: bool,
) -> BatchOutcome:
    normals = standard_normals(seed, stream_ids, integrator.steps)
    return integrator.run(initial, normals, stream_ids, full_series=full_series)


def run_ensemble(
    cfg: EnsembleConfig,
    protocol: DriveProtocol,
    det: DetectorModel,
    fb: Optional[FeedbackParams] = None,
    workers: int = 1,
) -> EnsembleResult:
    """Integrate cfg.n_traj trajectories; trajectory i draws from stream cfg.stream_offset + i.

    Batches have a fixed size and are reduced in trajectory order, so the
    result does not depend on the number of workers.

    Raises:
        IntegrationBlowupError: some trajectory left the physical set
    """
    started = time.perf_counter()
    integrator = BatchIntegrator(
        protocol,
        det,
        cfg.scheme,
        cfg.steps,
        feedback=fb,
        clamp_tolerance=cfg.clamp_tolerance,
        record_stride=cfg.record_stride,
    )
    stream_ids = cfg.stream_offset + np.arange(cfg.n_traj)
    initial, initial_index = initial_states(cfg.initial_state, protocol, cfg.seed, stream_ids)

    bounds = range(0, cfg.n_traj, cfg.batch_size)
    tasks = [
        (
            integrator,
            initial[lo : lo + cfg.batch_size],
            cfg.seed,
            stream_ids[lo : lo + cfg.batch_size],
            cfg.full_series,
        )
        for lo in bounds
    ]
    logger.info(
        "Ensemble started",
        n_traj=cfg.n_traj,
        steps=cfg.steps,
        scheme=cfg.scheme.value,
        seed=cfg.seed,
        batches=len(tasks),
        workers=workers,
        feedback=bool(fb and fb.enabled),
    )

    try:
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_integrate_batch, *zip(*tasks)))
        else:
            outcomes = [_integrate_batch(*task) for task in tasks]
    except IntegrationBlowupError as e:
        logger.error(
            "Trajectory left the physical set",
            trajectory=e.trajectory,
            step=e.step,
            violation=e.violation,
            clamp_tolerance=cfg.clamp_tolerance,
            error_type=type(e).__name__,
        )
        raise

    result = _reduce(cfg, integrator, outcomes, initial_index)
    logger.info(
        "Ensemble finished",
        n_traj=cfg.n_traj,
        clamp_events=result.clamp_events,
        clamp_fraction=result.clamp_fraction,
        max_first_law_residual=result.max_first_law_residual,
        elapsed=round(time.perf_counter() - started, 3),
    )
    if result.clamp_fraction > CLAMP_BUDGET:
        logger.warning(
            "Clamp budget exceeded",
            scheme=cfg.scheme.value,
            clamp_fraction=result.clamp_fraction,
            budget=CLAMP_BUDGET,
        )
    return result


def _reduce(
    cfg: EnsembleConfig,
    integrator: BatchIntegrator,
    outcomes: list[BatchOutcome],
    initial_index: np.ndarray,
) -> EnsembleResult:
    def joined(name: str) -> np.ndarray:
        return np.concatenate([getattr(o, name) for o in outcomes])

    recorded = joined("recorded_states")
    n = cfg.n_traj
    mean_state = recorded.mean(axis=0)
    if n > 1:
        stderr_state = recorded.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        stderr_state = np.zeros_like(mean_state)

    work_totals = joined("w_cum")
    heat_totals = joined("q_cum")
    clamp_events = int(joined("clamp_events").sum())

    records = None
    if cfg.full_series:
        records = [
            record_from_outcome(o, row, integrator.times)
            for o in outcomes
            for row in range(len(o.trajectory_ids))
        ]

    return EnsembleResult(
        config=cfg,
        times=integrator.times[:: cfg.record_stride],
        mean_state=mean_state,
        stderr_state=stderr_state,
        entropy=entropy_of_bloch(coords_to_bloch(mean_state)),
        work=MomentSummary.of(work_totals),
        heat=MomentSummary.of(heat_totals),
        work_totals=work_totals,
        heat_totals=heat_totals,
        initial_index=initial_index,
        clamp_events=clamp_events,
        clamp_fraction=clamp_events / (n * cfg.steps),
        max_first_law_residual=float(joined("max_residual").max()),
        bundle=TrajectoryBundle(
            initial=joined("initial"),
            final=joined("final"),
            sum_dw=joined("sum_dw"),
            sum_dq=joined("sum_dq"),
        ),
        records=records,
    )


def transition_ensembles(
    cfg: EnsembleConfig,
    protocol: DriveProtocol,
    det: DetectorModel,
    fb: Optional[FeedbackParams] = None,
    workers: int = 1,
) -> TransitionRun:
    """cfg.n_traj trajectories from each eigenstate of H_0, on disjoint noise streams."""
    basis_0, basis_tau = protocol_bases(protocol, cfg.steps)
    results = []
    columns = []
    for n in range(2):
        column_cfg = cfg.model_copy(
            update={
                "initial_state": InitialStateSpec(kind=InitialStateKind.EIGENSTATE, index=n),
                "stream_offset": cfg.stream_offset + n * cfg.n_traj,
            }
        )
        result = run_ensemble(column_cfg, protocol, det, fb, workers=workers)
        results.append(result)
        columns.append(transition_decomposition(n, result.bundle, basis_0, basis_tau))
    try:
        decomposition = TransitionDecomposition.from_columns(columns)
    except ValidationError as e:
        logger.error("Transition decomposition failed its invariants", error=str(e))
        raise InvariantViolation(f"transition decomposition rejected: {e}") from e
    return TransitionRun(decomposition=decomposition, columns=results)


def lindblad_reference(
    init: DensityMatrix, protocol: DriveProtocol, det: DetectorModel, steps: int
) -> StateSeries:
    """Ensemble-averaged dynamics: unitary rotation plus dephasing at Gamma = dI^2/(4 S0).

    Classical RK4 on the Bloch vector with H_{k+1} held over step k, matching
    the grid of the stochastic integrator.
    """
    dt = protocol.tau / steps
    gamma = det.dephasing_rate
    pauli = nominal_pauli_series(protocol, steps)

    def rhs(r: np.ndarray, c: np.ndarray) -> np.ndarray:
        return 2.0 / protocol.hbar * np.cross(c, r) - gamma * np.array([r[0], r[1], 0.0])

    bloch = np.empty((steps + 1, 3))
    bloch[0] = coords_to_bloch(init.as_coords())
    r = bloch[0]
    for k in range(steps):
        c = pauli[k + 1]
        k1 = rhs(r, c)
        k2 = rhs(r + 0.5 * dt * k1, c)
        k3 = rhs(r + 0.5 * dt * k2, c)
        k4 = rhs(r + dt * k3, c)
        r = r + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        bloch[k + 1] = r
    return StateSeries(times=np.arange(steps + 1) * dt, states=bloch_to_coords(bloch))
