"""Experiment runners behind the CLI presets and the HTTP API."""

# python
import time
from pathlib import Path
from typing import Callable, Optional

# project
from app.core.ensemble import run_ensemble, transition_ensembles
from app.core.errors import InvariantViolation
from app.core.logging import get_logger
from app.core.qubit import (
    eigen_populations,
    free_energy_difference,
    hamiltonian_at,
    thermal_state,
)
from app.core.result_storage import FileResultStorage, IResultStorage
from app.core.thermo import (
    jarzynski_estimate,
    per_trajectory_transitions,
    protocol_bases,
    tpm_distribution,
    unitary_transition_matrix,
)
from app.schemas.experiment import (
    ExperimentConfig,
    ExperimentSummary,
    HeatRow,
    HeatStatistics,
    JarzynskiRow,
    JarzynskiSummary,
    Preset,
    TransitionsDocument,
)
from app.schemas.feedback import FeedbackParams
from app.schemas.measurement import DetectorModel
from app.schemas.thermo import JarzynskiEstimate, TransitionDecomposition

# 3rd party
import numpy as np

logger = get_logger(__name__)

TRAJECTORY_COLUMNS = (
    "step", "t", "rho11", "re_rho12", "im_rho12", "xi", "current",
    "dW", "dQ", "dU", "W_cum", "Q_cum",
)

HEAT_HISTOGRAM_BINS = 20


def _feedback(cfg: ExperimentConfig) -> Optional[FeedbackParams]:
    return cfg.feedback if cfg.feedback.enabled else None


def run_fig1(cfg: ExperimentConfig, storage: IResultStorage, workers: int) -> tuple[list[Path], dict]:
    """Single-trajectory work, heat and detector current series."""
    ens = cfg.ensemble().model_copy(update={"n_traj": 1, "full_series": True})
    result = run_ensemble(ens, cfg.physics.protocol(), cfg.physics.detector(), _feedback(cfg), workers)
    record = result.records[0]

    w_cum = np.cumsum(record.work)
    q_cum = np.cumsum(record.heat)
    rows = (
        (
            k + 1,
            record.times[k + 1],
            *record.states[k + 1],
            record.xi[k],
            record.currents[k],
            record.work[k],
            record.heat[k],
            record.energy_change[k],
            w_cum[k],
            q_cum[k],
        )
        for k in range(record.steps)
    )
    path = storage.save_table("fig1_trajectory.csv", cfg, TRAJECTORY_COLUMNS, rows)
    summary = {
        "ledger": record.ledger.model_dump(),
        "clamp_events": record.clamp_events,
    }
    return [path], summary


def _transition_rows(label: str, d: TransitionDecomposition):
    for n in range(2):
        for m in range(2):
            yield (
                label, m, n,
                d.p_tau[m][n], d.p_tau_stderr[m][n],
                d.dp_w[m][n], d.dp_w_stderr[m][n],
                d.dp_q[m][n], d.dp_q_stderr[m][n],
                d.p0[m][n],
            )


def run_transitions(cfg: ExperimentConfig, storage: IResultStorage, workers: int) -> tuple[list[Path], dict]:
    """Averaged P_tau with its work and heat parts; fig3 presets add the uncontrolled run."""
    protocol = cfg.physics.protocol()
    detector = cfg.physics.detector()
    steps = cfg.physics.tau_steps
    ens = cfg.ensemble()

    run = transition_ensembles(ens, protocol, detector, _feedback(cfg), workers)
    comparison = None
    if cfg.feedback.enabled:
        comparison = transition_ensembles(ens, protocol, detector, None, workers)

    document = TransitionsDocument(
        preset=cfg.preset,
        seed=cfg.run.seed,
        steps=steps,
        feedback=cfg.feedback.enabled,
        decomposition=run.decomposition,
        unitary_p_tau=unitary_transition_matrix(protocol, steps).tolist(),
        no_feedback=comparison.decomposition if comparison else None,
        clamp_events=sum(r.clamp_events for r in run.columns),
        max_first_law_residual=max(r.max_first_law_residual for r in run.columns),
        config=cfg,
    )
    name = cfg.preset.value
    files = [storage.save_document(f"{name}_transitions.json", document)]

    rows = list(_transition_rows("feedback" if cfg.feedback.enabled else "monitored", run.decomposition))
    if comparison is not None:
        rows.extend(_transition_rows("no_feedback", comparison.decomposition))
    for n in range(2):
        for m in range(2):
            p = document.unitary_p_tau[m][n]
            rows.append(("unitary", m, n, p, 0.0, "", "", "", "", ""))
    header = (
        "run", "m", "n", "p_tau", "p_tau_stderr", "dp_w", "dp_w_stderr",
        "dp_q", "dp_q_stderr", "p0",
    )
    files.append(storage.save_table(f"{name}_transitions.csv", cfg, header, rows))

    if cfg.preset == Preset.FIG2:
        _, basis_tau = protocol_bases(protocol, steps)
        traj_rows = []
        for n, column in enumerate(run.columns):
            per_traj = per_trajectory_transitions(column.bundle, basis_tau)
            for i in range(column.bundle.n_traj):
                for m in range(2):
                    traj_rows.append((
                        i, m, n,
                        per_traj["p_tau"][i, m], per_traj["p0"][i, m],
                        per_traj["dp_w"][i, m], per_traj["dp_q"][i, m],
                    ))
        files.append(
            storage.save_table(
                "fig2_trajectories.csv",
                cfg,
                ("trajectory", "m", "n", "p_tau", "p0", "dp_w", "dp_q"),
                traj_rows,
            )
        )
    return files, document.model_dump(mode="json", exclude={"config"})


def run_jarzynski(cfg: ExperimentConfig, storage: IResultStorage, workers: int) -> tuple[list[Path], dict]:
    """Free energy from controlled, uncontrolled, work-only and unitary transition statistics."""
    beta = cfg.physics.beta
    thermal = cfg.physics.thermal()
    detector = cfg.physics.detector()
    fb = FeedbackParams(f=cfg.feedback.f, enabled=True)

    rows = []
    exact = None
    for steps in cfg.sweep.tau_steps or [cfg.physics.tau_steps]:
        physics = cfg.physics.model_copy(update={"tau_steps": steps})
        protocol = physics.protocol()
        h0 = hamiltonian_at(0.0, protocol)
        htau = hamiltonian_at(protocol.tau, protocol)
        exact = free_energy_difference(thermal, h0, htau)
        basis_0, basis_tau = protocol_bases(protocol, steps)
        pops = eigen_populations(thermal_state(thermal, h0), basis_0)
        ens = cfg.ensemble(steps)

        controlled = transition_ensembles(ens, protocol, detector, fb, workers).decomposition
        monitored = transition_ensembles(ens, protocol, detector, None, workers).decomposition

        def estimate(label: str, p_tau, stderr=None, quasi: bool = False) -> JarzynskiEstimate:
            dist = tpm_distribution(pops, p_tau, basis_0, basis_tau, p_tau_stderr=stderr, quasi=quasi)
            return jarzynski_estimate(dist, beta, label=f"{label} ({steps} steps)")

        with_fb = estimate("feedback", controlled.p_tau, controlled.p_tau_stderr)
        rows.append(
            JarzynskiRow(
                steps=steps,
                feedback=with_fb,
                no_feedback=estimate("no feedback", monitored.p_tau, monitored.p_tau_stderr),
                work_only=estimate("work only", monitored.work_only(), monitored.dp_w_stderr, quasi=True),
                unitary=estimate("unitary", unitary_transition_matrix(protocol, steps)),
                relative_deviation=abs(with_fb.delta_f - exact) / abs(exact),
                within_3_stderr=abs(with_fb.delta_f - exact) <= 3.0 * with_fb.stderr,
            )
        )
        logger.info(
            "Jarzynski estimate computed",
            steps=steps,
            delta_f_feedback=with_fb.delta_f,
            stderr=with_fb.stderr,
            delta_f_exact=exact,
        )

    main = next((r for r in rows if r.steps == cfg.physics.tau_steps), rows[-1])
    summary = JarzynskiSummary(
        preset=cfg.preset,
        seed=cfg.run.seed,
        beta=beta,
        delta_f_exact=exact,
        delta_f_est=main.feedback.delta_f,
        delta_f_est_stderr=main.feedback.stderr,
        rows=rows,
        config=cfg,
    )
    path = storage.save_document("jarzynski_summary.json", summary)
    return [path], summary.model_dump(mode="json", exclude={"config"})


def run_heat(cfg: ExperimentConfig, storage: IResultStorage, workers: int) -> tuple[list[Path], dict]:
    """Total-heat statistics of the undriven qubit for several measurement strengths."""
    protocol = cfg.physics.protocol()
    rows = []
    for delta_i in cfg.sweep.delta_i or [cfg.physics.delta_i]:
        detector = DetectorModel(delta_i=delta_i, s0=cfg.physics.s0, i0=cfg.physics.i0)
        result = run_ensemble(cfg.ensemble(), protocol, detector, _feedback(cfg), workers)
        counts, edges = np.histogram(result.heat_totals, bins=HEAT_HISTOGRAM_BINS)
        rows.append(
            HeatRow(
                delta_i=delta_i,
                measurement_rate=delta_i**2 / cfg.physics.s0 if cfg.physics.s0 else 0.0,
                heat=result.heat,
                work=result.work,
                histogram_edges=edges.tolist(),
                histogram_counts=counts.tolist(),
                max_first_law_residual=result.max_first_law_residual,
            )
        )
    document = HeatStatistics(preset=cfg.preset, seed=cfg.run.seed, rows=rows, config=cfg)
    path = storage.save_document("heat_statistics.json", document)
    return [path], document.model_dump(mode="json", exclude={"config"})


RUNNERS: dict[Preset, Callable[[ExperimentConfig, IResultStorage, int], tuple[list[Path], dict]]] = {
    Preset.FIG1: run_fig1,
    Preset.FIG2: run_transitions,
    Preset.FIG3A: run_transitions,
    Preset.FIG3B: run_transitions,
    Preset.JARZYNSKI: run_jarzynski,
    Preset.HEAT: run_heat,
}


def run_experiment(cfg: ExperimentConfig, output_dir: Path, workers: int = 1) -> ExperimentSummary:
    """Run the experiment named by cfg.preset and write its outputs to output_dir.

    Raises:
        TrajThermoError: invalid inputs or a result that failed its invariants
    """
    started = time.perf_counter()
    logger.info(
        "Experiment started",
        preset=cfg.preset.value,
        seed=cfg.run.seed,
        n_traj=cfg.run.n_traj,
        steps=cfg.physics.tau_steps,
        scheme=cfg.run.scheme.value,
        output_dir=str(output_dir),
    )
    storage = FileResultStorage(output_dir)
    try:
        files, document = RUNNERS[cfg.preset](cfg, storage, workers)
    except InvariantViolation as e:
        logger.error("Experiment produced an invalid result", preset=cfg.preset.value, error=str(e))
        raise
    logger.info(
        "Experiment finished",
        preset=cfg.preset.value,
        files=[str(f) for f in files],
        elapsed=round(time.perf_counter() - started, 3),
    )
    return ExperimentSummary(
        preset=cfg.preset,
        seed=cfg.run.seed,
        files=[str(f) for f in files],
        document=document,
    )
