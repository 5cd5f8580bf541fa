# python
import json
import logging
import math

# project
from app.core.ensemble import CLAMP_BUDGET, initial_states, lindblad_reference, run_ensemble
from app.core.integrator import integrate_trajectory
from app.core.logging import LOG_FILE_NAME, setup_logging
from app.core.qubit import coords_to_bloch, eigendecompose, eigenstate, hamiltonian_at
from app.schemas.ensemble import EnsembleConfig, InitialStateKind, InitialStateSpec
from app.schemas.feedback import FeedbackParams
from app.schemas.measurement import DetectorModel, NoiseProcess, Scheme
from app.schemas.qubit import DensityMatrix, DriveProtocol

# 3rd party
import numpy as np
import pytest
from pydantic import ValidationError


def test_single_trajectory_ensemble_matches_integrator(short_protocol, detector):
    steps = 200
    cfg = EnsembleConfig(n_traj=1, seed=5, scheme=Scheme.BAYESIAN, steps=steps, full_series=True)
    result = run_ensemble(cfg, short_protocol, detector)

    init = eigenstate(eigendecompose(hamiltonian_at(0.0, short_protocol)), 0)
    noise = NoiseProcess.for_detector(5, 0, detector, short_protocol.tau / steps)
    record = integrate_trajectory(init, short_protocol, detector, noise, Scheme.BAYESIAN, steps)

    assert np.array_equal(result.records[0].states, record.states)
    assert result.work_totals[0] == record.ledger.w_cum
    assert result.heat.variance == 0.0


def test_ensemble_independent_of_workers(short_protocol, detector):
    cfg = EnsembleConfig(n_traj=10, seed=77, scheme=Scheme.BAYESIAN, steps=200, batch_size=4, record_stride=50)
    fb = FeedbackParams(f=3.0, enabled=True)
    serial = run_ensemble(cfg, short_protocol, detector, fb, workers=1)
    parallel = run_ensemble(cfg, short_protocol, detector, fb, workers=2)

    assert np.array_equal(serial.work_totals, parallel.work_totals)
    assert np.array_equal(serial.heat_totals, parallel.heat_totals)
    assert np.array_equal(serial.mean_state, parallel.mean_state)
    assert serial.mean_state.shape == (5, 3)
    assert len(serial.times) == 5


def test_ensemble_streams_follow_trajectory_index(short_protocol, detector):
    base = EnsembleConfig(n_traj=6, seed=1, scheme=Scheme.BAYESIAN, steps=200)
    full = run_ensemble(base, short_protocol, detector)
    tail = run_ensemble(base.model_copy(update={"n_traj": 2, "stream_offset": 4}), short_protocol, detector)
    assert np.allclose(full.bundle.final[4:], tail.bundle.final, rtol=0.0, atol=1e-14)


def test_ensemble_reports_first_law_and_clamps(short_protocol, detector):
    cfg = EnsembleConfig(n_traj=8, seed=2, scheme=Scheme.BAYESIAN, steps=200)
    result = run_ensemble(cfg, short_protocol, detector)
    assert result.max_first_law_residual < 1e-10
    assert 0.0 <= result.clamp_fraction < 1e-3
    assert np.all(result.initial_index == 0)
    assert result.entropy.shape == (201,)
    assert result.entropy[0] == pytest.approx(0.0, abs=1e-9)


def test_thermal_initial_states(protocol):
    spec = InitialStateSpec(kind=InitialStateKind.THERMAL, beta=10.0)
    ids = np.arange(2000)
    coords, index = initial_states(spec, protocol, 3, ids)
    again, _ = initial_states(spec, protocol, 3, ids)

    h0 = hamiltonian_at(0.0, protocol)
    p_lower = 1.0 / (1.0 + math.exp(-2.0 * 10.0 * h0.norm))
    assert np.mean(index == 0) == pytest.approx(p_lower, abs=0.04)
    assert np.array_equal(coords, again)
    lower = eigenstate(eigendecompose(h0), 0).as_coords()
    assert np.array_equal(coords[index == 0][0], lower)


def test_initial_state_spec_validation():
    with pytest.raises(ValidationError):
        InitialStateSpec(kind=InitialStateKind.THERMAL)
    with pytest.raises(ValidationError):
        InitialStateSpec(kind=InitialStateKind.EXPLICIT)
    with pytest.raises(ValidationError):
        EnsembleConfig(n_traj=1, seed=0, steps=200, record_stride=3)


def test_lindblad_reference_without_drive():
    protocol = DriveProtocol(g=0.0, nu=8.0, tau=3.0, epsilon=0.1)
    det = DetectorModel(delta_i=1.0, s0=25.0)
    series = lindblad_reference(DensityMatrix.from_pauli_vector(1.0, 0.0, 0.0), protocol, det, 300)

    t = series.times
    decay = np.exp(-det.dephasing_rate * t)
    expected = np.stack([decay * np.cos(0.2 * t), decay * np.sin(0.2 * t), np.zeros_like(t)], axis=-1)
    assert np.allclose(coords_to_bloch(series.states), expected, atol=1e-9)


def test_ensemble_mean_follows_lindblad_reference(protocol, detector):
    steps, stride = 3000, 300
    cfg = EnsembleConfig(n_traj=2000, seed=20141024, scheme=Scheme.BAYESIAN, steps=steps, record_stride=stride)
    result = run_ensemble(cfg, protocol, detector)

    init = eigenstate(eigendecompose(hamiltonian_at(0.0, protocol)), 0)
    reference = lindblad_reference(init, protocol, detector, steps).states[::stride]
    assert result.mean_state.shape == (11, 3)
    # t = 0 is exact and carries no spread
    deviation = np.abs(result.mean_state[1:] - reference[1:])
    assert np.all(deviation <= 3.0 * result.stderr_state[1:])


def test_undriven_coherence_decays_at_the_dephasing_rate(detector):
    protocol = DriveProtocol(g=0.0, nu=8.0, tau=30.0, epsilon=0.1)
    spec = InitialStateSpec(kind=InitialStateKind.EXPLICIT, coords=(0.5, 0.5, 0.0))
    cfg = EnsembleConfig(
        n_traj=2000, seed=20141024, scheme=Scheme.BAYESIAN, steps=3000, record_stride=300, initial_state=spec
    )
    result = run_ensemble(cfg, protocol, detector)

    re, im = result.mean_state[1:, 1], result.mean_state[1:, 2]
    se_re, se_im = result.stderr_state[1:, 1], result.stderr_state[1:, 2]
    modulus = np.hypot(re, im)
    stderr = np.hypot(re * se_re, im * se_im) / modulus
    expected = 0.5 * np.exp(-detector.dephasing_rate * result.times[1:])
    assert np.all(np.abs(modulus - expected) <= 3.0 * stderr)


@pytest.mark.parametrize("steps", [3000, 6000])
def test_ito_and_heun_ensembles_agree(protocol, detector, steps):
    means = {}
    for scheme in (Scheme.ITO_EULER, Scheme.STRATONOVICH_HEUN):
        cfg = EnsembleConfig(n_traj=300, seed=20141024, scheme=scheme, steps=steps, record_stride=steps)
        result = run_ensemble(cfg, protocol, detector)
        means[scheme] = (result.mean_state[-1, 0], result.stderr_state[-1, 0])
    (ito, se_ito), (heun, se_heun) = means.values()
    assert abs(ito - heun) <= 3.0 * math.hypot(se_ito, se_heun)


def test_scheme_gap_shrinks_with_the_step(protocol, detector):
    gaps = []
    for steps in (3000, 6000):
        finals = [
            run_ensemble(
                EnsembleConfig(n_traj=300, seed=20141024, scheme=scheme, steps=steps, record_stride=steps),
                protocol,
                detector,
            ).mean_state[-1, 0]
            for scheme in (Scheme.ITO_EULER, Scheme.STRATONOVICH_HEUN)
        ]
        gaps.append(abs(finals[0] - finals[1]))
    assert gaps[1] < gaps[0]


def test_heat_spread_grows_with_measurement_strength():
    protocol = DriveProtocol(g=0.0, nu=8.0, tau=30.0, epsilon=0.1)
    spec = InitialStateSpec(kind=InitialStateKind.EXPLICIT, coords=(0.5, 0.5, 0.0))
    cfg = EnsembleConfig(
        n_traj=200, seed=20141024, scheme=Scheme.BAYESIAN, steps=3000, record_stride=100, initial_state=spec
    )
    variances = []
    for delta_i in (5.0, 10.0, 20.0):
        result = run_ensemble(cfg, protocol, DetectorModel(delta_i=delta_i, s0=2500.0))
        assert np.all(result.work_totals == 0.0)
        variances.append(result.heat.variance)
    assert variances[0] < variances[1] < variances[2]


def test_euler_clamps_are_reported_against_the_budget(tmp_path, protocol, detector):
    setup_logging(str(tmp_path), level="INFO")
    fractions = {}
    for scheme in (Scheme.BAYESIAN, Scheme.ITO_EULER):
        cfg = EnsembleConfig(n_traj=8, seed=20141024, scheme=scheme, steps=3000, record_stride=3000)
        fractions[scheme] = run_ensemble(cfg, protocol, detector).clamp_fraction
    for handler in logging.getLogger().handlers:
        handler.flush()

    assert fractions[Scheme.BAYESIAN] < CLAMP_BUDGET
    assert fractions[Scheme.ITO_EULER] > CLAMP_BUDGET
    events = [json.loads(line) for line in (tmp_path / LOG_FILE_NAME).read_text(encoding="utf-8").splitlines()]
    warnings = [e for e in events if e["event"] == "Clamp budget exceeded"]
    assert [e["scheme"] for e in warnings] == ["ito-euler"]
    assert warnings[0]["clamp_fraction"] == pytest.approx(fractions[Scheme.ITO_EULER])
