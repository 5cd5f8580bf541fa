# python
import math

# project
from app.core.feedback import (
    controlled_gain,
    phase_error,
    rabi_phase,
    reference_trajectory,
    wrap_angle,
)
from app.core.integrator import integrate_trajectory
from app.core.qubit import eigendecompose, eigenstate, hamiltonian_at
from app.core.sme import rotate_coords
from app.schemas.feedback import FeedbackParams
from app.schemas.measurement import DetectorModel, NoiseProcess, Scheme
from app.schemas.qubit import DensityMatrix

# 3rd party
import numpy as np
import pytest
from pydantic import ValidationError


def _at_phase(theta: float) -> DensityMatrix:
    """Pure state in the y-z plane with Rabi phase theta."""
    return DensityMatrix.from_pauli_vector(0.0, -math.sin(theta), math.cos(theta))


def test_rabi_phase_of_states():
    assert rabi_phase(_at_phase(0.3).as_coords())[0] == pytest.approx(0.3)
    assert rabi_phase(DensityMatrix(rho11=0.0).as_coords())[0] == pytest.approx(math.pi)


def test_phase_grows_along_positive_drive():
    start = _at_phase(0.1).as_coords()
    turned = rotate_coords(start, np.array([0.5, 0.0, 0.0]), 0.1)
    assert rabi_phase(turned)[0] == pytest.approx(0.1 + 2.0 * 0.5 * 0.1)


def test_phase_error_sign():
    assert phase_error(_at_phase(0.0), _at_phase(0.3)) == pytest.approx(-0.3)
    assert phase_error(_at_phase(0.3), _at_phase(0.0)) == pytest.approx(0.3)


def test_phase_error_wraps():
    assert phase_error(_at_phase(3.0), _at_phase(-3.0)) == pytest.approx(6.0 - 2.0 * math.pi)


@pytest.mark.parametrize("angle", [math.pi, -math.pi])
def test_wrap_angle_keeps_upper_edge(angle):
    assert wrap_angle(angle) == pytest.approx(math.pi)


def test_phase_error_without_projection():
    mixed = DensityMatrix.maximally_mixed()
    along_x = DensityMatrix.from_pauli_vector(1.0, 0.0, 0.0)
    assert phase_error(mixed, _at_phase(1.0)) == 0.0
    assert phase_error(_at_phase(1.0), along_x) == 0.0


def test_controlled_gain():
    fp = FeedbackParams(f=3.0, enabled=True)
    assert controlled_gain(0.625, fp, 0.1) == pytest.approx(0.7 * 0.625)
    assert controlled_gain(0.625, fp, 0.0) == 0.625
    # unclipped
    assert controlled_gain(0.625, fp, 1.0) == pytest.approx(-1.25)


def test_feedback_params_validation():
    with pytest.raises(ValidationError):
        FeedbackParams(f=-1.0)
    with pytest.raises(ValidationError):
        FeedbackParams(f=1.0, gain=2.0)


def test_reference_equals_unmonitored_trajectory(short_protocol, blind_detector):
    steps = 200
    init = eigenstate(eigendecompose(hamiltonian_at(0.0, short_protocol)), 0)
    reference = reference_trajectory(init, short_protocol, steps)
    noise = NoiseProcess.for_detector(0, 0, blind_detector, short_protocol.tau / steps)
    record = integrate_trajectory(init, short_protocol, blind_detector, noise, Scheme.BAYESIAN, steps)

    assert len(reference) == steps + 1
    assert np.array_equal(reference.states, record.states)
    assert reference.state(steps).rho11 == record.state(steps).rho11


def test_feedback_is_inert_without_backaction(short_protocol, blind_detector):
    steps = 200
    init = eigenstate(eigendecompose(hamiltonian_at(0.0, short_protocol)), 0)
    noise = NoiseProcess.for_detector(0, 0, blind_detector, short_protocol.tau / steps)
    controlled = integrate_trajectory(
        init, short_protocol, blind_detector, noise, Scheme.BAYESIAN, steps,
        controller=FeedbackParams(f=3.0, enabled=True),
    )
    free = integrate_trajectory(init, short_protocol, blind_detector, noise, Scheme.BAYESIAN, steps)

    assert np.all(controlled.gains == short_protocol.g)
    assert np.array_equal(controlled.states, free.states)


def test_feedback_adjusts_gain_under_measurement(short_protocol):
    steps = 200
    det = DetectorModel(delta_i=1.0, s0=1.0)
    init = eigenstate(eigendecompose(hamiltonian_at(0.0, short_protocol)), 0)
    noise = NoiseProcess.for_detector(4, 0, det, short_protocol.tau / steps)
    fp = FeedbackParams(f=3.0, enabled=True)
    controlled = integrate_trajectory(init, short_protocol, det, noise, Scheme.BAYESIAN, steps, controller=fp)
    disabled = integrate_trajectory(
        init, short_protocol, det, noise, Scheme.BAYESIAN, steps, controller=FeedbackParams(f=3.0)
    )

    assert np.any(controlled.gains != short_protocol.g)
    assert np.all(disabled.gains == short_protocol.g)
    assert controlled.ledger.max_residual < 1e-10
