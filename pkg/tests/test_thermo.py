# python
import math

# project
from app.core.ensemble import transition_ensembles
from app.core.errors import DomainError, FirstLawViolation, NumericalError, PreconditionError
from app.core.integrator import step
from app.core.qubit import (
    eigen_populations,
    eigendecompose,
    eigenstate,
    expectation,
    free_energy_difference,
    hamiltonian_at,
    thermal_state,
)
from app.core.thermo import (
    jarzynski_estimate,
    ledger_start,
    ledger_update,
    protocol_bases,
    step_heat,
    step_work,
    tpm_distribution,
    transition_decomposition,
    unitary_transition_matrix,
)
from app.schemas.ensemble import EnsembleConfig
from app.schemas.measurement import DetectorModel, Scheme, StepDecomposition
from app.schemas.qubit import DensityDelta, DensityMatrix, QubitOperator, ThermalSpec
from app.schemas.thermo import DiscreteDistribution, TrajectoryBundle

# 3rd party
import numpy as np
import pytest
from scipy.integrate import solve_ivp


def test_step_work_and_heat():
    rho = DensityMatrix.from_pauli_vector(0.6, 0.0, 0.8)
    h_prev = QubitOperator(cx=0.1, cz=0.1)
    h_now = QubitOperator(cx=0.11, cz=0.1)
    assert step_work(rho, h_prev, h_now) == pytest.approx(0.006)
    assert step_heat(DensityDelta(d11=7e-4), h_now) == pytest.approx(1.4e-4)
    assert step_work(rho, h_now, h_now) == 0.0


def test_ledger_follows_a_step(protocol, detector):
    dt = 0.01
    rho0 = eigenstate(eigendecompose(hamiltonian_at(0.0, protocol)), 0)
    h_prev, h_now = hamiltonian_at(0.0, protocol), hamiltonian_at(dt, protocol)
    rho1, decomposition = step(rho0, 0.0, protocol, detector, 0.5, Scheme.BAYESIAN, dt)

    ledger = ledger_update(ledger_start(rho0, h_prev), rho0, rho1, h_prev, h_now, decomposition)
    assert ledger.steps == 1
    assert ledger.u_now == pytest.approx(expectation(rho1, h_now))
    assert ledger.w_cum + ledger.q_cum == pytest.approx(ledger.u_now - ledger.u0, abs=1e-14)
    assert ledger.max_residual < 1e-12


def test_ledger_rejects_inconsistent_step(protocol):
    dt = 0.01
    rho0 = eigenstate(eigendecompose(hamiltonian_at(0.0, protocol)), 0)
    h = hamiltonian_at(0.0, protocol)
    bogus = StepDecomposition(d_rho_w=DensityDelta(), d_rho_q=DensityDelta(d11=0.01), xi=0.0)
    with pytest.raises(FirstLawViolation):
        ledger_update(ledger_start(rho0, h), rho0, rho0, h, hamiltonian_at(dt, protocol), bogus)


def test_unitary_transitions_are_doubly_stochastic(protocol):
    p = unitary_transition_matrix(protocol, 3000)
    assert np.allclose(p.sum(axis=0), 1.0)
    assert np.allclose(p.sum(axis=1), 1.0)
    assert np.all(p >= 0.0)


def test_unitary_jarzynski_recovers_free_energy(protocol):
    steps = 3000
    thermal = ThermalSpec(beta=10.0)
    basis_0, basis_tau = protocol_bases(protocol, steps)
    h0 = hamiltonian_at(0.0, protocol)
    pops = eigen_populations(thermal_state(thermal, h0), basis_0)

    dist = tpm_distribution(pops, unitary_transition_matrix(protocol, steps), basis_0, basis_tau)
    assert dist.support == pytest.approx([-0.7329, -0.5329, 0.5329, 0.7329], abs=1e-4)

    estimate = jarzynski_estimate(dist, 10.0, label="unitary")
    exact = free_energy_difference(thermal, h0, hamiltonian_at(protocol.tau, protocol))
    assert estimate.delta_f == pytest.approx(exact, abs=1e-10)
    assert estimate.stderr == 0.0


def test_tpm_merges_coincident_atoms():
    basis = eigendecompose(QubitOperator(cz=0.5))
    dist = tpm_distribution((0.7, 0.3), np.eye(2), basis, basis)
    assert dist.support == pytest.approx([-1.0, 0.0, 1.0])
    assert dist.probabilities == pytest.approx([0.0, 1.0, 0.0])


def test_tpm_stderr_propagates_to_estimate():
    basis_0 = eigendecompose(QubitOperator(cz=0.1))
    basis_tau = eigendecompose(QubitOperator(cx=0.6, cz=0.1))
    p_tau = np.array([[0.9, 0.2], [0.1, 0.8]])
    dist = tpm_distribution((0.8, 0.2), p_tau, basis_0, basis_tau, p_tau_stderr=np.full((2, 2), 0.01))
    assert dist.covariance is not None
    assert jarzynski_estimate(dist, 10.0).stderr > 0.0


@pytest.mark.parametrize(
    "p_tau",
    [np.array([[0.9, 0.2], [0.2, 0.8]]), np.array([[1.1, 0.0], [-0.1, 1.0]]), np.eye(3)],
)
def test_tpm_rejects_non_stochastic(p_tau):
    basis = eigendecompose(QubitOperator(cz=0.5))
    with pytest.raises(PreconditionError):
        tpm_distribution((0.5, 0.5), p_tau, basis, basis)


def test_tpm_quasi_admits_negative_entries():
    basis = eigendecompose(QubitOperator(cz=0.5))
    dist = tpm_distribution((0.5, 0.5), np.array([[1.1, 0.0], [-0.1, 1.0]]), basis, basis, quasi=True)
    assert dist.quasi
    assert min(dist.probabilities) < 0.0


def test_jarzynski_domain_and_numerical_errors():
    dist = DiscreteDistribution(support=[-1.0, 1.0], probabilities=[0.5, 0.5])
    with pytest.raises(DomainError):
        jarzynski_estimate(dist, 0.0)
    with pytest.raises(DomainError):
        jarzynski_estimate(dist, math.inf)

    negative = DiscreteDistribution(support=[-1.0, 1.0], probabilities=[-0.5, 1.5], quasi=True)
    with pytest.raises(NumericalError):
        jarzynski_estimate(negative, 10.0)


def test_jarzynski_single_atom():
    dist = DiscreteDistribution(support=[0.3], probabilities=[1.0])
    assert jarzynski_estimate(dist, 2.0).delta_f == pytest.approx(0.3)


def test_transition_decomposition_checks_initial_state(protocol):
    basis_0, basis_tau = protocol_bases(protocol, 3000)
    mixed = np.tile(DensityMatrix.maximally_mixed().as_coords(), (3, 1))
    bundle = TrajectoryBundle(initial=mixed, final=mixed, sum_dw=np.zeros((3, 3)), sum_dq=np.zeros((3, 3)))
    with pytest.raises(PreconditionError):
        transition_decomposition(0, bundle, basis_0, basis_tau)

    empty = TrajectoryBundle(initial=np.zeros((0, 3)), final=np.zeros((0, 3)), sum_dw=np.zeros((0, 3)), sum_dq=np.zeros((0, 3)))
    with pytest.raises(PreconditionError):
        transition_decomposition(0, empty, basis_0, basis_tau)


def test_unmonitored_transitions_match_unitary(short_protocol, blind_detector):
    cfg = EnsembleConfig(n_traj=4, seed=3, scheme=Scheme.BAYESIAN, steps=200)
    run = transition_ensembles(cfg, short_protocol, blind_detector)
    d = run.decomposition
    assert np.allclose(d.p_tau, unitary_transition_matrix(short_protocol, 200), atol=1e-8)
    assert np.all(np.array(d.dp_q) == 0.0)
    assert d.max_identity_residual < 1e-10


def _continuous_transition_matrix(protocol) -> np.ndarray:
    """|<m_tau| U |n_0>|^2 with U from an adaptive solve of the time-dependent Schroedinger equation."""

    def rhs(t, y):
        h = hamiltonian_at(min(t, protocol.tau), protocol).matrix()
        return (-1j / protocol.hbar * h @ y.reshape(2, 2)).ravel()

    sol = solve_ivp(
        rhs, (0.0, protocol.tau), np.eye(2, dtype=complex).ravel(), method="DOP853", rtol=1e-12, atol=1e-12
    )
    u = sol.y[:, -1].reshape(2, 2)
    basis_0 = eigendecompose(hamiltonian_at(0.0, protocol))
    basis_tau = eigendecompose(hamiltonian_at(protocol.tau, protocol))
    p = np.empty((2, 2))
    for n in range(2):
        evolved = u @ basis_0.projector(n).matrix() @ u.conj().T
        for m in range(2):
            p[m, n] = np.real(np.trace(basis_tau.projector(m).matrix() @ evolved))
    return p


def test_unmonitored_transitions_match_continuous_propagation(protocol, blind_detector):
    cfg = EnsembleConfig(n_traj=1, seed=0, scheme=Scheme.BAYESIAN, steps=3000)
    d = transition_ensembles(cfg, protocol, blind_detector).decomposition
    assert np.allclose(d.p_tau, _continuous_transition_matrix(protocol), rtol=0.0, atol=1e-6)


def test_monitored_transitions_satisfy_identities(short_protocol):
    det = DetectorModel(delta_i=1.0, s0=25.0)
    cfg = EnsembleConfig(n_traj=16, seed=9, scheme=Scheme.BAYESIAN, steps=200)
    run = transition_ensembles(cfg, short_protocol, det)
    d = run.decomposition
    p_tau, p0, dp_w, dp_q = (np.array(m) for m in (d.p_tau, d.p0, d.dp_w, d.dp_q))
    assert np.allclose(p_tau.sum(axis=0), 1.0, atol=1e-10)
    assert np.allclose(dp_w.sum(axis=0), 0.0, atol=1e-10)
    assert np.allclose(dp_q.sum(axis=0), 0.0, atol=1e-10)
    assert np.allclose(p_tau - p0 - dp_w - dp_q, 0.0, atol=1e-10)
    assert np.any(np.abs(dp_q) > 0.0)
    assert d.n_traj == [16, 16]
    # columns draw from disjoint streams
    assert run.columns[1].config.stream_offset == 16
