# project
from app.core.error_utils import handle_endpoint_error
from app.core.logging import get_logger
from app.core.qubit import eigendecompose, free_energy_difference, hamiltonian_at
from app.schemas.qubit import DriveProtocol, ThermalSpec
from app.schemas.requests import FreeEnergyResponse

# 3rd party
from fastapi import APIRouter, Query


router = APIRouter()
logger = get_logger(__name__)


@router.get("/free-energy", response_model=FreeEnergyResponse)
async def free_energy(
    epsilon: float = Query(0.1, description="Static splitting"),
    g: float = Query(0.625, ge=0.0, description="Peak drive amplitude"),
    nu: float = Query(8.0, ge=0.0, description="Drive shape parameter"),
    beta: float = Query(10.0, ge=0.0, description="Inverse temperature"),
) -> FreeEnergyResponse:
    """Free energy difference between the initial and final Hamiltonians

    Returns:
        FreeEnergyResponse: spectra and Delta F
    """
    try:
        protocol = DriveProtocol(g=g, nu=nu, tau=1.0, epsilon=epsilon)
        h0 = hamiltonian_at(0.0, protocol)
        htau = hamiltonian_at(protocol.tau, protocol)
        delta_f = free_energy_difference(ThermalSpec(beta=beta), h0, htau)
    except Exception as e:
        handle_endpoint_error(e, logger, "Failed to compute free energy", beta=beta)

    logger.info("Free energy computed", epsilon=epsilon, g=g, nu=nu, beta=beta, delta_f=delta_f)
    return FreeEnergyResponse(
        epsilon=epsilon,
        g=g,
        nu=nu,
        beta=beta,
        energies_initial=list(eigendecompose(h0).energies),
        energies_final=list(eigendecompose(htau).energies),
        delta_f=delta_f,
    )
