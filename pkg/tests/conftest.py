# project
from app.schemas.measurement import DetectorModel
from app.schemas.qubit import DriveProtocol

# 3rd party
import pytest


@pytest.fixture(autouse=True)
def isolated_dirs(tmp_path, monkeypatch):
    """Keep logs and results of every test inside its tmp_path."""
    monkeypatch.setenv("TRAJTHERMO_OUTPUT_DIR", str(tmp_path / "results"))
    monkeypatch.setenv("TRAJTHERMO_LOG_DIR", str(tmp_path / "logs"))
    return tmp_path


@pytest.fixture
def protocol():
    """Default drive: g = 0.625, nu = 8, tau = 3000 dt with dt = 0.01."""
    return DriveProtocol(g=0.625, nu=8.0, tau=30.0, epsilon=0.1)


@pytest.fixture
def short_protocol():
    """Same drive shape on a 200-step grid."""
    return DriveProtocol(g=0.625, nu=8.0, tau=2.0, epsilon=0.1)


@pytest.fixture
def detector():
    return DetectorModel(delta_i=1.0, s0=2500.0)


@pytest.fixture
def blind_detector():
    return DetectorModel(delta_i=0.0, s0=2500.0)
