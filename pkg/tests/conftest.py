import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from beamsim.beamformer import TxPlacement
from beamsim.geometry import build_geometry
from beamsim.phase_law import PhaseVoltageLaw, default_synthetic_law

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def geometry():
    return build_geometry(12, 82, 0.014)


@pytest.fixture(scope="session")
def law():
    return default_synthetic_law()


@pytest.fixture(scope="session")
def linear_law():
    return PhaseVoltageLaw(np.array([0.0, 5.0]), np.array([0.0, -330.0]), np.zeros(2))


@pytest.fixture(scope="session")
def tx():
    return TxPlacement((0.0, 0.0, 3.2))


def pytest_terminal_summary(terminalreporter):
    reports = [r for key in ("passed", "failed") for r in terminalreporter.stats.get(key, [])
               if r.when == "call" and "test_acceptance.py" in r.nodeid]
    if not reports:
        return
    terminalreporter.section("acceptance criteria")
    for r in sorted(reports, key=lambda r: r.nodeid):
        props = dict(r.user_properties)
        status = "PASS" if r.passed else "FAIL"
        terminalreporter.write_line(f"{status}  {props.get('criterion', r.nodeid)}: "
                                    f"{props.get('measured', '')}")
