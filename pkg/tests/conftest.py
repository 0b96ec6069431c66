import sys

import pytest

from imperfect_pm.economics import CostParams
from imperfect_pm.hazard import LinearParams, ModelSpec, WeibullParams
from imperfect_pm.optimizer import Equipment
from imperfect_pm.steady_state import SteadyFunctions

RP = 87600.0
ACTUATOR = WeibullParams(7.4708, 15397.0, 0.8482)
VALVE = LinearParams(1.73e-9, 0.7584)
ACTUATOR_COSTS = CostParams(9.1e-4, 3120.0, 300.0, 1900.0, RP)
VALVE_COSTS = CostParams(9.1e-4, 3120.0, 800.0, 3600.0, RP)


@pytest.fixture(scope="session")
def actuator_sf():
    return SteadyFunctions(ModelSpec.parse("pas-weibull"), ACTUATOR, RP)


@pytest.fixture(scope="session")
def valve_sf():
    return SteadyFunctions(ModelSpec.parse("par-linear"), VALVE, RP)


@pytest.fixture(scope="session")
def npp(actuator_sf, valve_sf):
    return Equipment((("actuator", ACTUATOR_COSTS, actuator_sf), ("valve", VALVE_COSTS, valve_sf)))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
