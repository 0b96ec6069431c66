import numpy as np
import pytest
from numpy.testing import assert_allclose

from imperfect_pm.economics import HOURS_PER_YEAR, CostParams, component_cost, equipment_cost, equipment_reliability
from imperfect_pm.hazard import LinearParams, ModelSpec, WeibullParams
from imperfect_pm.steady_state import SteadyFunctions, avg_hazard, avg_reliability

from conftest import ACTUATOR_COSTS, RP, VALVE_COSTS
from reference_values import INITIAL, OPT_COST, OPT_REL

DAY = 24.0


def _oracle_cost(cp, h_star, M):
    # spreadsheet-style recomputation of the yearly cost
    preventive = cp.c_m / M
    corrective = cp.c_c * (cp.rho + h_star * M) / M
    return 8760.0 * (preventive + corrective) + 8760.0 * cp.c_o / cp.rp


def test_zero_hazard_cost():
    cp = CostParams(0.0, 3120.0, 300.0, 1900.0, RP)
    sf = SteadyFunctions(ModelSpec.parse("par-linear"), LinearParams(1e-300, 0.5), RP)
    assert_allclose(component_cost(cp, sf, 4320.0), 8760 * 300 / 4320 + 8760 * 1900 / RP, rtol=1e-14)


def test_component_examples(actuator_sf, valve_sf):
    a = component_cost(ACTUATOR_COSTS, actuator_sf, 4320.0)
    v = component_cost(VALVE_COSTS, valve_sf, 4320.0)
    assert_allclose(a, _oracle_cost(ACTUATOR_COSTS, avg_hazard(actuator_sf, 4320.0), 4320.0), rtol=1e-14)
    assert_allclose(a, 805.7, atol=0.1)
    assert_allclose(v, 2565.8, atol=0.1)


def test_equipment_values(npp, actuator_sf, valve_sf):
    pairs = [(ACTUATOR_COSTS, actuator_sf), (VALVE_COSTS, valve_sf)]
    (ma, mv), c, r = INITIAL
    x = [ma * DAY, mv * DAY]
    assert_allclose(equipment_cost(pairs, x), c, rtol=5e-3)
    assert_allclose(equipment_reliability([actuator_sf, valve_sf], x), r, atol=1e-3)
    (ma, mv), c, _ = OPT_COST
    assert_allclose(equipment_cost(pairs, [ma * DAY, mv * DAY]), c, rtol=1e-2)
    (ma, mv), _, r = OPT_REL
    assert_allclose(equipment_reliability([actuator_sf, valve_sf], [ma * DAY, mv * DAY]), r, atol=5e-4)
    assert npp.cost(x) == equipment_cost(pairs, x)


def test_single_component(actuator_sf):
    assert equipment_cost([(ACTUATOR_COSTS, actuator_sf)], [5000.0]) == component_cost(ACTUATOR_COSTS, actuator_sf, 5000.0)
    assert equipment_reliability([actuator_sf], [5000.0]) == avg_reliability(actuator_sf, 5000.0)


def test_permutation_invariance(actuator_sf, valve_sf):
    pairs = [(ACTUATOR_COSTS, actuator_sf), (VALVE_COSTS, valve_sf)]
    x = [5100.0, 3900.0]
    assert_allclose(equipment_cost(pairs[::-1], x[::-1]), equipment_cost(pairs, x), rtol=1e-15)
    assert_allclose(
        equipment_reliability([valve_sf, actuator_sf], x[::-1]),
        equipment_reliability([actuator_sf, valve_sf], x),
        rtol=1e-15,
    )


@pytest.mark.parametrize("lam", [0.5, 3.0, 1.1e3])
def test_currency_scaling(actuator_sf, valve_sf, lam):
    pairs = [(ACTUATOR_COSTS, actuator_sf), (VALVE_COSTS, valve_sf)]
    scaled = [(cp.scaled(lam), sf) for cp, sf in pairs]
    x = [6000.0, 4000.0]
    assert_allclose(equipment_cost(scaled, x), lam * equipment_cost(pairs, x), rtol=1e-13)


def test_cost_shape(actuator_sf):
    small = [component_cost(ACTUATOR_COSTS, actuator_sf, M) for M in (10.0, 1.0, 0.1)]
    assert small[0] < small[1] < small[2]
    assert small[2] > 1e6
    big = np.linspace(40000, RP, 20)
    vals = [component_cost(ACTUATOR_COSTS, actuator_sf, M) for M in big]
    assert np.all(np.diff(vals) > 0)


def test_validation(actuator_sf):
    with pytest.raises(ValueError):
        CostParams(1.5, 1, 1, 1, RP)
    with pytest.raises(ValueError):
        CostParams(0.1, -1, 1, 1, RP)
    with pytest.raises(ValueError):
        component_cost(ACTUATOR_COSTS, actuator_sf, 0.0)
    with pytest.raises(ValueError):
        equipment_cost([(ACTUATOR_COSTS, actuator_sf)], [1.0, 2.0])
    assert HOURS_PER_YEAR == 8760.0
