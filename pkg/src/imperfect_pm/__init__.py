"""Imperfect preventive maintenance: virtual-age models, estimation, model
selection, averaged cost/reliability and maintenance-interval optimization."""

from importlib import resources

from .economics import CostParams, component_cost, equipment_cost, equipment_reliability
from .estimation import FitOptions, FitResult, fit, log_likelihood, nelder_mead
from .hazard import (
    ALL_SPECS,
    HazardFamily,
    ImModel,
    LinearParams,
    ModelSpec,
    WeibullParams,
    cum_hazard,
    hazard,
    virtual_age,
)
from .history import ComponentHistory, FleetHistory, parse_event_log, read_event_log, to_csv
from .optimizer import Equipment, optimize_equipment, pareto_front, solve_sops
from .selection import aic, bic, lcv, select
from .simulator import SimConfig, simulate_fleet
from .steady_state import SteadyFunctions, avg_hazard, avg_reliability, closed_form_ra

__version__ = "0.1.0"


def npp_case_text():
    """JSON text of the bundled actuator/valve case."""
    return resources.files(__package__).joinpath("data/npp_case.json").read_text(encoding="utf-8")
