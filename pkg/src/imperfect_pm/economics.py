"""Yearly cost and average reliability of components and equipment.

Per component, with ``h*`` the averaged hazard::

    C(M) = 8760 * (c_m + c_c * (rho + h*(M) * M)) / M + 8760 * c_o / RP

in currency per year. Equipment cost is the sum over components, equipment
reliability the product of component average reliabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .steady_state import avg_hazard, avg_reliability

HOURS_PER_YEAR = 8760.0


@dataclass(frozen=True)
class CostParams:
    """Cost data of one component.

    Attributes
    ----------
    rho : float
        Per-demand failure probability.
    c_c, c_m, c_o : float
        Cost of one corrective maintenance, one preventive maintenance and a
        replacement.
    rp : float
        Replacement period (hours).
    """

    rho: float
    c_c: float
    c_m: float
    c_o: float
    rp: float

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        for name in ("c_c", "c_m", "c_o"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.rp > 0:
            raise ValueError("replacement period must be positive")

    def scaled(self, factor):
        return CostParams(self.rho, self.c_c * factor, self.c_m * factor, self.c_o * factor, self.rp)


def component_cost(cp, sf, M):
    """Yearly cost of one component maintained every ``M`` hours."""
    if not 0 < M <= cp.rp:
        raise ValueError(f"maintenance interval must lie in (0, {cp.rp}], got {M}")
    expected_failures = avg_hazard(sf, M) * M
    per_hour = (cp.c_m + cp.c_c * (cp.rho + expected_failures)) / M + cp.c_o / cp.rp
    return HOURS_PER_YEAR * per_hour


def _check_lengths(components, intervals):
    if len(components) != len(intervals):
        raise ValueError(f"{len(components)} components but {len(intervals)} intervals")


def equipment_cost(components, intervals):
    """Sum of component costs; ``components`` is a list of ``(CostParams, SteadyFunctions)``."""
    _check_lengths(components, intervals)
    return math.fsum(component_cost(cp, sf, M) for (cp, sf), M in zip(components, intervals))


def equipment_reliability(components, intervals, accuracy=None):
    """Product of average reliabilities; ``components`` is a list of ``SteadyFunctions``."""
    _check_lengths(components, intervals)
    out = 1.0
    for sf, M in zip(components, intervals):
        out *= avg_reliability(sf, M, accuracy)
    return out
