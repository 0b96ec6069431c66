"""Monte Carlo failure histories under known PAS/PAR models.

Failures follow a non-homogeneous Poisson process whose intensity is the
induced hazard ``h_m(t)``. Failures are minimally repaired (the virtual age is
untouched); only preventive maintenance moves the age. Inter-event draws use
inversion: with ``E = -ln(1 - U)`` the next failure solves
``H(omega_next) = H(omega_cur) + E`` in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import SingularHazard
from .hazard import (
    age_offset,
    cum_hazard_at_age,
    hazard_at_age,
    inverse_cum_hazard,
    period_age_offsets,
)
from .history import ComponentHistory, FleetHistory
from .rng import Xoshiro256


@dataclass(frozen=True)
class SimConfig:
    spec: object
    params: object
    maintenance_interval: float
    horizon: float
    n_units: int
    seed: int = 0
    component_id: str = "C1"

    def __post_init__(self):
        if not self.maintenance_interval > 0:
            raise ValueError("maintenance interval must be positive")
        if not self.horizon >= self.maintenance_interval:
            raise ValueError("horizon must be at least one maintenance interval")
        if self.n_units < 1:
            raise ValueError("n_units must be >= 1")
        if self.spec.hazard is not self.params.family:
            raise TypeError(f"{type(self.params).__name__} does not match model {self.spec.label}")


def maintenance_schedule(interval, horizon):
    """Epochs ``M, 2M, ...`` strictly before ``horizon``."""
    n = int(math.floor(horizon / interval))
    taus = [k * interval for k in range(1, n + 1)]
    # an epoch that coincides with the horizon is dropped; censoring wins
    return [t for t in taus if t < horizon]


def _draw(rng):
    return -math.log1p(-rng.random())


def sample_period_failures(spec, params, maintenance_times, m, period_start, period_end, rng):
    """Failure times of one unit inside period ``m`` by inversion.

    Parameters
    ----------
    rng : object with ``random()``
        e.g. a single-stream :class:`~imperfect_pm.rng.Xoshiro256` or a
        :class:`numpy.random.Generator`.
    """
    offset = age_offset(spec.im, params.epsilon, maintenance_times, m)
    t = period_start
    out = []
    while True:
        w = max(t - offset, 0.0)
        target = cum_hazard_at_age(params, w) + _draw(rng)
        t = inverse_cum_hazard(params, target) + offset
        if not t <= period_end:
            return out
        out.append(t)


def sample_period_failures_thinning(spec, params, maintenance_times, m, period_start, period_end, rng):
    """Same process as :func:`sample_period_failures`, by Lewis-Shedler thinning.

    The hazards here are monotone in age, so the larger endpoint value bounds
    the intensity over the period.
    """
    offset = age_offset(spec.im, params.epsilon, maintenance_times, m)
    w0 = max(period_start - offset, 0.0)
    w1 = max(period_end - offset, 0.0)
    try:
        lam = max(hazard_at_age(params, w0), hazard_at_age(params, w1))
    except SingularHazard:
        raise SingularHazard("thinning needs a bounded intensity on the period") from None
    if not math.isfinite(lam):
        raise SingularHazard("thinning needs a bounded intensity on the period")
    out = []
    if lam <= 0:
        return out
    t = period_start
    while True:
        t += _draw(rng) / lam
        if t > period_end:
            return out
        if rng.random() * lam < hazard_at_age(params, max(t - offset, 0.0)):
            out.append(t)


def simulate_unit_arrays(cfg):
    """Failure times per unit and the shared maintenance schedule.

    Returns ``(taus, failures)`` where ``failures[i]`` is a sorted array for
    unit ``i``. Unit ``i`` draws from stream ``cfg.seed + i``.
    """
    spec, params = cfg.spec, cfg.params
    taus = maintenance_schedule(cfg.maintenance_interval, cfg.horizon)
    offsets = period_age_offsets(spec.im, params.epsilon, taus)
    bounds = [0.0] + taus + [float(cfg.horizon)]
    rng = Xoshiro256(cfg.seed, cfg.n_units)
    n = cfg.n_units
    units, times = [], []
    for m in range(len(bounds) - 1):
        start, end, off = bounds[m], bounds[m + 1], offsets[m]
        t = np.full(n, start)
        active = np.ones(n, dtype=bool)
        while active.any():
            idx = np.flatnonzero(active)
            e = -np.log1p(-rng.uniform(active))
            w = np.maximum(t[idx] - off, 0.0)
            t_next = inverse_cum_hazard(params, cum_hazard_at_age(params, w) + e) + off
            t_next = np.atleast_1d(t_next)
            hit = t_next <= end
            units.append(idx[hit])
            times.append(t_next[hit])
            t[idx] = t_next
            active[idx[~hit]] = False
    units = np.concatenate(units) if units else np.zeros(0, dtype=int)
    times = np.concatenate(times) if times else np.zeros(0)
    order = np.lexsort((times, units))
    units, times = units[order], times[order]
    split = np.searchsorted(units, np.arange(1, n))
    return taus, np.split(times, split)


def simulate_fleet(cfg):
    """Simulate ``cfg.n_units`` independent histories of one component.

    Maintenance happens at ``M, 2M, ...`` strictly before the horizon and every
    unit is censored at the horizon. The result is reproducible from
    ``cfg.seed``.
    """
    taus, failures = simulate_unit_arrays(cfg)
    width = len(str(cfg.n_units))
    histories = [
        ComponentHistory.from_failures(taus, f.tolist(), cfg.horizon, unit_id=f"U{i + 1:0{width}d}")
        for i, f in enumerate(failures)
    ]
    return FleetHistory({cfg.component_id: histories})
