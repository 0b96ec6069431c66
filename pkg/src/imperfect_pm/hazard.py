"""Virtual-age models (PAS, PAR) and the linear / Weibull hazards built on them.

Within period ``m`` (the span after the ``(m-1)``-th maintenance) the virtual
age at chronological time ``t`` is

* PAS: ``t - sum_{k=0}^{m-2} (1-eps)^k * eps * tau_{m-k-1}``
* PAR: ``t - eps * tau_{m-1}``

and the induced hazard is the baseline hazard evaluated at that age.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np

from .exceptions import NegativeAge, SingularHazard

# omega >= -AGE_SLACK * scale is treated as rounding noise and clamped to zero
AGE_SLACK = 1e-9


class ImModel(enum.Enum):
    PAS = "PAS"
    PAR = "PAR"


class HazardFamily(enum.Enum):
    LINEAR = "Linear"
    WEIBULL = "Weibull"


@dataclass(frozen=True)
class ModelSpec:
    im: ImModel
    hazard: HazardFamily

    @classmethod
    def parse(cls, text):
        """Parse ``"pas-weibull"``, ``"PAR-linear"`` and similar labels."""
        try:
            im, hz = text.strip().replace("_", "-").split("-")
            return cls(ImModel(im.upper()), HazardFamily(hz.capitalize()))
        except ValueError:
            raise ValueError(f"unknown model {text!r}; expected e.g. 'pas-weibull' or 'par-linear'") from None

    @property
    def label(self):
        return f"{self.im.value}-{self.hazard.value.lower()}"

    @property
    def n_params(self):
        return 2 if self.hazard is HazardFamily.LINEAR else 3

    def __str__(self):
        return self.label

    def __lt__(self, other):
        return self.label < other.label


ALL_SPECS = tuple(ModelSpec(im, hz) for im in ImModel for hz in HazardFamily)


def _check_epsilon(epsilon):
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")


@dataclass(frozen=True)
class LinearParams:
    """Linear hazard ``alpha * omega`` (alpha in 1/h^2)."""

    alpha: float
    epsilon: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        _check_epsilon(self.epsilon)

    family = HazardFamily.LINEAR

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class WeibullParams:
    """Weibull hazard ``beta / eta**beta * omega**(beta - 1)`` (eta in hours)."""

    beta: float
    eta: float
    epsilon: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        _check_epsilon(self.epsilon)

    family = HazardFamily.WEIBULL

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def make_params(family, **values):
    """Build the parameter object for ``family`` from keyword values."""
    if isinstance(family, ModelSpec):
        family = family.hazard
    if family is HazardFamily.LINEAR:
        return LinearParams(alpha=float(values["alpha"]), epsilon=float(values["epsilon"]))
    return WeibullParams(beta=float(values["beta"]), eta=float(values["eta"]), epsilon=float(values["epsilon"]))


def _check_match(spec, params):
    if spec.hazard is not params.family:
        raise TypeError(f"{type(params).__name__} does not match model {spec.label}")


# --- baseline functions of the age -------------------------------------------


def hazard_at_age(params, omega):
    """Baseline hazard at age ``omega`` (scalar or array)."""
    omega = np.asarray(omega, dtype=float)
    if isinstance(params, LinearParams):
        out = params.alpha * omega
    else:
        b, eta = params.beta, params.eta
        if b < 1 and np.any(omega == 0):
            raise SingularHazard("Weibull hazard with beta < 1 is infinite at age 0")
        with np.errstate(divide="ignore"):
            out = b / eta**b * omega ** (b - 1.0)
    return out if out.ndim else float(out)


def cum_hazard_at_age(params, omega):
    omega = np.asarray(omega, dtype=float)
    if isinstance(params, LinearParams):
        out = 0.5 * params.alpha * omega**2
    else:
        out = (omega / params.eta) ** params.beta
    return out if out.ndim else float(out)


def inverse_cum_hazard(params, value):
    """Age ``omega`` with ``H(omega) = value``."""
    value = np.asarray(value, dtype=float)
    if isinstance(params, LinearParams):
        out = np.sqrt(2.0 * value / params.alpha)
    else:
        out = params.eta * value ** (1.0 / params.beta)
    return out if out.ndim else float(out)


# --- virtual age ----------------------------------------------------------------


def age_offset(im, epsilon, maintenance_times, m):
    """Amount subtracted from ``t`` to get the virtual age in period ``m``.

    Uses the explicit finite sum for PAS.
    """
    if m < 1:
        raise ValueError(f"period index must be >= 1, got {m}")
    if m == 1:
        return 0.0
    if len(maintenance_times) < m - 1:
        raise ValueError(f"period {m} needs {m - 1} maintenance times, got {len(maintenance_times)}")
    tau = maintenance_times
    if im is ImModel.PAR:
        return epsilon * tau[m - 2]
    # tau_j is tau[j - 1]
    return sum((1.0 - epsilon) ** k * epsilon * tau[m - k - 2] for k in range(m - 1))


def virtual_age(im, epsilon, maintenance_times, m, t, scale=None):
    """Virtual age at time ``t`` in period ``m`` (1-based).

    Parameters
    ----------
    im : ImModel
    epsilon : float
        Maintenance effectiveness in ``[0, 1]``.
    maintenance_times : sequence of float
        ``tau_1, tau_2, ...``; at least ``m - 1`` entries.
    m : int
        Period index, ``m = 1`` before the first maintenance.
    t : float
        Chronological time (hours).
    scale : float, optional
        Reference time for the rounding slack; defaults to ``t``.
    """
    _check_epsilon(epsilon)
    omega = t - age_offset(im, epsilon, maintenance_times, m)
    if omega < 0:
        ref = abs(t) if scale is None else scale
        if omega < -AGE_SLACK * max(ref, 1.0):
            raise NegativeAge(f"virtual age {omega} < 0 at t={t} in period {m}")
        omega = 0.0
    return omega


def hazard(spec, params, maintenance_times, m, t, scale=None):
    """Induced hazard ``h_m(t)`` in 1/hours."""
    _check_match(spec, params)
    omega = virtual_age(spec.im, params.epsilon, maintenance_times, m, t, scale)
    return hazard_at_age(params, omega)


def cum_hazard(spec, params, maintenance_times, m, t, scale=None):
    """Cumulative hazard ``H_m(t) = H(omega_m(t))`` of the baseline at the virtual age."""
    _check_match(spec, params)
    omega = virtual_age(spec.im, params.epsilon, maintenance_times, m, t, scale)
    return cum_hazard_at_age(params, omega)


def period_age_offsets(im, epsilon, maintenance_times):
    """Offsets for every period of one history (length ``len(tau) + 1``).

    PAS uses the recursion ``o_m = eps * tau_{m-1} + (1 - eps) * o_{m-1}``,
    which unrolls to the same finite sum as :func:`age_offset`.
    """
    tau = np.asarray(maintenance_times, dtype=float)
    out = np.zeros(len(tau) + 1)
    if im is ImModel.PAR:
        out[1:] = epsilon * tau
        return out
    acc = 0.0
    for j, t in enumerate(tau, start=1):
        acc = epsilon * t + (1.0 - epsilon) * acc
        out[j] = acc
    return out


def integrated_hazard(spec, params, maintenance_times, t0, t1):
    """Integral of the induced hazard between chronological times ``t0 <= t1``.

    Crosses maintenance epochs, where the virtual age jumps down.
    """
    _check_match(spec, params)
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    tau = list(maintenance_times)
    offsets = period_age_offsets(spec.im, params.epsilon, tau)
    bounds = [0.0] + tau + [math.inf]
    total = 0.0
    for m in range(len(tau) + 1):
        lo, hi = max(bounds[m], t0), min(bounds[m + 1], t1)
        if hi <= lo:
            continue
        w0 = max(lo - offsets[m], 0.0)
        w1 = max(hi - offsets[m], 0.0)
        total += cum_hazard_at_age(params, w1) - cum_hazard_at_age(params, w0)
    return total
