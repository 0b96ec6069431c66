"""Average hazard and average reliability as functions of the maintenance interval.

PAS ages become stationary under a constant interval ``M``: over one period
the age sweeps ``[M(1-eps)/eps, M/eps]``. PAR ages are not stationary, so
averages run over the whole replacement period with the linear age
``t(1-eps) + M*eps/2``. In both cases the average of a function of the age
reduces to an average over an age window ``[a, b]``.

Average reliability integrates ``exp(-c * omega**k)`` termwise from its
Taylor series; the number of terms is chosen from the alternating-series
remainder bound, with adaptive quadrature as a fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from scipy import integrate

from .exceptions import EpsilonZero, SeriesDiverged
from .hazard import ImModel, LinearParams, WeibullParams, cum_hazard_at_age, hazard_at_age

PAS_EPS_MIN = 1e-3
PAR_EPS_ONE = 1e-9
MAX_SERIES_TERMS = 64
_DBL_EPS = 2.220446049250313e-16


@dataclass(frozen=True)
class SteadyFunctions:
    """Averaged hazard / reliability evaluators of one component.

    Attributes
    ----------
    spec : ModelSpec
    params : LinearParams or WeibullParams
    rp : float
        Replacement period in hours.
    series_terms : int
        Maximum number of power-series terms before falling back to quadrature.
    series_accuracy : float
        Default truncation accuracy of the reliability series.
    """

    spec: object
    params: object
    rp: float
    series_terms: int = MAX_SERIES_TERMS
    series_accuracy: float = 1e-9

    def __post_init__(self):
        if not self.rp > 0:
            raise ValueError("replacement period must be positive")
        if self.series_terms < 1:
            raise ValueError("series_terms must be >= 1")
        if not self.series_accuracy > 0:
            raise ValueError("series_accuracy must be positive")
        if self.spec.hazard is not self.params.family:
            raise TypeError(f"{type(self.params).__name__} does not match model {self.spec.label}")
        if self.spec.im is ImModel.PAS and self.params.epsilon < PAS_EPS_MIN:
            raise EpsilonZero(f"PAS needs epsilon >= {PAS_EPS_MIN} for a stationary age, got {self.params.epsilon}")

    def avg_hazard(self, M):
        return avg_hazard(self, M)

    def avg_reliability(self, M, accuracy=None):
        return avg_reliability(self, M, accuracy)


def stationary_age_pas(M, epsilon, t, m):
    """Stationary PAS age ``t - m*M + M/eps`` at time ``t`` of period ``m``."""
    if epsilon <= 0:
        raise EpsilonZero("bad-as-old maintenance has no stationary age")
    return t - m * M + M / epsilon


def approx_age_par(M, epsilon, t):
    """Linear PAR age ``t(1-eps) + M*eps/2`` over the replacement period."""
    return t * (1.0 - epsilon) + M * epsilon / 2.0


def _check_interval(sf, M):
    if not 0 < M <= sf.rp:
        raise ValueError(f"maintenance interval must lie in (0, {sf.rp}], got {M}")


def age_window(sf, M):
    """Age window ``(a, b)`` whose uniform average gives the time average."""
    _check_interval(sf, M)
    eps = sf.params.epsilon
    if sf.spec.im is ImModel.PAS:
        return M * (1.0 - eps) / eps, M / eps
    return M * eps / 2.0, sf.rp * (1.0 - eps) + M * eps / 2.0


def avg_hazard(sf, M):
    """Time-averaged hazard ``h*(M)`` in 1/hours (closed forms)."""
    _check_interval(sf, M)
    p = sf.params
    eps = p.epsilon
    if sf.spec.im is ImModel.PAS:
        if isinstance(p, LinearParams):
            return M * p.alpha * (2.0 - eps) / (2.0 * eps)
        b = p.beta
        # 1 - (1 - eps)**b without cancellation at small eps
        frac = -math.expm1(b * math.log1p(-eps)) if eps < 1.0 else 1.0
        return M ** (b - 1.0) / (eps * p.eta) ** b * frac
    rp = sf.rp
    if isinstance(p, LinearParams):
        return p.alpha / 2.0 * (eps * M + rp * (1.0 - eps))
    b, eta = p.beta, p.eta
    if 1.0 - eps < PAR_EPS_ONE:
        # removable singularity: constant age M/2
        return b / eta**b * (M / 2.0) ** (b - 1.0)
    return ((M * eps + 2.0 * rp * (1.0 - eps)) ** b - (M * eps) ** b) / (rp * (1.0 - eps) * (2.0 * eta) ** b)


def avg_hazard_quad(sf, M):
    """``h*(M)`` by adaptive quadrature of the hazard over the age window."""
    a, b = age_window(sf, M)
    if b - a <= 1e-12 * max(b, 1.0):
        return hazard_at_age(sf.params, b)
    val, _ = integrate.quad(lambda w: hazard_at_age(sf.params, w), a, b, epsabs=0.0, epsrel=1e-13, limit=200)
    return val / (b - a)


def _shape(params):
    """``(c, k)`` with ``H(omega) = c * omega**k``."""
    if isinstance(params, LinearParams):
        return params.alpha / 2.0, 2.0
    return params.eta ** -params.beta, params.beta


class SeriesResult(NamedTuple):
    value: float
    terms: int
    method: str
    remainder_bound: float


def _series_terms(c, k, a, b, n_max):
    """Yield ``T_0, T_1, ...`` of the averaged Taylor series (at most ``n_max``)."""
    x = c * b**k
    r = a / b
    scale = b / (b - a)
    coef = 1.0
    for n in range(n_max):
        if n:
            coef *= -x / n
        p = n * k + 1.0
        tail = -math.expm1(p * math.log(r)) if r > 0 else 1.0
        yield coef * scale * tail / p


def reliability_series(sf, M, accuracy=None, terms=None):
    """Average reliability ``R*(M)`` with provenance.

    Parameters
    ----------
    sf : SteadyFunctions
    M : float
        Maintenance interval (hours).
    accuracy : float, optional
        Target truncation error; defaults to ``sf.series_accuracy``.
    terms : int, optional
        Use exactly this many series terms (no adaptivity, no clamping).

    Returns
    -------
    SeriesResult
        ``method`` is ``"series"``, ``"fixed"``, ``"constant"`` (degenerate age
        window) or ``"quadrature"`` (fallback).
    """
    a, b = age_window(sf, M)
    c, k = _shape(sf.params)
    if b - a <= 1e-12 * max(b, 1.0):
        return SeriesResult(math.exp(-c * b**k), 0, "constant", 0.0)
    if terms is not None:
        if terms < 1:
            raise ValueError("terms must be >= 1")
        return SeriesResult(math.fsum(_series_terms(c, k, a, b, terms)), terms, "fixed", math.nan)

    acc = sf.series_accuracy if accuracy is None else accuracy
    if not acc > 0:
        raise ValueError("accuracy must be positive")
    x = c * b**k
    n_max = sf.series_terms
    terms_iter = _series_terms(c, k, a, b, n_max + 1)
    seq = [next(terms_iter)]
    biggest = 0.0
    for n in range(1, n_max + 1):
        biggest = max(biggest, abs(seq[n - 1]))
        if biggest * n * _DBL_EPS > acc:
            # cancellation would swamp the requested accuracy
            break
        seq.append(next(terms_iter))
        # alternating tail with shrinking terms once x < n + 1
        if abs(seq[n]) < acc and x < n + 1:
            value = math.fsum(seq[:n])
            return SeriesResult(min(max(value, 0.0), 1.0), n, "series", abs(seq[n]))
    value = avg_reliability_quad(sf, M)
    return SeriesResult(value, 0, "quadrature", math.nan)


def avg_reliability(sf, M, accuracy=None):
    """Average reliability ``R*(M)`` in ``[0, 1]``."""
    return reliability_series(sf, M, accuracy).value


def avg_reliability_strict(sf, M, accuracy=None):
    """As :func:`avg_reliability` but raise instead of falling back to quadrature."""
    res = reliability_series(sf, M, accuracy)
    if res.method == "quadrature":
        raise SeriesDiverged(f"series did not reach accuracy within {sf.series_terms} terms")
    return res.value


def avg_reliability_quad(sf, M):
    """``R*(M)`` by adaptive quadrature of ``exp(-H)`` over the age window."""
    a, b = age_window(sf, M)
    if b - a <= 1e-12 * max(b, 1.0):
        return math.exp(-cum_hazard_at_age(sf.params, b))
    val, _ = integrate.quad(
        lambda w: math.exp(-cum_hazard_at_age(sf.params, w)), a, b, epsabs=1e-14, epsrel=1e-12, limit=200
    )
    return min(max(val / (b - a), 0.0), 1.0)


def closed_form_ra(params, epsilon, M):
    """Two-term PAS-Weibull average reliability.

    ``1 + (M/(eps*eta))**beta * ((1-eps)**(beta+1) - 1) / (eps*(beta+1))``
    """
    if not isinstance(params, WeibullParams):
        raise TypeError("closed_form_ra needs Weibull parameters")
    b, eta = params.beta, params.eta
    return 1.0 + (M / (epsilon * eta)) ** b * ((1.0 - epsilon) ** (b + 1.0) - 1.0) / (epsilon * (b + 1.0))
