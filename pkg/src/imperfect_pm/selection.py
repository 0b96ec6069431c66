"""Model selection: AIC, BIC and leave-one-failure-out cross validation.

AIC and BIC are minimized, LCV is maximized. The BIC sample size is the number
of likelihood factors: failure events plus one censoring record per unit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .estimation import FitOptions, fit
from .exceptions import AllStartsFailed, RefitFailed
from .hazard import ALL_SPECS, ImModel, hazard, integrated_hazard
from .history import ComponentHistory

CRITERIA = ("AIC", "BIC", "LCV")


def aic_value(log_l, k):
    return 2.0 * k - 2.0 * log_l


def bic_value(log_l, k, n):
    if n < 1:
        raise ValueError("BIC needs at least one event")
    return k * math.log(n) - 2.0 * log_l


def aic(fit_result):
    """``2k - 2 log L``."""
    return aic_value(fit_result.log_likelihood, fit_result.k)


def bic(fit_result):
    """``k ln(n_events) - 2 log L``."""
    return bic_value(fit_result.log_likelihood, fit_result.k, fit_result.n_events)


def back_solve_n(aic_val, bic_val, k):
    """Sample size implied by an AIC/BIC pair: ``exp((BIC - AIC + 2k) / k)``."""
    if k <= 0:
        raise ValueError("k must be positive")
    return math.exp((bic_val - aic_val + 2.0 * k) / k)


def _tie_key(spec):
    # fewer parameters first, then PAR before PAS, then label for determinism
    return (spec.n_params, 0 if spec.im is ImModel.PAR else 1, spec.label)


def pick_winner(scores, maximize=False, rel_tol=1e-12):
    """Best spec of ``{spec: score}``; ties go to fewer parameters, then PAR.

    Non-finite scores never win unless all are non-finite.
    """
    if not scores:
        raise ValueError("no candidates")
    finite = {s: v for s, v in scores.items() if math.isfinite(v)}
    pool = finite or scores
    sign = -1.0 if maximize else 1.0
    best = min(sign * v for v in pool.values())
    tol = rel_tol * max(abs(best), 1.0) if math.isfinite(best) else 0.0
    tied = [s for s, v in pool.items() if sign * v <= best + tol]
    return min(tied, key=_tie_key)


# --- leave-one-out -----------------------------------------------------------------


def failure_index(histories):
    """``[(unit, period, position), ...]`` for every failure, in unit/time order."""
    out = []
    for u, h in enumerate(histories):
        for m, group in enumerate(h.failures_by_period):
            for p in range(len(group)):
                out.append((u, m, p))
    return out


def drop_failure(histories, index):
    """Copy of ``histories`` without the failure at ``index = (unit, period, position)``."""
    u, m, p = index
    h = histories[u]
    groups = list(h.failures_by_period)
    groups[m] = groups[m][:p] + groups[m][p + 1 :]
    reduced = ComponentHistory(h.maintenance_times, tuple(groups), h.censor_time, h.unit_id)
    return list(histories[:u]) + [reduced] + list(histories[u + 1 :])


def predictive_log_density(spec, params, history, t):
    """Log density of a failure at ``t`` given the unit's previous failure.

    The minimal-repair process restarts from the last failure before ``t``
    (or from 0), so the density is ``h(t) exp(-int_{prev}^{t} h)``.
    """
    prev = max([s for s in history.failure_times if s < t], default=0.0)
    taus = history.maintenance_times
    m = 1 + sum(1 for tau in taus if tau < t)
    h = hazard(spec, params, taus, m, t)
    if not h > 0:
        return -math.inf
    return math.log(h) - integrated_hazard(spec, params, taus, prev, t)


def _loo_term(args):
    spec, histories, index, opts = args
    try:
        res = fit(spec, drop_failure(histories, index), opts)
    except AllStartsFailed as exc:
        raise RefitFailed(f"{spec.label}: refit without failure {index} failed: {exc}") from exc
    u, m, p = index
    t = histories[u].failures_by_period[m][p]
    val = predictive_log_density(spec, res.params, histories[u], t)
    if not math.isfinite(val):
        raise RefitFailed(f"{spec.label}: non-finite predictive density for failure {index}")
    return val


@dataclass(frozen=True)
class LCVResult:
    log_value: float
    terms: tuple

    @property
    def value(self):
        """Raw product of predictive densities (may underflow to 0)."""
        return math.exp(self.log_value)


def lcv_detail(spec, histories, opts=None, workers=1):
    """Leave-one-failure-out cross validation with per-failure log terms.

    Parameters
    ----------
    spec : ModelSpec
    histories : list of ComponentHistory
    opts : FitOptions, optional
        Options of every refit. By default the full-data fit seeds each refit
        with two jittered restarts.
    workers : int
        Process count for the refits.
    """
    histories = list(histories)
    idx = failure_index(histories)
    if len(idx) < 2:
        raise ValueError("LCV needs at least two failure events")
    if opts is None:
        full = fit(spec, histories)
        opts = FitOptions(initial_guess=full.params, restarts=2)
    jobs = [(spec, histories, i, opts) for i in idx]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            terms = list(pool.map(_loo_term, jobs))
    else:
        terms = [_loo_term(j) for j in jobs]
    return LCVResult(math.fsum(terms), tuple(terms))


def lcv(spec, histories, opts=None, workers=1):
    """Product over failures of the predictive density under leave-one-out refits."""
    return lcv_detail(spec, histories, opts, workers).value


# --- reports -----------------------------------------------------------------------


@dataclass(frozen=True)
class SelectionEntry:
    spec: object
    fit: object
    AIC: float
    BIC: float
    log_LCV: float = math.nan

    @property
    def log_L(self):
        return self.fit.log_likelihood

    @property
    def LCV(self):
        return math.exp(self.log_LCV) if math.isfinite(self.log_LCV) else math.nan

    def as_dict(self):
        d = self.fit.as_dict()
        d.update(AIC=self.AIC, BIC=self.BIC)
        if math.isfinite(self.log_LCV):
            d.update(LCV=self.LCV, log_LCV=self.log_LCV)
        return d


@dataclass(frozen=True)
class SelectionReport:
    entries: tuple
    winner_by: dict = field(default_factory=dict)

    def entry(self, spec):
        for e in self.entries:
            if e.spec == spec:
                return e
        raise KeyError(spec)

    def as_dict(self):
        return {
            "models": [e.as_dict() for e in self.entries],
            "winner_by": {c: s.label for c, s in self.winner_by.items()},
        }

    def table(self):
        """Human-readable summary."""
        lines = [f"{'model':<12} {'k':>2} {'logL':>12} {'AIC':>11} {'BIC':>11} {'log LCV':>11}"]
        for e in self.entries:
            lcv_txt = f"{e.log_LCV:11.4f}" if math.isfinite(e.log_LCV) else f"{'-':>11}"
            lines.append(f"{e.spec.label:<12} {e.fit.k:>2} {e.log_L:12.4f} {e.AIC:11.4f} {e.BIC:11.4f} {lcv_txt}")
        for c, s in self.winner_by.items():
            lines.append(f"{c} winner: {s.label}")
        return "\n".join(lines)


def report_from_fits(fits, lcv_logs=None, criteria=("AIC", "BIC")):
    """Assemble a :class:`SelectionReport` from fits (and optional log-LCV values)."""
    lcv_logs = lcv_logs or {}
    criteria = [c.upper() for c in criteria]
    bad = set(criteria) - set(CRITERIA)
    if bad:
        raise ValueError(f"unknown criteria {sorted(bad)}")
    entries = tuple(
        SelectionEntry(s, f, aic(f), bic(f), lcv_logs.get(s, math.nan)) for s, f in sorted(fits.items(), key=lambda kv: kv[0].label)
    )
    winners = {}
    for c in criteria:
        if c == "LCV":
            if not lcv_logs:
                raise ValueError("LCV requested but no LCV values given")
            winners[c] = pick_winner({e.spec: e.log_LCV for e in entries}, maximize=True)
        else:
            winners[c] = pick_winner({e.spec: getattr(e, c) for e in entries})
    return SelectionReport(entries, winners)


def select(histories, criteria=("AIC", "BIC"), opts=None, specs=ALL_SPECS, lcv_opts=None, workers=1):
    """Fit every candidate and pick a winner per criterion.

    Parameters
    ----------
    histories : list of ComponentHistory
    criteria : iterable of {"AIC", "BIC", "LCV"}
    opts : FitOptions, optional
        Options of the full-data fits.
    specs : iterable of ModelSpec
        Candidate set.
    lcv_opts : FitOptions, optional
        Options of the leave-one-out refits; by default each refit is seeded
        from its full-data fit.
    """
    histories = list(histories)
    criteria = tuple(c.upper() for c in criteria)
    fits = {s: fit(s, histories, opts) for s in specs}
    logs = {}
    if "LCV" in criteria:
        for s, f in fits.items():
            o = lcv_opts or replace(opts or FitOptions(), initial_guess=f.params, restarts=2)
            logs[s] = lcv_detail(s, histories, o, workers).log_value
    return report_from_fits(fits, logs, criteria)
