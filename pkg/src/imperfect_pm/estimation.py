"""Maximum-likelihood estimation of imperfect-maintenance models.

The log-likelihood of a fleet of independent units under minimal repair is::

    sum_p [ sum_{m,j} log h_{p,m}(t_{p,m,j})
            - sum_m (H(omega_{p,m}^end) - H(omega_{p,m}^start)) ]

where the last period of each unit ends at its censoring time. Maximization
runs a Nelder-Mead simplex over log-transformed rates/scales and a logit
transformed effectiveness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .exceptions import AllStartsFailed, NonFiniteStart
from .hazard import (
    AGE_SLACK,
    HazardFamily,
    ImModel,
    LinearParams,
    WeibullParams,
    make_params,
)

EPS_CLAMP = 1e-6
PARAM_NAMES = {
    HazardFamily.LINEAR: ("alpha", "epsilon"),
    HazardFamily.WEIBULL: ("beta", "eta", "epsilon"),
}
# jitter sd of multi-start points in transformed coordinates
_JITTER = {"alpha": 1.0, "beta": 0.3, "eta": 0.3, "epsilon": 1.5}
_BETA_RANGE = (1e-2, 1e3)


class FleetArrays:
    """Flattened, immutable view of a list of :class:`ComponentHistory`.

    Built once and reused for every likelihood evaluation of a fit.
    """

    def __init__(self, histories):
        histories = list(histories)
        if not histories:
            raise ValueError("fleet is empty")
        self.histories = histories
        self.n_units = len(histories)
        k = max(len(h.maintenance_times) for h in histories)
        self.tau = np.zeros((self.n_units, k))
        self.n_maint = np.zeros(self.n_units, dtype=int)
        f_unit, f_per, f_time = [], [], []
        p_unit, p_per, p_start, p_end = [], [], [], []
        for u, h in enumerate(histories):
            n = len(h.maintenance_times)
            self.n_maint[u] = n
            self.tau[u, :n] = h.maintenance_times
            if n < k:
                # padding never enters a real period; repeat the last epoch to keep PAS finite
                self.tau[u, n:] = h.maintenance_times[-1] if n else 0.0
            for m, ((lo, hi), fails) in enumerate(zip(h.period_bounds(), h.failures_by_period)):
                p_unit.append(u)
                p_per.append(m)
                p_start.append(lo)
                p_end.append(hi)
                for t in fails:
                    f_unit.append(u)
                    f_per.append(m)
                    f_time.append(t)
        self.f_unit = np.asarray(f_unit, dtype=int)
        self.f_per = np.asarray(f_per, dtype=int)
        self.f_time = np.asarray(f_time, dtype=float)
        self.p_unit = np.asarray(p_unit, dtype=int)
        self.p_per = np.asarray(p_per, dtype=int)
        self.p_start = np.asarray(p_start, dtype=float)
        self.p_end = np.asarray(p_end, dtype=float)
        self.censor = np.array([h.censor_time for h in histories])
        self.n_failures = len(f_time)
        self.slack = AGE_SLACK * float(self.censor.max())

    @property
    def n_events(self):
        return self.n_failures + self.n_units

    def offsets(self, im, epsilon):
        """Age offsets, shape ``(n_units, max_maint + 1)``."""
        out = np.zeros((self.n_units, self.tau.shape[1] + 1))
        if im is ImModel.PAR:
            out[:, 1:] = epsilon * self.tau
        else:
            for j in range(self.tau.shape[1]):
                out[:, j + 1] = epsilon * self.tau[:, j] + (1.0 - epsilon) * out[:, j]
        return out


def _as_arrays(fleet):
    if isinstance(fleet, FleetArrays):
        return fleet
    return FleetArrays(fleet)


def _clamp_ages(w, slack):
    if w.size and w.min() < 0:
        if w.min() < -slack:
            return None
        w = np.maximum(w, 0.0)
    return w


def log_likelihood(spec, params, fleet, form="increment"):
    """Log-likelihood of ``params`` for a single-component fleet.

    Parameters
    ----------
    spec : ModelSpec
    params : LinearParams or WeibullParams
    fleet : list of ComponentHistory or FleetArrays
    form : {"increment", "end"}
        ``"increment"`` charges each period with ``H(end age) - H(start age)``,
        the exact minimal-repair likelihood. ``"end"`` charges ``H(end age)``
        only, ignoring the residual age carried into each period.

    Returns
    -------
    float
        ``-inf`` when a failure falls at a zero-hazard age or ages are invalid.
    """
    data = _as_arrays(fleet)
    if spec.hazard is not params.family:
        raise TypeError(f"{type(params).__name__} does not match model {spec.label}")
    off = data.offsets(spec.im, params.epsilon)
    wf = _clamp_ages(data.f_time - off[data.f_unit, data.f_per], data.slack)
    we = _clamp_ages(data.p_end - off[data.p_unit, data.p_per], data.slack)
    if wf is None or we is None:
        return -math.inf
    if form == "increment":
        ws = _clamp_ages(data.p_start - off[data.p_unit, data.p_per], data.slack)
        if ws is None:
            return -math.inf
    elif form == "end":
        ws = None
    else:
        raise ValueError(f"unknown likelihood form {form!r}")

    r = data.n_failures
    if r and wf.min() <= 0:
        return -math.inf
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if isinstance(params, LinearParams):
            a = params.alpha
            log_h = r * math.log(a) + np.log(wf).sum() if r else 0.0
            exposure = 0.5 * a * (np.square(we).sum() - (np.square(ws).sum() if ws is not None else 0.0))
        else:
            b, eta = params.beta, params.eta
            log_h = r * (math.log(b) - b * math.log(eta)) + (b - 1.0) * np.log(wf).sum() if r else 0.0
            exposure = (np.power(we / eta, b).sum() - (np.power(ws / eta, b).sum() if ws is not None else 0.0))
    value = float(log_h - exposure)
    if math.isnan(value):
        return -math.inf
    return value


# --- Nelder-Mead ------------------------------------------------------------------


@dataclass(frozen=True)
class FitOptions:
    """Options for :func:`nelder_mead` and :func:`fit`.

    ``restarts`` counts extra jittered starts in :func:`fit` and in-place
    restarts from the best vertex in :func:`nelder_mead`. ``fixed`` pins
    parameters by name (e.g. ``{"beta": 1.0}``); they are then not estimated.
    """

    max_iters: int = 5000
    simplex_tol_x: float = 1e-8
    simplex_tol_f: float = 1e-10
    restarts: int = 8
    initial_guess: object = None
    fixed: dict = field(default_factory=dict)
    seed: int = 0
    form: str = "increment"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.simplex_tol_x > 0 and self.simplex_tol_f > 0):
            raise ValueError("tolerances must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")


class SimplexResult(NamedTuple):
    x: np.ndarray
    fun: float
    converged: bool
    nit: int = 0
    nfev: int = 0


def _initial_simplex(x0, step):
    n = x0.size
    if step is None:
        step = np.where(np.abs(x0) > 1.0, 0.05 * np.abs(x0), 0.1)
    step = np.broadcast_to(np.asarray(step, dtype=float), (n,))
    sim = np.tile(x0, (n + 1, 1))
    sim[1:] += np.diag(step)
    return sim


def _nm_run(func, x0, opts, step, callback, budget):
    rho, chi, gamma, sigma = 1.0, 2.0, 0.5, 0.5
    sim = _initial_simplex(x0, step)
    fsim = np.array([func(x) for x in sim])
    nfev = len(sim)
    nit = 0
    converged = False
    while nit < budget:
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        if callback is not None:
            callback(sim[0], fsim[0])
        diameter = np.max(np.abs(sim[1:] - sim[0]))
        spread = fsim[-1] - fsim[0]
        if diameter < opts.simplex_tol_x or spread < opts.simplex_tol_f:
            converged = True
            break
        nit += 1
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + rho * (centroid - sim[-1])
        fr = func(xr)
        nfev += 1
        if fr < fsim[0]:
            xe = centroid + chi * (centroid - sim[-1])
            fe = func(xe)
            nfev += 1
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
            continue
        if fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
            continue
        if fr < fsim[-1]:
            xc = centroid + gamma * (xr - centroid)
            fc = func(xc)
            nfev += 1
            if fc <= fr:
                sim[-1], fsim[-1] = xc, fc
                continue
        else:
            xc = centroid - gamma * (centroid - sim[-1])
            fc = func(xc)
            nfev += 1
            if fc < fsim[-1]:
                sim[-1], fsim[-1] = xc, fc
                continue
        sim[1:] = sim[0] + sigma * (sim[1:] - sim[0])
        fsim[1:] = [func(x) for x in sim[1:]]
        nfev += len(sim) - 1
    order = np.argsort(fsim, kind="stable")
    return sim[order[0]].copy(), float(fsim[order[0]]), converged, nit, nfev


def nelder_mead(func, x0, opts=None, *, step=None, callback=None):
    """Minimize ``func`` with the Nelder-Mead simplex.

    Standard coefficients: reflection 1, expansion 2, contraction 0.5,
    shrink 0.5. ``func`` may return ``inf``/``nan`` to reject a point.
    Terminates when the simplex diameter (max-norm) falls below
    ``opts.simplex_tol_x``, the spread of vertex values falls below
    ``opts.simplex_tol_f``, or after ``opts.max_iters`` iterations. After
    convergence the search is restarted ``opts.restarts`` times from the best
    vertex with a fresh simplex.

    Parameters
    ----------
    func : callable
        Objective ``R^d -> R``.
    x0 : array_like
        Starting point; ``func(x0)`` must be finite.
    opts : FitOptions, optional
    step : float or array_like, optional
        Initial simplex edge lengths.
    callback : callable, optional
        Called as ``callback(x_best, f_best)`` once per iteration.

    Returns
    -------
    SimplexResult
        ``(x, fun, converged, nit, nfev)``.
    """
    opts = opts or FitOptions(restarts=0)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float)).copy()

    def f(x):
        v = func(x)
        return math.inf if v is None or not v == v else float(v)

    f0 = f(x0)
    if not math.isfinite(f0):
        raise NonFiniteStart(f"objective is not finite at the starting point ({f0})")

    budget = opts.max_iters
    x, fx, converged, nit_total, nfev_total = _nm_run(f, x0, opts, step, callback, budget)
    for _ in range(opts.restarts):
        if nit_total >= opts.max_iters:
            break
        x2, f2, c2, nit, nfev = _nm_run(f, x, opts, step, callback, opts.max_iters - nit_total)
        nit_total += nit
        nfev_total += nfev
        converged = c2
        if f2 <= fx:
            x, fx = x2, f2
    return SimplexResult(x, fx, converged, nit_total, nfev_total)


# --- fitting ----------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    spec: object
    params: object
    log_likelihood: float
    k: int
    converged: bool
    n_events: int
    n_failures: int = 0
    diagnostics: tuple = ()
    nfev: int = 0

    def as_dict(self):
        return {
            "model": self.spec.label,
            "params": self.params.as_dict(),
            "log_likelihood": self.log_likelihood,
            "k": self.k,
            "n_events": self.n_events,
            "n_failures": self.n_failures,
            "converged": self.converged,
            "diagnostics": list(self.diagnostics),
        }


def default_initial_guess(spec, fleet):
    """Starting parameters from a bad-as-old moment match.

    With no age reduction the expected number of failures of unit ``p`` is
    ``H(tau*_p)``; equating the pooled count with its expectation gives
    ``alpha`` for the linear hazard and ``eta`` for a Weibull with shape 1.5.
    """
    data = _as_arrays(fleet)
    n = max(data.n_failures, 0.5)
    if spec.hazard is HazardFamily.LINEAR:
        alpha = 2.0 * n / float(np.square(data.censor).sum())
        return LinearParams(alpha=alpha, epsilon=0.5)
    beta = 1.5
    eta = (float(np.power(data.censor, beta).sum()) / n) ** (1.0 / beta)
    return WeibullParams(beta=beta, eta=eta, epsilon=0.5)


def _logit(p):
    p = min(max(p, EPS_CLAMP), 1.0 - EPS_CLAMP)
    return math.log(p / (1.0 - p))


def _expit(z):
    if z >= 0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        p = e / (1.0 + e)
    return min(max(p, EPS_CLAMP), 1.0 - EPS_CLAMP)


def _to_z(name, value):
    return _logit(value) if name == "epsilon" else math.log(value)


def _from_z(name, z):
    return _expit(z) if name == "epsilon" else math.exp(z)


def fit(spec, fleet, opts=None):
    """Maximum-likelihood fit of ``spec`` to a single-component fleet.

    Parameters
    ----------
    spec : ModelSpec
    fleet : list of ComponentHistory or FleetArrays
    opts : FitOptions, optional

    Returns
    -------
    FitResult
        Best of ``1 + opts.restarts`` simplex runs.

    Raises
    ------
    AllStartsFailed
        If no start produced a finite likelihood.
    """
    opts = opts or FitOptions()
    data = _as_arrays(fleet)
    names = PARAM_NAMES[spec.hazard]
    fixed = {k: float(v) for k, v in opts.fixed.items()}
    unknown = set(fixed) - set(names)
    if unknown:
        raise ValueError(f"cannot fix {sorted(unknown)} for model {spec.label}")
    free = [n for n in names if n not in fixed]
    guess = opts.initial_guess or default_initial_guess(spec, data)
    guess_vals = guess.as_dict()

    def build(z):
        vals = dict(fixed)
        for name, zi in zip(free, z):
            vals[name] = _from_z(name, zi)
        if "beta" in vals and not _BETA_RANGE[0] <= vals["beta"] <= _BETA_RANGE[1]:
            return None
        try:
            return make_params(spec, **vals)
        except (ValueError, OverflowError):
            return None

    def objective(z):
        try:
            p = build(z)
        except OverflowError:
            return math.inf
        if p is None:
            return math.inf
        return -log_likelihood(spec, p, data, form=opts.form)

    z0 = np.array([_to_z(n, guess_vals[n]) for n in free])
    rng = np.random.default_rng(opts.seed)
    scales = np.array([_JITTER[n] for n in free])
    starts = [z0] + [z0 + rng.normal(0.0, scales) for _ in range(opts.restarts)]
    run_opts = replace(opts, restarts=1)

    best = None
    nfev = 0
    for z in starts:
        if not free:
            break
        try:
            res = nelder_mead(objective, z, run_opts)
        except NonFiniteStart:
            continue
        nfev += res.nfev
        if best is None or res.fun < best.fun:
            best = res

    if not free:
        params = make_params(spec, **fixed)
        ll = log_likelihood(spec, params, data, form=opts.form)
        if not math.isfinite(ll):
            raise AllStartsFailed(f"{spec.label}: likelihood not finite at fixed parameters")
        return FitResult(spec, params, ll, 0, True, data.n_events, data.n_failures)
    if best is None or not math.isfinite(best.fun):
        raise AllStartsFailed(f"{spec.label}: no start gave a finite likelihood")

    params = build(best.x)
    diagnostics = []
    if data.n_failures == 0:
        diagnostics.append("no_failures")
    eps = params.epsilon
    if "epsilon" in free and (eps <= EPS_CLAMP * 1.01 or eps >= 1.0 - EPS_CLAMP * 1.01):
        diagnostics.append("epsilon_at_bound")
    if isinstance(params, WeibullParams) and params.beta < 1.0:
        diagnostics.append("beta_below_one")
    return FitResult(
        spec=spec,
        params=params,
        log_likelihood=-best.fun,
        k=len(free),
        converged=best.converged,
        n_events=data.n_events,
        n_failures=data.n_failures,
        diagnostics=tuple(diagnostics),
        nfev=nfev,
    )
