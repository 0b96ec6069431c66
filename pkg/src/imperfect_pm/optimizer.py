"""Cost / reliability optimization of maintenance intervals.

Two stages:

1. From the current intervals (cost ``C_i``, reliability ``R_i``) solve
   ``min C s.t. R >= R_i`` and ``max R s.t. C <= C_i``. The first yields the
   cost anchor ``(C_o, R_r)``, the second the reliability anchor ``(C_r, R_o)``.
2. For each weight ``w`` minimize ``w*e_C + (1-w)*e_R`` subject to
   ``C <= C_r`` and ``R >= R_r`` where ``e_C = (C - C_r)/(C_r - C_o)`` and
   ``e_R = (R_r - R)/(R_o - R_r)``; the non-dominated solutions form the
   Pareto front.

Constrained subproblems are solved by an augmented Lagrangian whose inner
minimizations use the Nelder-Mead engine of :mod:`imperfect_pm.estimation`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import nnls

from .economics import component_cost, equipment_reliability
from .estimation import FitOptions, nelder_mead
from .exceptions import DegenerateAnchors, EmptyFront, Infeasible
from .steady_state import reliability_series

HOURS_PER_DAY = 24.0
FEAS_TOL = 1e-8
KKT_TOL = 1e-5
ACTIVE_TOL = 1e-6

_INNER = FitOptions(max_iters=4000, simplex_tol_x=1e-11, simplex_tol_f=1e-15, restarts=1)


@dataclass(frozen=True)
class OptimBounds:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi):
            raise ValueError("lower and upper bounds differ in length")
        if any(not 0 <= a < b for a, b in zip(lo, hi)):
            raise ValueError("bounds must satisfy 0 <= lower < upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, n, lower, upper):
        return cls((lower,) * n, (upper,) * n)

    def clip(self, x):
        return np.clip(x, self.lower, self.upper)


class ConstrainedResult(NamedTuple):
    x: np.ndarray
    fun: float
    feasible: bool
    max_violation: float
    kkt_residual: float
    certified: str
    nfev: int


def _fd_grad(func, x, h):
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        g[i] = (func(x + e) - func(x - e)) / (2.0 * h[i])
    return g


def _kkt_residual(objective, constraints, bounds, x, f_scale, scale):
    """Relative norm of the projected gradient of the Lagrangian at ``x``.

    Gradients are taken in the scaled variables ``x / scale`` and normalised
    by ``f_scale``. Constraint multipliers are fitted by non-negative least
    squares over the active set (constraints and bounds).
    """
    lo, hi = np.asarray(bounds.lower), np.asarray(bounds.upper)
    h = np.maximum(1e-6 * scale, 1e-9)
    # keep the stencil inside the box
    xc = np.clip(x, lo + h, hi - h)
    gf = _fd_grad(objective, xc, h) * scale / f_scale
    cols = []
    for g in constraints:
        if g(x) > -ACTIVE_TOL:
            cols.append(_fd_grad(g, xc, h) * scale)
    d = x.size
    for i in range(d):
        e = np.zeros(d)
        if x[i] <= lo[i] + 1e-9 * max(hi[i], 1.0):
            e[i] = -1.0
            cols.append(e)
        elif x[i] >= hi[i] - 1e-9 * max(hi[i], 1.0):
            e[i] = 1.0
            cols.append(e)
    if not cols:
        return float(np.linalg.norm(gf))
    A = np.column_stack(cols)
    # grad f + A @ lam = 0 with lam >= 0
    _, rnorm = nnls(A, -gf)
    return float(rnorm)


def _restore(constraints, bounds, x, scale, max_steps=50):
    """Newton steps on the most violated constraint until all are <= 0."""
    h = np.maximum(1e-6 * scale, 1e-9)
    for _ in range(max_steps):
        vals = np.array([g(x) for g in constraints])
        if vals.size == 0 or vals.max() <= 0:
            return x
        i = int(vals.argmax())
        grad = _fd_grad(constraints[i], x, h)
        nrm = float(grad @ grad)
        if nrm == 0:
            return x
        # aim slightly inside so rounding does not leave us on the wrong side
        target = vals[i] + max(1e-12, 1e-3 * vals[i])
        x = bounds.clip(x - target * grad / nrm)
    return x


def _grid_polish(objective, constraints, bounds, x, step):
    """Compass search over feasible points with shrinking step."""
    fx = objective(x)
    d = x.size
    while step > 1e-6:
        improved = False
        for i in range(d):
            for s in (-step, step):
                y = x.copy()
                y[i] += s
                y = bounds.clip(y)
                if all(g(y) <= 0 for g in constraints):
                    fy = objective(y)
                    if fy < fx:
                        x, fx, improved = y, fy, True
        if not improved:
            step /= 4.0
    return x


def certify_point(objective, ineq_constraints, bounds, x):
    """Return a :class:`ConstrainedResult` if ``x`` is feasible and KKT-certified, else ``None``."""
    constraints = list(ineq_constraints)
    x = bounds.clip(np.asarray(x, dtype=float))
    viol = max([0.0] + [max(g(x), 0.0) for g in constraints])
    if viol > FEAS_TOL:
        return None
    lo, hi = np.asarray(bounds.lower), np.asarray(bounds.upper)
    scale = np.maximum(np.abs(x), 1e-3 * (hi - lo))
    fx = objective(x)
    kkt = _kkt_residual(objective, constraints, bounds, x, max(abs(fx), 1.0), scale)
    if kkt >= KKT_TOL:
        return None
    return ConstrainedResult(x, float(fx), True, viol, kkt, "kkt", 0)


def constrained_minimize(
    objective, ineq_constraints, bounds, x0, *, extra_starts=(), polish_step=24.0, lazy_starts=False
):
    """Minimize ``objective`` subject to ``g(x) <= 0`` for each constraint and box bounds.

    Parameters
    ----------
    objective : callable
    ineq_constraints : sequence of callable
        Feasible where ``g(x) <= 0``. Constraints should be scaled so that a
        violation of ``1e-8`` is negligible.
    bounds : OptimBounds
    x0 : array_like
        Starting point (need not be feasible).
    extra_starts : sequence of array_like
        Further starting points; the best feasible result wins.
    polish_step : float
        Initial step of the compass-search fallback (same units as ``x``).
    lazy_starts : bool
        Only try ``extra_starts`` when the result from ``x0`` is not
        KKT-certified.

    Returns
    -------
    ConstrainedResult
        ``certified`` is ``"kkt"`` when the projected finite-difference gradient
        of the Lagrangian is below ``1e-5`` (relative), ``"grid"`` when the
        compass search had to polish the point, ``"none"`` otherwise.

    Raises
    ------
    Infeasible
        If no start reaches a feasible point.
    """
    constraints = list(ineq_constraints)
    starts = [np.asarray(x0, dtype=float)] + [np.asarray(s, dtype=float) for s in extra_starts]
    lo, hi = np.asarray(bounds.lower), np.asarray(bounds.upper)
    best = None
    nfev = 0
    for i_start, x_start in enumerate(starts):
        if lazy_starts and i_start > 0 and best is not None:
            if _kkt_residual(objective, constraints, bounds, best[0], best[3], best[2]) < KKT_TOL:
                break
        x_start = bounds.clip(x_start)
        scale = np.maximum(np.abs(x_start), 1e-3 * (hi - lo))
        f_scale = max(abs(objective(x_start)), 1.0)
        counter = [0]

        def penalized(z, lam, mu):
            counter[0] += 1
            x = z * scale
            xp = np.clip(x, lo, hi)
            out = objective(xp) / f_scale
            for li, g in zip(lam, constraints):
                out += (max(0.0, li + mu * g(xp)) ** 2 - li * li) / (2.0 * mu)
            # exact penalty outside the box keeps the simplex near it
            return out + 1e3 * float(np.abs((x - xp) / scale).sum())

        z = x_start / scale
        lam = np.zeros(len(constraints))
        mu = 10.0
        prev_viol = math.inf
        for _ in range(40):
            res = nelder_mead(lambda v: penalized(v, lam, mu), z, _INNER, step=0.05)
            z_new = res.x
            x = np.clip(z_new * scale, lo, hi)
            gv = np.array([g(x) for g in constraints])
            viol = float(np.maximum(gv, 0.0).max()) if gv.size else 0.0
            lam = np.maximum(0.0, lam + mu * gv)
            moved = float(np.abs(z_new - z).max())
            z = x / scale
            if viol <= 1e-12 and moved < 1e-9:
                break
            if viol > 0.25 * prev_viol:
                mu = min(mu * 10.0, 1e12)
            prev_viol = viol
            if not constraints and moved < 1e-10:
                break
        nfev += counter[0]
        x = _restore(constraints, bounds, x, scale)
        gv = [g(x) for g in constraints]
        viol = max([0.0] + [max(v, 0.0) for v in gv])
        if viol > FEAS_TOL:
            continue
        fx = objective(x)
        if best is None or fx < best[1]:
            best = (x, fx, scale, f_scale)
    if best is None:
        raise Infeasible("no feasible point found from any start")

    x, fx, scale, f_scale = best
    kkt = _kkt_residual(objective, constraints, bounds, x, f_scale, scale)
    certified = "kkt" if kkt < KKT_TOL else "none"
    if certified == "none":
        x = _grid_polish(objective, constraints, bounds, x, polish_step)
        fx = objective(x)
        kkt = _kkt_residual(objective, constraints, bounds, x, f_scale, scale)
        certified = "grid"
    viol = max([0.0] + [max(g(x), 0.0) for g in constraints])
    return ConstrainedResult(x, float(fx), viol <= FEAS_TOL, viol, kkt, certified, nfev)


# --- the maintenance problem --------------------------------------------------------


@dataclass(frozen=True)
class Equipment:
    """Cost and reliability of an equipment as functions of its intervals (hours).

    Attributes
    ----------
    components : tuple of (str, CostParams, SteadyFunctions)
    accuracy : float
        Series accuracy used for reliability evaluations. Tight values keep
        the reliability surface smooth for finite-difference checks.
    """

    components: tuple
    accuracy: float = 1e-12

    @property
    def ids(self):
        return [cid for cid, _, _ in self.components]

    def cost(self, x):
        return math.fsum(component_cost(cp, sf, float(M)) for (_, cp, sf), M in zip(self.components, x))

    def reliability(self, x):
        return equipment_reliability([sf for _, _, sf in self.components], [float(M) for M in x], self.accuracy)

    def component_reliability(self, x):
        return [reliability_series(sf, float(M), self.accuracy) for (_, _, sf), M in zip(self.components, x)]

    def bounds(self, lower=1.0):
        return OptimBounds(tuple(lower for _ in self.components), tuple(cp.rp for _, cp, _ in self.components))


@dataclass(frozen=True)
class Anchors:
    C_i: float
    R_i: float
    C_o: float
    R_r: float
    R_o: float
    C_r: float
    x_cost: tuple = ()
    x_rel: tuple = ()
    certified: tuple = ()

    def as_dict(self):
        return {
            "C_i": self.C_i,
            "R_i": self.R_i,
            "C_o": self.C_o,
            "R_r": self.R_r,
            "R_o": self.R_o,
            "C_r": self.C_r,
            "cost_optimal_hours": list(self.x_cost),
            "reliability_optimal_hours": list(self.x_rel),
            "certified": list(self.certified),
        }


@dataclass(frozen=True)
class ParetoPoint:
    M_vec: tuple
    C: float
    R: float
    w: float

    @property
    def M_days(self):
        return tuple(m / HOURS_PER_DAY for m in self.M_vec)


def _memo(fn, size=4096):
    """Cache ``fn`` on the exact bytes of ``x``; objective and constraints share points."""
    cache = {}

    def wrapped(x):
        key = np.asarray(x, dtype=float).tobytes()
        try:
            return cache[key]
        except KeyError:
            if len(cache) >= size:
                cache.clear()
            val = cache[key] = fn(x)
            return val

    return wrapped


def solve_sops(cost_fn, rel_fn, C_i, R_i, bounds, x0):
    """Solve the two single-objective subproblems.

    ``min C s.t. R >= R_i`` gives ``(C_o, R_r)``; ``max R s.t. C <= C_i``
    gives ``(C_r, R_o)``. Constraints are scaled relative to ``R_i``/``C_i``.
    """
    x0 = np.asarray(x0, dtype=float)
    cost_fn, rel_fn = _memo(cost_fn), _memo(rel_fn)
    cost_sop = constrained_minimize(cost_fn, [lambda x: (R_i - rel_fn(x)) / R_i], bounds, x0)
    rel_sop = constrained_minimize(
        lambda x: -rel_fn(x), [lambda x: (cost_fn(x) - C_i) / C_i], bounds, x0, extra_starts=[cost_sop.x]
    )
    xc, xr = cost_sop.x, rel_sop.x
    return Anchors(
        C_i=C_i,
        R_i=R_i,
        C_o=cost_fn(xc),
        R_r=rel_fn(xc),
        R_o=rel_fn(xr),
        C_r=cost_fn(xr),
        x_cost=tuple(float(v) for v in xc),
        x_rel=tuple(float(v) for v in xr),
        certified=(cost_sop.certified, rel_sop.certified),
    )


def effectiveness(C, R, anchors):
    """``(e_C, e_R)``; both lie in ``[-1, 0]`` inside the anchor rectangle."""
    dc = anchors.C_r - anchors.C_o
    dr = anchors.R_o - anchors.R_r
    if not (dc > 0 and dr > 0):
        raise DegenerateAnchors(f"anchors collapse (C_r - C_o = {dc}, R_o - R_r = {dr})")
    return (C - anchors.C_r) / dc, (anchors.R_r - R) / dr


def non_dominated(points, c_tol=1e-9, r_tol=1e-12):
    """Drop points dominated by another (lower cost and higher reliability) and duplicates."""
    keep = []
    for i, p in enumerate(points):
        dominated = False
        for j, q in enumerate(points):
            if i == j:
                continue
            no_worse = q.C <= p.C + c_tol * abs(p.C) and q.R >= p.R - r_tol
            better = q.C < p.C - c_tol * abs(p.C) or q.R > p.R + r_tol
            if no_worse and (better or j < i):
                dominated = True
                break
        if not dominated:
            keep.append(p)
    return keep


def pareto_front(cost_fn, rel_fn, anchors, bounds, weights):
    """Weighted-sum Pareto front inside the anchor rectangle.

    Returns the non-dominated :class:`ParetoPoint` list in weight order.
    """
    weights = [float(w) for w in weights]
    if any(not 0.0 <= w <= 1.0 for w in weights):
        raise ValueError("weights must lie in [0, 1]")
    if weights != sorted(set(weights)):
        raise ValueError("weights must be sorted and free of duplicates")
    try:
        effectiveness(anchors.C_r, anchors.R_r, anchors)
    except DegenerateAnchors as exc:
        raise EmptyFront(str(exc)) from exc

    cost_fn, rel_fn = _memo(cost_fn), _memo(rel_fn)
    constraints = [
        lambda x: (cost_fn(x) - anchors.C_r) / anchors.C_r,
        lambda x: (anchors.R_r - rel_fn(x)) / anchors.R_r,
    ]
    anchor_starts = [np.asarray(anchors.x_cost), np.asarray(anchors.x_rel)]
    points = []
    prev = None
    for w in weights:

        def scalar(x, w=w):
            e_c, e_r = effectiveness(cost_fn(x), rel_fn(x), anchors)
            return w * e_c + (1.0 - w) * e_r

        x0 = prev if prev is not None else anchor_starts[1]
        extra = [s for s in anchor_starts if not np.array_equal(s, x0)]
        # the previous optimum often stays optimal across neighbouring weights
        res = certify_point(scalar, constraints, bounds, x0)
        if res is None:
            try:
                res = constrained_minimize(scalar, constraints, bounds, x0, extra_starts=extra, lazy_starts=True)
            except Infeasible:
                continue
        prev = res.x
        points.append(ParetoPoint(tuple(float(v) for v in res.x), cost_fn(res.x), rel_fn(res.x), w))
    front = non_dominated(points)
    if not front:
        raise EmptyFront("no non-dominated solution found")
    return front


class OptimizationRun(NamedTuple):
    current: tuple
    anchors: Anchors
    front: list


def default_weights(n=201):
    return [i / (n - 1) for i in range(n)] if n > 1 else [1.0]


def optimize_equipment(equipment, current_intervals, weights=None, bounds=None):
    """Full two-stage run from the current intervals (hours)."""
    bounds = bounds or equipment.bounds()
    x0 = np.asarray(current_intervals, dtype=float)
    C_i = equipment.cost(x0)
    R_i = equipment.reliability(x0)
    anchors = solve_sops(equipment.cost, equipment.reliability, C_i, R_i, bounds, x0)
    front = pareto_front(equipment.cost, equipment.reliability, anchors, bounds, weights or default_weights())
    return OptimizationRun(tuple(float(v) for v in x0), anchors, front)
