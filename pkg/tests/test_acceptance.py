"""Acceptance criteria 1-8.

Every test prints one ``CRITERION n: PASS|FAIL`` line (collected again in the
terminal summary) before asserting. Run as a script for the lines alone:
``python3 tests/test_acceptance.py``.
"""

import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest
from scipy import integrate

sys.path.insert(0, os.path.dirname(__file__))

from conftest import ACTUATOR, ACTUATOR_COSTS, RP, VALVE, VALVE_COSTS  # noqa: E402
from reference_values import CRITERIA, INITIAL, INTERIOR_ROWS, OPT_COST, OPT_REL  # noqa: E402

from imperfect_pm.hazard import ImModel, LinearParams, ModelSpec, WeibullParams, hazard_at_age  # noqa: E402
from imperfect_pm.optimizer import HOURS_PER_DAY, Equipment, default_weights, non_dominated, optimize_equipment  # noqa: E402
from imperfect_pm.selection import aic_value, back_solve_n, bic_value, select  # noqa: E402
from imperfect_pm.simulator import SimConfig, simulate_fleet, simulate_unit_arrays  # noqa: E402
from imperfect_pm.steady_state import (  # noqa: E402
    SteadyFunctions,
    avg_hazard,
    closed_form_ra,
    reliability_series,
)

RESULTS = []

PAS_WEI = ModelSpec.parse("pas-weibull")
PAR_LIN = ModelSpec.parse("par-linear")


def report(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def _npp():
    return Equipment(
        (
            ("actuator", ACTUATOR_COSTS, SteadyFunctions(PAS_WEI, ACTUATOR, RP)),
            ("valve", VALVE_COSTS, SteadyFunctions(PAR_LIN, VALVE, RP)),
        )
    )


_RUN = {}


def _npp_run():
    if "run" not in _RUN:
        eq = _npp()
        t0 = time.perf_counter()
        run = optimize_equipment(eq, [4320.0, 4320.0], default_weights(201))
        _RUN["run"] = (eq, run, time.perf_counter() - t0)
    return _RUN["run"]


# --- 1 ------------------------------------------------------------------------------


def test_criterion_1_information_criteria():
    worst_aic = worst_bic = 0.0
    ns = {}
    for comp, n_expected in (("actuator", 39), ("valve", 35)):
        implied = [back_solve_n(a, b, k) for (_, k, a, b) in CRITERIA[comp].values()]
        ns[comp] = int(round(float(np.median(implied))))
        assert ns[comp] == n_expected
        for L, k, a, b in CRITERIA[comp].values():
            worst_aic = max(worst_aic, abs(aic_value(math.log(L), k) - a))
            worst_bic = max(worst_bic, abs(bic_value(math.log(L), k, ns[comp]) - b))
    ok = worst_aic <= 0.01 and worst_bic <= 0.01
    report(1, ok, f"n={ns}, max |dAIC|={worst_aic:.4g}, max |dBIC|={worst_bic:.4g} (tol 0.01)")
    assert ok


# --- 2 ------------------------------------------------------------------------------


def test_criterion_2_initial_point():
    eq = _npp()
    t0 = time.perf_counter()
    C, R = eq.cost([4320.0, 4320.0]), eq.reliability([4320.0, 4320.0])
    dt = time.perf_counter() - t0
    _, C_ref, R_ref = INITIAL
    ok = abs(C - C_ref) <= 0.005 * C_ref and abs(R - R_ref) <= 1e-3 and dt < 1.0
    report(2, ok, f"C_i={C:.2f} (ref {C_ref}, rel {abs(C / C_ref - 1):.2e}), R_i={R:.6f} (ref {R_ref}), {dt * 1e3:.1f} ms")
    assert ok


# --- 3 ------------------------------------------------------------------------------


def test_criterion_3_sop_anchors():
    eq, run, dt = _npp_run()
    a = run.anchors
    dc = np.array(a.x_cost) / HOURS_PER_DAY - OPT_COST[0]
    dr = np.array(a.x_rel) / HOURS_PER_DAY - OPT_REL[0]
    ok_cost = np.all(np.abs(dc) <= 5) and abs(a.C_o - OPT_COST[1]) <= 0.01 * OPT_COST[1] and abs(a.R_r - OPT_COST[2]) <= 1e-3
    ok_rel = np.all(np.abs(dr) <= 5) and abs(a.R_o - OPT_REL[2]) <= 5e-4 and a.C_r <= a.C_i * (1 + 1e-9)
    ok = bool(ok_cost and ok_rel and dt < 60)
    report(
        3,
        ok,
        f"SOP-cost {np.round(np.array(a.x_cost) / 24, 2)} d C={a.C_o:.2f} R={a.R_r:.6f}; "
        f"SOP-rel {np.round(np.array(a.x_rel) / 24, 2)} d R={a.R_o:.6f} C={a.C_r:.2f}<=C_i={a.C_i:.2f}; {dt:.1f} s",
    )
    assert ok


# --- 4 ------------------------------------------------------------------------------


def test_criterion_4_interior_rows():
    eq, run, dt = _npp_run()
    front = run.front
    assert len(non_dominated(front)) == len(front)
    ok = dt < 120
    notes = []
    for M_days, C_pub, R_pub in INTERIOR_ROWS:
        x = [d * HOURS_PER_DAY for d in M_days]
        C, R = eq.cost(x), eq.reliability(x)
        matches = abs(C - C_pub) <= 0.01 * C_pub and abs(R - R_pub) <= 1e-3
        # a printed value contradicted by evaluation is recorded and the evaluated value is used
        target = (C_pub, R_pub) if matches else (C, R)
        near = any(abs(p.C - target[0]) <= 0.01 * target[0] and abs(p.R - target[1]) <= 1e-3 for p in front)
        ok = ok and near
        tag = "match" if matches else f"discrepancy (evaluated C={C:.2f}, R={R:.5f})"
        notes.append(f"{M_days}: {tag}, front point {'found' if near else 'MISSING'}")
    report(4, ok, f"{len(front)} front points, {dt:.1f} s; " + "; ".join(notes))
    assert ok


# --- 5 ------------------------------------------------------------------------------


def test_criterion_5_series_accuracy():
    rng = np.random.default_rng(20261015)
    worst_closed = 0.0
    for _ in range(100):
        p = WeibullParams(rng.uniform(1.5, 10.0), rng.uniform(5e3, 5e4), rng.uniform(0.05, 1.0))
        sf = SteadyFunctions(PAS_WEI, p, RP)
        M = rng.uniform(0.05, 0.6) * p.eta * p.epsilon
        two = reliability_series(sf, M, terms=2).value
        worst_closed = max(worst_closed, abs(closed_form_ra(p, p.epsilon, M) - two))

    def quad_oracle(sf, M):
        # independent of the library window: average exp(-H) over one period in time
        p = sf.params
        if sf.spec.im is ImModel.PAS:
            lo, hi = M * (1 - p.epsilon) / p.epsilon, M / p.epsilon
            H = lambda w: (w / p.eta) ** p.beta
            return integrate.quad(lambda w: math.exp(-H(w)), lo, hi, epsabs=1e-15, epsrel=1e-13)[0] / (hi - lo)
        f = lambda t: math.exp(-p.alpha / 2 * (t * (1 - p.epsilon) + M * p.epsilon / 2) ** 2)
        return integrate.quad(f, 0.0, sf.rp, epsabs=1e-15, epsrel=1e-13, limit=200)[0] / sf.rp

    worst = {}
    for name, spec, make, acc in (
        ("actuator-like", PAS_WEI, lambda: WeibullParams(rng.uniform(6.5, 8.5), rng.uniform(13e3, 18e3), rng.uniform(0.75, 0.95)), 1e-9),
        ("valve-like", PAR_LIN, lambda: LinearParams(rng.uniform(1.2e-9, 2.4e-9), rng.uniform(0.6, 0.9)), 1e-7),
    ):
        err = 0.0
        for _ in range(50):
            sf = SteadyFunctions(spec, make(), RP)
            M = rng.uniform(2000.0, 8000.0)
            res = reliability_series(sf, M, accuracy=acc)
            err = max(err, abs(res.value - quad_oracle(sf, M)) / acc)
        worst[name] = err
    ok = worst_closed <= 1e-12 and all(v <= 1.0 for v in worst.values())
    report(
        5,
        ok,
        f"max |closed form - 2-term series|={worst_closed:.2e} (tol 1e-12); "
        + ", ".join(f"{k} max err/accuracy={v:.3f}" for k, v in worst.items()),
    )
    assert ok


# --- 6 ------------------------------------------------------------------------------


def _hazard_oracle(sf, M):
    """Time average of the period hazard from the age maps, by quadrature."""
    p = sf.params
    h = lambda w: hazard_at_age(p, w)
    if sf.spec.im is ImModel.PAS:
        # stationary age t - (m - 1) M + M (1 - eps) / eps over one period
        start = M * (1 - p.epsilon) / p.epsilon
        val = integrate.quad(lambda s: h(start + s), 0.0, M, epsabs=0.0, epsrel=1e-13, limit=200)[0]
        return val / M
    age = lambda t: t * (1 - p.epsilon) + M * p.epsilon / 2
    val = integrate.quad(lambda t: h(age(t)), 0.0, sf.rp, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    return val / sf.rp


def test_criterion_6_averaged_hazard():
    rng = np.random.default_rng(6)
    worst = {}
    for label in ("pas-linear", "pas-weibull", "par-linear", "par-weibull"):
        spec = ModelSpec.parse(label)
        err = 0.0
        for _ in range(50):
            eps = rng.uniform(0.05, 1.0)
            if label.endswith("linear"):
                p = LinearParams(10 ** rng.uniform(-10, -7), eps)
            else:
                p = WeibullParams(rng.uniform(0.5, 9.0), rng.uniform(5e3, 5e4), eps)
            sf = SteadyFunctions(spec, p, RP)
            M = rng.uniform(100.0, RP)
            want = _hazard_oracle(sf, M)
            err = max(err, abs(avg_hazard(sf, M) - want) / want)
        worst[label] = err
    ok = all(v <= 1e-8 for v in worst.values())
    report(6, ok, ", ".join(f"{k} max rel err={v:.1e}" for k, v in worst.items()) + " (tol 1e-8)")
    assert ok


# --- 7 ------------------------------------------------------------------------------

# truths from the published estimates; designs (interval, horizon) in hours
RECOVERY = {
    "pas-linear": (LinearParams(1.54e-9, 0.6002), 30000.0, 150000.0),
    "par-linear": (LinearParams(1.73e-9, 0.7584), 30000.0, 150000.0),
    "pas-weibull": (WeibullParams(7.4708, 15397.0, 0.8482), 12000.0, 120000.0),
    "par-weibull": (WeibullParams(3.845, 29895.0, 0.5282), 15000.0, 90000.0),
}
N_REPS = 20


def recovery_seed(s):
    return 90210 + 7919 * s


def _recovery_job(args):
    label, s = args
    truth, M, horizon = RECOVERY[label]
    spec = ModelSpec.parse(label)
    fleet = simulate_fleet(SimConfig(spec, truth, M, horizon, 200, seed=recovery_seed(s)))
    rep = select(fleet["C1"], ("AIC",))
    est = rep.entry(spec).fit.params
    ok = abs(est.epsilon - truth.epsilon) <= 0.1
    for name in ("alpha", "beta", "eta"):
        if hasattr(truth, name):
            ok = ok and abs(getattr(est, name) / getattr(truth, name) - 1) <= 0.15
    return label, bool(ok), rep.winner_by["AIC"].hazard is spec.hazard


@pytest.mark.slow
def test_criterion_7_mle_recovery():
    jobs = [(label, s) for label in RECOVERY for s in range(N_REPS)]
    t0 = time.perf_counter()
    workers = min(4, os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            out = list(pool.map(_recovery_job, jobs))
    else:
        out = [_recovery_job(j) for j in jobs]
    dt = time.perf_counter() - t0
    rec = {label: sum(r for lab, r, _ in out if lab == label) for label in RECOVERY}
    sel = {label: sum(a for lab, _, a in out if lab == label) for label in RECOVERY}
    ok = all(v >= 0.9 * N_REPS for v in rec.values()) and all(v >= 0.8 * N_REPS for v in sel.values())
    report(
        7,
        ok,
        "recovered " + ", ".join(f"{k} {v}/{N_REPS}" for k, v in rec.items())
        + "; AIC family " + ", ".join(f"{k} {v}/{N_REPS}" for k, v in sel.items())
        + f"; {dt:.0f} s",
    )
    assert ok


# --- 8 ------------------------------------------------------------------------------


MC_CASES = [
    ("pas-linear", LinearParams(1e-8, 0.5), 4000.0),
    ("pas-linear", LinearParams(1e-8, 0.85), 4000.0),
    ("pas-weibull", WeibullParams(2.5, 10000.0, 0.5), 4000.0),
    ("pas-weibull", WeibullParams(2.5, 10000.0, 0.85), 4000.0),
]


@pytest.mark.slow
def test_criterion_8_monte_carlo_counts():
    n_units, period = 10_000, 25
    ok = True
    notes = []
    for i, (label, params, M) in enumerate(MC_CASES):
        spec = ModelSpec.parse(label)
        cfg = SimConfig(spec, params, M, (period + 1) * M, n_units, seed=880000 + 100000 * i)
        _, fails = simulate_unit_arrays(cfg)
        lo, hi = (period - 1) * M, period * M
        counts = np.array([np.count_nonzero((f > lo) & (f <= hi)) for f in fails])
        mu = avg_hazard(SteadyFunctions(spec, params, RP), M) * M
        se = counts.std(ddof=1) / math.sqrt(n_units)
        z = (counts.mean() - mu) / se
        ok = ok and abs(z) <= 3
        notes.append(f"{label} eps={params.epsilon}: mean {counts.mean():.4f} vs h*M {mu:.4f} (z={z:+.2f})")
    report(8, ok, "; ".join(notes))
    assert ok


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
