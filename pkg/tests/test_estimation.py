import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from imperfect_pm.estimation import (
    FitOptions,
    FleetArrays,
    default_initial_guess,
    fit,
    log_likelihood,
    nelder_mead,
)
from imperfect_pm.exceptions import NonFiniteStart
from imperfect_pm.hazard import ALL_SPECS, LinearParams, ModelSpec, WeibullParams, cum_hazard, hazard
from imperfect_pm.history import ComponentHistory
from imperfect_pm.simulator import SimConfig, simulate_fleet

PAR_LIN = ModelSpec.parse("par-linear")
PAS_WEI = ModelSpec.parse("pas-weibull")
PAR_WEI = ModelSpec.parse("par-weibull")


def _direct_loglik(spec, p, histories):
    """Oracle: loop over events with the scalar hazard functions."""
    total = 0.0
    for h in histories:
        taus = list(h.maintenance_times)
        for m, ((a, b), fails) in enumerate(zip(h.period_bounds(), h.failures_by_period), start=1):
            total += sum(math.log(hazard(spec, p, taus, m, t)) for t in fails)
            total -= cum_hazard(spec, p, taus, m, b) - cum_hazard(spec, p, taus, m, a)
    return total


def _small_fleet():
    return [
        ComponentHistory.from_failures([300, 700], [120, 450, 690, 900], 1000, "U1"),
        ComponentHistory.from_failures([250], [260, 800], 950, "U2"),
        ComponentHistory.from_failures([400, 800, 1200], [1300], 1400, "U3"),
    ]


def test_no_failures_single_censoring():
    a, T = 3e-6, 500.0
    h = [ComponentHistory((), ((),), T)]
    assert_allclose(log_likelihood(PAR_LIN, LinearParams(a, 0.3), h), -a / 2 * T**2)


def test_exponential_reduction():
    eta, T = 200.0, 300.0
    h = [ComponentHistory.from_failures([], [T / 2], T)]
    assert_allclose(log_likelihood(PAS_WEI, WeibullParams(1.0, eta, 0.7), h), math.log(1 / eta) - T / eta)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.label)
def test_matches_scalar_oracle(spec):
    p = LinearParams(2e-6, 0.35) if spec.n_params == 2 else WeibullParams(2.4, 700.0, 0.35)
    assert_allclose(log_likelihood(spec, p, _small_fleet()), _direct_loglik(spec, p, _small_fleet()), rtol=1e-12)


def test_end_form_drops_start_ages():
    h = _small_fleet()
    p = LinearParams(2e-6, 0.35)
    inc = log_likelihood(PAR_LIN, p, h)
    end = log_likelihood(PAR_LIN, p, h, form="end")
    carried = sum(
        cum_hazard(PAR_LIN, p, list(u.maintenance_times), m, a)
        for u in h
        for m, (a, _) in enumerate(u.period_bounds(), start=1)
    )
    assert_allclose(inc - end, carried, rtol=1e-12)
    with pytest.raises(ValueError):
        log_likelihood(PAR_LIN, p, h, form="middle")


def test_truth_beats_boundary_effectiveness():
    truth = WeibullParams(3.0, 30000.0, 0.5)
    fleet = simulate_fleet(SimConfig(PAR_WEI, truth, 8760, 87600, 200, seed=5))["C1"]
    ll = log_likelihood(PAR_WEI, truth, fleet)
    assert ll > log_likelihood(PAR_WEI, WeibullParams(3.0, 30000.0, 0.0), fleet)
    assert ll > log_likelihood(PAR_WEI, WeibullParams(3.0, 30000.0, 1.0), fleet)


def test_gradient_par_linear():
    h = _small_fleet()
    a, eps = 2e-6, 0.35
    data = FleetArrays(h)
    # analytic partials, PAR offset = eps * tau_{m-1}
    r = sum(u.n_failures for u in h)
    da, de = r / a, 0.0
    for u in h:
        taus = (0.0,) + u.maintenance_times
        for m, ((s, e), fails) in enumerate(zip(u.period_bounds(), u.failures_by_period)):
            prev = taus[m]
            ws, we = s - eps * prev, e - eps * prev
            da -= 0.5 * (we**2 - ws**2)
            de += sum(-prev / (t - eps * prev) for t in fails) + a * prev * (we - ws)
    f = lambda a_, e_: log_likelihood(PAR_LIN, LinearParams(a_, e_), data)
    fd_a = (f(a * (1 + 1e-6), eps) - f(a * (1 - 1e-6), eps)) / (2e-6 * a)
    fd_e = (f(a, eps + 1e-6) - f(a, eps - 1e-6)) / 2e-6
    assert_allclose([fd_a, fd_e], [da, de], rtol=1e-5)


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False), st.sampled_from(ALL_SPECS))
def test_invariant_to_unit_order(rnd, spec):
    h = _small_fleet()
    p = LinearParams(2e-6, 0.6) if spec.n_params == 2 else WeibullParams(1.7, 900.0, 0.6)
    shuffled = list(h)
    rnd.shuffle(shuffled)
    assert_allclose(log_likelihood(spec, p, shuffled), log_likelihood(spec, p, h), rtol=1e-13)


def test_doubling_fleet_doubles_loglik():
    h = _small_fleet()
    for spec in ALL_SPECS:
        p = LinearParams(1e-6, 0.2) if spec.n_params == 2 else WeibullParams(2.0, 800.0, 0.2)
        assert_allclose(log_likelihood(spec, p, h + h), 2 * log_likelihood(spec, p, h), rtol=1e-13)


# --- Nelder-Mead ------------------------------------------------------------------


def test_nm_quadratic():
    f = lambda x: (x[0] - 1) ** 2 + (x[1] - 2) ** 2
    res = nelder_mead(f, [0.0, 0.0])
    assert res.converged
    assert res.fun < 1e-6
    assert_allclose(res.x, [1, 2], atol=1e-4)
    # the default f-spread stop leaves ~1e-5 in x; a tighter spread reaches 1e-6
    tight = nelder_mead(f, [0.0, 0.0], FitOptions(simplex_tol_f=1e-16, restarts=1))
    assert_allclose(tight.x, [1, 2], atol=1e-6)


def test_nm_rosenbrock_with_restart():
    rosen = lambda x: (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2
    res = nelder_mead(rosen, [-1.2, 1.0], FitOptions(restarts=1))
    assert_allclose(res.x, [1, 1], atol=1e-4)


def test_nm_best_value_monotone():
    seen = []
    nelder_mead(lambda x: np.sum((x - 3.0) ** 4) + x[0] ** 2, [0.0, 1.0, -2.0], callback=lambda x, f: seen.append(f))
    assert np.all(np.diff(seen) <= 0)


def test_nm_nonfinite_start():
    with pytest.raises(NonFiniteStart):
        nelder_mead(lambda x: math.inf, [0.0])
    # infeasible points elsewhere are simply rejected
    f = lambda x: math.inf if x[0] < 0 else (x[0] - 0.5) ** 2
    res = nelder_mead(f, [2.0], FitOptions(restarts=2))
    assert_allclose(res.x, [0.5], atol=1e-4)


def test_nm_restart_escapes_symmetric_stop():
    # a 1-D simplex straddling the optimum with equal values meets the spread test early
    f = lambda x: (x[0] - 0.5) ** 2
    plain = nelder_mead(f, [2.0], FitOptions(restarts=0))
    again = nelder_mead(f, [2.0], FitOptions(restarts=3))
    assert again.fun <= plain.fun
    assert again.fun < 1e-8


def test_nm_respects_max_iters():
    res = nelder_mead(lambda x: np.sum(x**2), np.ones(5), FitOptions(max_iters=3, restarts=0))
    assert res.nit == 3 and not res.converged


# --- fitting ----------------------------------------------------------------------


def test_fit_recovers_par_linear():
    truth = LinearParams(1.7e-9, 0.76)
    fleet = simulate_fleet(SimConfig(PAR_LIN, truth, 30000, 150000, 200, seed=21))["C1"]
    res = fit(PAR_LIN, fleet)
    assert res.converged and res.k == 2
    assert abs(res.params.alpha / truth.alpha - 1) < 0.15
    assert abs(res.params.epsilon - truth.epsilon) < 0.1
    assert res.n_events == sum(h.n_failures for h in fleet) + len(fleet)


def test_fit_recovers_pas_weibull():
    truth = WeibullParams(7.5, 15000.0, 0.85)
    fleet = simulate_fleet(SimConfig(PAS_WEI, truth, 12000, 120000, 200, seed=22))["C1"]
    res = fit(PAS_WEI, fleet)
    got = res.params
    assert_allclose([got.beta, got.eta, got.epsilon], [truth.beta, truth.eta, truth.epsilon], rtol=0.1)


def test_fit_no_failures_goes_to_boundary():
    fleet = [ComponentHistory((1000.0,), ((), ()), 2000.0, f"U{i}") for i in range(5)]
    res = fit(PAR_LIN, fleet, FitOptions(restarts=1))
    assert "no_failures" in res.diagnostics
    assert res.params.alpha < 1e-12
    assert res.log_likelihood > -1e-3


def test_refit_at_optimum_is_idempotent():
    fleet = _small_fleet()
    first = fit(PAS_WEI, fleet)
    again = fit(PAS_WEI, fleet, FitOptions(initial_guess=first.params, restarts=0))
    assert again.log_likelihood >= first.log_likelihood - 1e-10
    assert abs(again.log_likelihood - first.log_likelihood) < 1e-6


def test_fixed_parameters():
    fleet = _small_fleet()
    res = fit(PAS_WEI, fleet, FitOptions(fixed={"beta": 1.0}))
    assert res.params.beta == 1.0 and res.k == 2
    with pytest.raises(ValueError):
        fit(PAR_LIN, fleet, FitOptions(fixed={"beta": 1.0}))


def test_nested_linear_in_weibull():
    fleet = simulate_fleet(SimConfig(PAR_LIN, LinearParams(1.7e-9, 0.76), 15000, 90000, 60, seed=3))["C1"]
    lin = fit(PAR_LIN, fleet)
    wei = fit(PAR_WEI, fleet)
    assert wei.log_likelihood >= lin.log_likelihood - 1e-8


def test_default_initial_guess_is_finite():
    fleet = _small_fleet()
    for spec in ALL_SPECS:
        g = default_initial_guess(spec, FleetArrays(fleet))
        assert math.isfinite(log_likelihood(spec, g, fleet))


def test_fit_options_validation():
    with pytest.raises(ValueError):
        FitOptions(max_iters=0)
    with pytest.raises(ValueError):
        FitOptions(restarts=-1)
