"""Acceptance criteria.

Each test is one criterion at its stated tolerance and prints one PASS line
(visible with pytest -s; pytest -v shows one line per criterion either way).
Criteria 2/3/5/7 share a bank of 20 seeded benchmark scenarios: 200 cells,
10% dispersion, ell=2, tau_d=12 s, eps=1e-3, mu=0.95, t_end=600 s, h=0.01 s.
"""

import math
import time

import numpy as np
import pytest

from socpack import (CurrentProfile, EstimatorParams, EstimatorState,
                     HybridState, PackConfig, PlantState, check_prop1,
                     check_prop2, check_thm1, compute_constants,
                     default_ocv_curve, dwell_time_stats, observer_bank_oracle,
                     benchmark_scenario, pulse_train_profile, reduce_trace, run,
                     verify_series)
from conftest import feasible_state, make_pack

N_SCENARIOS = 20
RUNTIME_BUDGET_S = 60.0


def _homog_pack(n):
    return make_pack([12.0] * n, [5e-4] * n, [5e-4] * n, [6.0] * n)


@pytest.fixture(scope="module")
def bank():
    """Run the 20 seeded scenarios once; keep reports and dwell statistics."""
    benchmark_scenario(seed=0, n_cells=8, t_end=2.0).run()  # JIT warm-up
    entries = []
    t0 = time.perf_counter()
    for seed in range(N_SCENARIOS):
        sc = benchmark_scenario(seed=seed, n_cells=200, t_end=600.0, h=0.01)
        trace = sc.run()
        series = reduce_trace(trace, sc.cfg, sc.params)
        entries.append({
            "seed": seed,
            "report": verify_series(series),
            "dwell": dwell_time_stats(series),
            "diag": trace.meta["diagnostics"],
            "n_jumps": trace.jumps.n_jumps,
            "n_cells": 200,
        })
        del trace, series
    elapsed = time.perf_counter() - t0
    return {"entries": entries, "elapsed_s": elapsed}


def test_criterion_1_constants_reproduction():
    """a = 1/12, c1 ~ 8.696, c3 ~ 17.391, c4 ~ 104.35 at ell=2, tau_d=12 s."""
    curve = default_ocv_curve()
    cfg = _homog_pack(3)
    params = EstimatorParams(ell=2.0, tau_d_s=12.0, epsilon_v=1e-3, mu=0.95)
    c = compute_constants(cfg, params)
    # independent arithmetic from the measured minimum slope
    a1 = curve.a1
    assert abs(c.a - min(2.0 * a1, 1.0 / 12.0)) <= 1e-12
    assert abs(c.c1 - math.sqrt(max(1.0, 4.0 / a1 ** 2))) <= 1e-12
    assert abs(c.c3 - 4.0 / a1) <= 1e-12
    assert abs(c.c4 - (2.0 / a1) * math.sqrt(12.0 / c.a)) <= 1e-12
    # and against the nominal 0.23 V/unit-SOC values, each within 0.1%
    for got, want in ((c.a, 1.0 / 12.0), (c.c1, 8.695652173913043),
                      (c.c3, 17.391304347826086), (c.c4, 104.34782608695652)):
        assert abs(got - want) <= 1e-3 * want
    print(f"ACCEPTANCE 1 constants-reproduction: PASS "
          f"(a={c.a:.6f}, c1={c.c1:.4f}, c3={c.c3:.4f}, c4={c.c4:.4f})")


def test_criterion_2_theorem1_suite(bank):
    """The extreme-SOC (thm1) and selected-cell (prop2) inequalities hold at
    every sample of all 20 scenarios."""
    worst = -math.inf
    for e in bank["entries"]:
        for name in ("thm1_extreme_soc", "prop2_soc_sigma_iss"):
            res = e["report"][name]
            assert res.passed, f"seed {e['seed']}: {name} failed ({res.note})"
            worst = max(worst, res.max_violation)
    elapsed = bank["elapsed_s"]
    assert elapsed < RUNTIME_BUDGET_S, f"suite took {elapsed:.1f} s"
    print(f"ACCEPTANCE 2 theorem1-suite: PASS ({N_SCENARIOS} scenarios, "
          f"worst margin {worst:.3e}, {elapsed:.1f} s < {RUNTIME_BUDGET_S:.0f} s)")


def test_criterion_3_proposition1_suite(bank):
    """The R-C voltage ISS inequality (prop1) holds in every scenario; with
    d=0 and exact U_hat init the estimation error stays below 1e-8."""
    for e in bank["entries"]:
        res = e["report"]["prop1_urc_iss"]
        assert res.passed, f"seed {e['seed']}: prop1 failed ({res.note})"
    cfg = _homog_pack(50)
    params = EstimatorParams(ell=2.0, tau_d_s=12.0, epsilon_v=1e-3, mu=0.95)
    rng = np.random.default_rng(77)
    q0 = feasible_state(cfg, rng.uniform(0.48, 0.52, 50), sigma=37, soc_hat=0.0)
    trace = run(cfg, params, q0, pulse_train_profile(300.0, seed=78),
                300.0, 0.01, seed=77)
    series = reduce_trace(trace, cfg, params)
    peak = float(np.max(series.urc_err_norm))
    assert peak <= 1e-8, f"|U_RC - U_hat| reached {peak:.3e}"
    print(f"ACCEPTANCE 3 proposition1-suite: PASS "
          f"(20 scenarios; d=0 exact-init peak error {peak:.2e} <= 1e-8)")


def test_criterion_4_convergence_at_zero_mismatch():
    """Homogeneous pack: after t > 5/b the estimation error stays within the
    epsilon residual (1/a1 + c3)*eps ~ 0.0217 unit-SOC until t_end."""
    cfg = _homog_pack(20)
    params = EstimatorParams(ell=2.0, tau_d_s=12.0, epsilon_v=1e-3, mu=0.95)
    c = compute_constants(cfg, params)
    assert c.d == 0.0
    bound = (1.0 / c.a1 + c.c3) * c.epsilon_v
    assert bound == pytest.approx(0.021739130434782608, rel=1e-3)
    rng = np.random.default_rng(4242)
    q0 = feasible_state(cfg, rng.uniform(0.48, 0.52, 20), sigma=15, soc_hat=0.0)
    trace = run(cfg, params, q0, pulse_train_profile(300.0, seed=43),
                300.0, 0.01, seed=42)
    series = reduce_trace(trace, cfg, params)
    late = series.t > 5.0 / c.b
    assert np.any(late)
    err_late = np.abs(series.soc_hat - series.soc_extreme)[late]
    assert float(err_late.max()) <= bound, \
        f"late error {err_late.max():.3e} exceeds {bound:.5f}"
    print(f"ACCEPTANCE 4 convergence-at-d0: PASS (max late error "
          f"{err_late.max():.3e} <= {bound:.5f} for t > {5.0 / c.b:.0f} s)")


def test_criterion_5_zeno_freedom(bank):
    """tau_min strictly positive, chain cap untouched, <= 1000 jumps per 1 s."""
    worst_tau = math.inf
    worst_rate = 0
    for e in bank["entries"]:
        st = e["dwell"]
        assert st.tau_min > 0.0, f"seed {e['seed']}: zero dwell time"
        assert st.rate_bound_ok, f"seed {e['seed']}: rate bound violated"
        assert st.max_jumps_1s <= 1000
        assert e["diag"]["max_chain"] < e["n_cells"] - 1
        worst_tau = min(worst_tau, st.tau_min)
        worst_rate = max(worst_rate, st.max_jumps_1s)
    print(f"ACCEPTANCE 5 zeno-freedom: PASS (min dwell {worst_tau:.3g} s, "
          f"max jumps in any 1 s window {worst_rate})")


def test_criterion_6_oracle_equivalence():
    """N=1: the hybrid run equals the observer bank to 1e-8. N=5: the hybrid
    extreme estimate matches the bank minimum within the steady bound."""
    params = EstimatorParams(ell=2.0, tau_d_s=12.0, epsilon_v=1e-3, mu=0.95)
    cfg1 = _homog_pack(1)
    x0 = PlantState.initial(np.zeros(1), np.array([0.55]))
    prof = pulse_train_profile(120.0, seed=6)
    q0 = HybridState(plant=x0, est=EstimatorState(u_bar_rc=0.0, soc_hat=0.40,
                                                  sigma=1))
    trace = run(cfg1, params, q0, prof, 120.0, 0.01)
    bank1 = observer_bank_oracle(cfg1, params, prof, x0, 120.0, 0.01,
                                 soc_hat0=0.40)
    assert trace.jumps.n_jumps == 0
    sup1 = float(np.max(np.abs(trace.soc_hat - bank1.soc_hat[:, 0])))
    assert sup1 <= 1e-8, f"N=1 sup deviation {sup1:.3e}"

    # N=5, homogeneous tau (d=0), dispersed R/Q; oracle exactly initialized
    rng = np.random.default_rng(66)
    g = rng.standard_normal((5, 3))
    cfg5 = make_pack([12.0] * 5, np.abs(5e-4 * (1 + 0.1 * g[:, 0])),
                     np.abs(5e-4 * (1 + 0.1 * g[:, 1])),
                     np.abs(6.0 * (1 + 0.1 * g[:, 2])))
    c = compute_constants(cfg5, params)
    assert c.d == 0.0
    steady = (1.0 / c.a1 + c.c3) * c.epsilon_v
    x05 = PlantState.initial(np.zeros(5), rng.uniform(0.45, 0.55, 5))
    prof5 = pulse_train_profile(300.0, seed=67)
    q05 = HybridState(plant=x05, est=EstimatorState(u_bar_rc=0.0, soc_hat=0.0,
                                                    sigma=4))
    tr5 = run(cfg5, params, q05, prof5, 300.0, 0.01, seed=66)
    bank5 = observer_bank_oracle(cfg5, params, prof5, x05, 300.0, 0.01)
    grid = 0.01 * np.arange(1, 30001)
    rows = np.searchsorted(tr5.t, grid)
    rows_b = np.searchsorted(bank5.t, grid)
    hybrid = tr5.soc_hat[rows]
    oracle_min = bank5.soc_hat[rows_b].min(axis=1)
    late = grid > 5.0 / c.b
    dev = float(np.max(np.abs(hybrid - oracle_min)[late]))
    assert dev <= steady, f"N=5 deviation {dev:.5f} beyond steady bound {steady:.5f}"
    print(f"ACCEPTANCE 6 oracle-equivalence: PASS (N=1 sup {sup1:.2e} <= 1e-8; "
          f"N=5 late deviation {dev:.5f} <= {steady:.5f})")


def test_criterion_7_lyapunov_jump_inequalities(bank):
    """At every recorded jump: V1 unchanged to 1e-12 and
    V2+ <= max(V2, V2/2 + 8 eps^2/a1^2) + 1e-12."""
    total = 0
    for e in bank["entries"]:
        for name in ("lyap_v1_jump", "lyap_v2_jump"):
            res = e["report"][name]
            assert res.passed, f"seed {e['seed']}: {name} failed"
            assert res.n_checked == e["n_jumps"]
        total += e["n_jumps"]
    assert total > 0, "the scenario bank produced no jumps at all"
    print(f"ACCEPTANCE 7 lyapunov-jump: PASS ({total} jumps across the bank)")


def test_criterion_8_min_max_duality():
    """Max-mode on the mirrored pack reproduces 1 - min-mode estimate to 1e-6."""
    curve = default_ocv_curve()
    n = 8
    rng = np.random.default_rng(88)
    g = rng.standard_normal((n, 4))
    taus = np.abs(12.0 * (1 + 0.1 * g[:, 0]))
    r_ds = np.abs(5e-4 * (1 + 0.1 * g[:, 1]))
    r_ints = np.abs(5e-4 * (1 + 0.1 * g[:, 2]))
    q_ahs = np.abs(6.0 * (1 + 0.1 * g[:, 3]))
    soc0 = rng.uniform(0.45, 0.55, n)
    prof = pulse_train_profile(200.0, seed=89)

    cfg_min = make_pack(taus, r_ds, r_ints, q_ahs, ocv=curve)
    params_min = EstimatorParams(ell=2.0, tau_d_s=12.0, epsilon_v=1e-3, mu=0.95,
                                 mode="min")
    q0_min = feasible_state(cfg_min, soc0, sigma=6, soc_hat=0.0)
    tr_min = run(cfg_min, params_min, q0_min, prof, 200.0, 0.01, seed=90)

    cfg_max = make_pack(taus, r_ds, r_ints, q_ahs, ocv=curve.mirrored())
    params_max = EstimatorParams(ell=2.0, tau_d_s=12.0, epsilon_v=1e-3, mu=0.95,
                                 mode="max")
    q0_max = feasible_state(cfg_max, 1.0 - soc0, sigma=6, soc_hat=1.0)
    prof_neg = CurrentProfile(prof.times, -prof.values)
    tr_max = run(cfg_max, params_max, q0_max, prof_neg, 200.0, 0.01, seed=90)

    grid = 0.01 * np.arange(0, 20001)
    rows_min = np.searchsorted(tr_min.t, grid)
    rows_max = np.searchsorted(tr_max.t, grid)
    sup = float(np.max(np.abs(tr_max.soc_hat[rows_max]
                              - (1.0 - tr_min.soc_hat[rows_min]))))
    assert sup <= 1e-6, f"duality sup deviation {sup:.3e}"
    assert tr_min.jumps.n_jumps >= 1
    print(f"ACCEPTANCE 8 min-max-duality: PASS (sup deviation {sup:.2e} <= 1e-6, "
          f"{tr_min.jumps.n_jumps} jumps)")


def test_criterion_9_integrator_order():
    """Step halving on a jump-free (and OCV-knot-free) segment reduces the
    error by at least 12x, consistent with fourth order."""
    cfg = _homog_pack(3)
    params = EstimatorParams(ell=2.0, tau_d_s=12.0, epsilon_v=1e-3, mu=0.95)
    q0 = feasible_state(cfg, np.full(3, 0.48), soc_hat=0.455,
                        u_rc=np.full(3, 0.003))
    ends = {}
    for h in (0.2, 0.1, 0.0125):
        tr = run(cfg, params, q0, CurrentProfile.constant(0.0), 2.0, h)
        assert tr.jumps.n_jumps == 0
        ends[h] = tr.soc_hat[-1]
    e1 = abs(ends[0.2] - ends[0.0125])
    e2 = abs(ends[0.1] - ends[0.0125])
    assert e1 > 1e-12, "order study fell into round-off"
    ratio = e1 / e2
    assert ratio >= 12.0, f"error ratio {ratio:.1f} < 12"
    print(f"ACCEPTANCE 9 integrator-order: PASS (halving ratio {ratio:.1f} >= 12)")
