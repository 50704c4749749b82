import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasefield.analysis import (
    RateEstimate,
    check_energy_monotone,
    discrete_gronwall,
    exact_linear,
    fit_order,
    lemma_z2_margin,
    lemma_z2p_margin,
    log_interp_ratio,
    spatial_convergence,
    stability_scan,
    temporal_convergence,
)
from phasefield.models import ModelConfig, StabilizationPlan, energy, resolve_A
from phasefield.spectral import GridSpec, SpectralField
from phasefield.stepper import RandomBandlimited, SingleMode, StepperState, make_initial, run, step

from conftest import random_field


# --- energy monotonicity ------------------------------------------------------


def test_constant_series_passes():
    rep = check_energy_monotone([3.0] * 10, tol=1e-10)
    assert rep.passed and rep.max_increase == 0 and rep.first_violation_step is None


def test_single_uptick_fails_at_its_step():
    tol = 1e-10
    series = [5.0, 4.0, 3.0, 3.0 + 2 * tol, 2.0]
    rep = check_energy_monotone(series, tol=tol)
    assert not rep and rep.first_violation_step == 3
    assert rep.max_increase == pytest.approx(2 * tol, rel=1e-3)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=20), st.floats(0, 1), st.floats(0, 1))
def test_monotone_check_respects_tolerance_order(series, t1, t2):
    lo, hi = sorted([t1, t2])
    if check_energy_monotone(series, tol=lo):
        assert check_energy_monotone(series, tol=hi)


def test_stabilized_ch_run_at_unit_step_passes():
    grid = GridSpec(32)
    init = make_initial(RandomBandlimited(seed=0, amplitude=1.0, band=8), grid)
    cfg = ModelConfig("ch", 0.1)
    rec = run(init, cfg, resolve_A(cfg, init, beta=1.0), 1.0, 50)
    assert check_energy_monotone(rec)


# --- lemma margins ------------------------------------------------------------


def test_margin_at_fixed_point_is_zero(grid8):
    z = SpectralField.zeros(grid8)
    assert lemma_z2_margin(z, z, 0.5, 0.1, 2.0) == 0.0
    assert lemma_z2p_margin(z, z, 0.5, 0.1, 2.0) == 0.0


@pytest.mark.parametrize("kind", ["ch", "mbe"])
@pytest.mark.parametrize("s_op", [1, 2])
def test_margin_nonnegative_after_compliant_step(kind, s_op, rng):
    grid = GridSpec(12)
    for tau in (1e-3, 0.1, 1.0):
        u = random_field(grid, rng, band=6, scale=0.8)
        cfg = ModelConfig(kind, 0.2)
        plan = resolve_A(cfg, u, beta=1.0, s_op=s_op)
        new, diag = step(StepperState(u, tau), cfg, plan)
        fn = lemma_z2_margin if kind == "ch" else lemma_z2p_margin
        m = fn(u, new.field, cfg.nu, tau, plan.A, s_op)
        scale = 1 + abs(energy(u, cfg))
        assert m >= -1e-10 * scale
        assert diag.lemma_margin == pytest.approx(m, rel=1e-9, abs=1e-10 * scale)


# --- discrete Gronwall ----------------------------------------------------------


def test_gronwall_examples():
    assert discrete_gronwall(1.0, [0, 0], [1, 1], 1.0, 2) == 3.0
    a, tau, m, y0 = 0.3, 0.01, 40, 2.5
    got = discrete_gronwall(y0, [a] * m, [0.0] * m, tau, m)
    assert abs(got - y0 * math.exp(m * tau * a)) <= 1e-14 * got


def test_gronwall_beats_brute_force_recursion():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        m = int(rng.integers(1, 60))
        tau = float(rng.uniform(1e-3, 0.5))
        a = rng.uniform(0, 3, m)
        b = rng.uniform(0, 3, m)
        y = y0 = float(rng.uniform(0, 5))
        for n in range(m):
            y = y + tau * (a[n] * y + b[n]) * rng.uniform(0, 1)
        assert y <= discrete_gronwall(y0, a, b, tau, m) * (1 + 1e-14)


def test_gronwall_validation():
    with pytest.raises(ValueError):
        discrete_gronwall(1.0, [-1.0], [0.0], 0.1, 1)
    with pytest.raises(ValueError):
        discrete_gronwall(1.0, [1.0], [0.0], 0.1, 2)
    with pytest.raises(ValueError):
        discrete_gronwall(1.0, [1.0], [0.0], 0.1, 0)


# --- log interpolation ----------------------------------------------------------


def test_log_interp_examples(grid8):
    assert log_interp_ratio(SpectralField.zeros(grid8)) == 0.0
    u = make_initial(SingleMode((1, 0), 1.0), grid8)
    want = 1.0 / (math.sqrt(2 * math.pi**2) * math.log(3 + 2 * math.pi))
    assert log_interp_ratio(u, 1.5) == pytest.approx(want, rel=1e-13)
    with pytest.raises(ValueError):
        log_interp_ratio(u, 1.0)


def test_log_interp_corpus_is_bounded():
    grid = GridSpec(16)
    ratios = [log_interp_ratio(make_initial(RandomBandlimited(seed=s, band=12), grid)) for s in range(100)]
    assert np.all(np.isfinite(ratios)) and max(ratios) < 1.0


# --- stability scan -------------------------------------------------------------


def test_scan_single_cell_matches_direct_run(grid8):
    init = make_initial(RandomBandlimited(seed=1, band=6), grid8)
    cfg = ModelConfig("ch", 0.3)
    res = stability_scan(cfg, init, [0.1], 30, A_list=[2.0])
    assert len(res.rows) == 1
    rec = run(init, cfg, StabilizationPlan(2.0), 0.1, 30)
    row = res.rows[0]
    assert row.final_energy == rec.energy[-1]
    assert row.monotone == bool(check_energy_monotone(rec))


def test_scan_compliant_and_unstabilized_rows():
    grid = GridSpec(32)
    init = make_initial(RandomBandlimited(seed=0, band=8), grid)
    cfg = ModelConfig("ch", 0.1)
    A_ok = resolve_A(cfg, init, beta=1.0).A
    res = stability_scan(cfg, init, [1.0], 200, A_list=[0.0, A_ok], workers=2)
    by_A = {r.A: r for r in res.rows}
    assert by_A[A_ok].monotone and by_A[A_ok].status == "ok"
    assert not by_A[0.0].monotone
    assert res.minimal_A() == {1.0: A_ok}


def test_scan_beta_list(grid8):
    init = make_initial(RandomBandlimited(seed=1, band=6), grid8)
    res = stability_scan(ModelConfig("mbe", 1.0), init, [0.01, 0.1], 20, beta_list=[0.5, 1.0])
    assert [r.tau for r in res.rows] == [0.01, 0.01, 0.1, 0.1]
    assert res.minimal_beta() == {0.01: 0.5, 0.1: 0.5}


def test_scan_validation(grid8):
    init = SpectralField.zeros(grid8)
    cfg = ModelConfig("ch", 1.0)
    with pytest.raises(ValueError):
        stability_scan(cfg, init, [], 5, A_list=[1.0])
    with pytest.raises(ValueError):
        stability_scan(cfg, init, [0.1], 5, A_list=[1.0], beta_list=[1.0])


# --- convergence ----------------------------------------------------------------


def test_fit_order_on_exact_power_law():
    h = [0.4, 0.2, 0.1, 0.05]
    order, r2 = fit_order(h, [3 * x**1.5 for x in h])
    assert order == pytest.approx(1.5, abs=1e-12) and r2 == pytest.approx(1.0)
    assert math.isnan(RateEstimate([0.1, 0.05], [1.0, 0.5]).fitted_order)


def test_temporal_rejects_degenerate_lists(grid8):
    init = make_initial(SingleMode((1, 0), 0.5), grid8)
    cfg = ModelConfig("ch", 0.5)
    with pytest.raises(ValueError):
        temporal_convergence(cfg, init, [1e-2, 1e-2, 1e-2], 0.1, StabilizationPlan(1.0))
    with pytest.raises(ValueError):
        temporal_convergence(cfg, init, [1e-2, 2e-2, 4e-2], 0.1, StabilizationPlan(1.0))
    with pytest.raises(ValueError):
        temporal_convergence(cfg, init, [3e-2, 2e-2, 1e-2], 0.1, StabilizationPlan(1.0))
    with pytest.raises(ValueError):
        temporal_convergence(cfg, init, [2e-2, 1e-2], 0.1, StabilizationPlan(1.0), reference="analytic")


def test_exact_linear_decay(grid8):
    u = make_initial(SingleMode((1, 1), 1.0), grid8)
    assert np.allclose(exact_linear(u, 0.5, 2.0).coeffs, math.exp(-0.5 * 4 * 2.0) * u.coeffs, rtol=1e-15)


def test_linear_problem_first_order(grid16):
    init = make_initial(RandomBandlimited(seed=0, band=4), grid16)
    cfg = ModelConfig("ch", 0.5, nonlinear=False)
    est = temporal_convergence(cfg, init, [4e-3, 2e-3, 1e-3, 5e-4], 0.1, StabilizationPlan(0.0), reference="analytic")
    assert est.fitted_order == pytest.approx(1.0, abs=0.02)
    assert est.r_squared > 0.999


def test_spatial_band_limited_linear_is_exact():
    cfg = ModelConfig("ch", 0.5, nonlinear=False)
    tab = spatial_convergence(cfg, [8, 12, 16], 1e-3, 1e-2, RandomBandlimited(seed=2, band=4), StabilizationPlan(1.0))
    assert max(tab.errors) <= 1e-12
    assert max(tab.errors) - min(tab.errors) <= 1e-12
    assert tab.superalgebraic is None


def test_spatial_single_N():
    tab = spatial_convergence(ModelConfig("ch", 0.5), [8], 1e-3, 2e-3, RandomBandlimited(seed=2, band=4), StabilizationPlan(1.0))
    assert len(tab.errors) == 1 and tab.local_orders == [] and tab.superalgebraic is None


def test_spatial_reference_must_be_finer():
    with pytest.raises(ValueError):
        spatial_convergence(ModelConfig("ch", 0.5), [8, 16], 1e-3, 1e-3, SingleMode(), StabilizationPlan(1.0), N_ref=16)


def test_studies_do_not_mutate_inputs(grid8):
    init = make_initial(RandomBandlimited(seed=3, band=5), grid8)
    before = init.coeffs.copy()
    temporal_convergence(ModelConfig("ch", 0.5), init, [2e-2, 1e-2], 0.04, StabilizationPlan(1.0))
    stability_scan(ModelConfig("ch", 0.5), init, [0.1], 3, A_list=[1.0])
    assert np.array_equal(init.coeffs, before)
