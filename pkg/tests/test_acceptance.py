"""End-to-end acceptance checks, one test per criterion.

Each test appends a PASS/FAIL line that is printed in the pytest summary
(see conftest.py) and then asserts, so a failing criterion fails the suite.
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from phasefield.analysis import (
    check_energy_monotone,
    discrete_gronwall,
    energy_tolerance,
    spatial_convergence,
    stability_scan,
    temporal_convergence,
)
from phasefield.cli import main
from phasefield.models import ModelConfig, StabilizationPlan, energy, f_ch, g_mbe, resolve_A
from phasefield.spectral import (
    GridSpec,
    SpectralField,
    apply_multiplier,
    divergence,
    frac_symbol,
    gradient,
    inner,
    laplacian,
    norm,
    project,
    to_physical,
    to_spectral,
)
from phasefield.stepper import PoissonKernel, RandomBandlimited, StepperState, make_initial, run, step

from conftest import ACCEPTANCE_LINES, random_field

TAUS = [1e-3, 1e-2, 1e-1, 1.0]
NUS = [1.0, 0.1]
BETAS = [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0]
STEPS = 500

pytestmark = pytest.mark.slow


def report(num, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def stability_init(kind):
    normalize = "value" if kind == "ch" else "gradient"
    return make_initial(RandomBandlimited(seed=0, amplitude=1.0, band=8, normalize=normalize), GridSpec(32))


def stability_campaign(kind):
    """Scan beta, pick the smallest one stable on the whole tau ladder, rerun it
    (and beta = 1) with full records."""
    init = stability_init(kind)
    out = {}
    for nu in NUS:
        cfg = ModelConfig(kind, nu)
        scan = stability_scan(cfg, init, TAUS, STEPS, beta_list=BETAS)
        ok_for_all = [b for b in BETAS if all(r.monotone for r in scan.rows if r.beta == b)]
        beta_star = min(ok_for_all) if ok_for_all else None
        runs = []
        for beta in sorted({b for b in (beta_star, 1.0) if b is not None}):
            plan = resolve_A(cfg, init, beta)
            for tau in TAUS:
                runs.append((beta, tau, run(init, cfg, plan, tau, STEPS)))
        out[nu] = {"scan": scan, "beta_star": beta_star, "runs": runs}
    return out


@pytest.fixture(scope="module")
def ch_campaign():
    return stability_campaign("ch")


@pytest.fixture(scope="module")
def mbe_campaign():
    return stability_campaign("mbe")


def _stability_verdict(campaign):
    worst, parts, ok = -math.inf, [], True
    for nu, c in campaign.items():
        ok &= c["beta_star"] is not None
        edge = "<=" if c["beta_star"] == BETAS[0] else "="
        parts.append(f"nu={nu}: beta*{edge}{c['beta_star']:g}" if c["beta_star"] else f"nu={nu}: no stable beta")
        for beta, tau, rec in c["runs"]:
            tol = energy_tolerance(rec.initial_energy)
            inc = float(np.max(np.diff(rec.energies)))
            worst = max(worst, inc / tol)
            ok &= bool(check_energy_monotone(rec)) and len(rec) >= STEPS
    return ok, "; ".join(parts) + f"; max increase/tol = {worst:.2e}"


def test_criterion_01_ch_energy_stability(ch_campaign, tmp_path_factory):
    ok, detail = _stability_verdict(ch_campaign)
    _record_betas("ch", ch_campaign, tmp_path_factory)
    report(1, "CH unconditional energy decay", ok, detail)


def test_criterion_02_mbe_energy_stability(mbe_campaign, tmp_path_factory):
    ok, detail = _stability_verdict(mbe_campaign)
    _record_betas("mbe", mbe_campaign, tmp_path_factory)
    report(2, "MBE unconditional energy decay", ok, detail)


def _record_betas(kind, campaign, factory):
    path = Path(factory.getbasetemp()) / f"beta_star_{kind}.json"
    path.write_text(json.dumps({str(nu): c["beta_star"] for nu, c in campaign.items()}))


def test_criterion_03_mass(ch_campaign, mbe_campaign):
    worst_on = 0.0
    for campaign in (ch_campaign, mbe_campaign):
        for c in campaign.values():
            for _, _, rec in c["runs"]:
                worst_on = max(worst_on, float(np.max(np.abs(rec.mass))))
    worst_off, worst_drift = 0.0, 0.0
    for kind in ("ch", "mbe"):
        init = stability_init(kind)
        cfg = ModelConfig(kind, 0.1)
        for tau in TAUS:
            rec = run(init, cfg, resolve_A(cfg, init, 1.0), tau, STEPS, enforce_mass=False)
            m = np.r_[0.0, rec.mass]
            worst_off = max(worst_off, float(np.max(np.abs(m))))
            worst_drift = max(worst_drift, float(np.max(np.abs(np.diff(m)))))
    ok = worst_on == 0.0 and worst_off <= 1e-12 and worst_drift <= 1e-13
    report(3, "mass conservation", ok, f"enforced max |mass| = {worst_on:.1e}; free max |mass| = {worst_off:.1e}, drift/step = {worst_drift:.1e}")


def _oracle_rhs(u, kind):
    if kind == "ch":
        return laplacian(project(to_spectral(f_ch(to_physical(u))))).coeffs
    gx, gy = gradient(u)
    Gx, Gy = g_mbe((to_physical(gx), to_physical(gy)))
    return project(divergence(to_spectral(Gx), to_spectral(Gy))).coeffs


def test_criterion_04_residual():
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(100):
        kind = ["ch", "mbe"][rng.integers(2)]
        grid = GridSpec(int(rng.choice([8, 12, 16])))
        nu = 10 ** rng.uniform(-2, 0)
        tau = 10 ** rng.uniform(-4, 0)
        A = rng.uniform(0, 10)
        s_op = int(rng.integers(1, 3))
        u = random_field(grid, rng, scale=rng.uniform(0.1, 1.5))
        new, diag = step(StepperState(u, tau), ModelConfig(kind, nu), StabilizationPlan(A, s_op=s_op))
        d = new.field.coeffs - u.coeffs
        r = d / tau + nu * grid.ksq**2 * new.field.coeffs + A * grid.ksq**s_op * d - _oracle_rhs(u, kind)
        bound = 1e-10 * (1 + norm(new.field) / tau)
        worst = max(worst, norm(SpectralField(grid, r)) / bound, diag.residual / bound)
    report(4, "one-step residual", worst <= 1.0, f"max residual/bound = {worst:.2e} over 100 draws")


def test_criterion_05_temporal_order():
    grid = GridSpec(32)
    taus = [4e-3, 2e-3, 1e-3, 5e-4]
    parts, ok = [], True
    for kind in ("ch", "mbe"):
        normalize = "value" if kind == "ch" else "gradient"
        init = make_initial(RandomBandlimited(seed=0, amplitude=1.0, band=4, normalize=normalize), grid)
        cfg = ModelConfig(kind, 0.5)
        est = temporal_convergence(cfg, init, taus, 0.1, resolve_A(cfg, init, 1.0), ref_factor=16)
        ok &= abs(est.fitted_order - 1.0) <= 0.15
        parts.append(f"{kind} {est.fitted_order:.3f}")
        lin = ModelConfig(kind, 0.5, nonlinear=False)
        est = temporal_convergence(lin, init, taus, 0.1, resolve_A(lin, init, 1.0), reference="analytic")
        ok &= abs(est.fitted_order - 1.0) <= 0.02
        parts.append(f"{kind}-linear {est.fitted_order:.4f}")
    report(5, "first-order temporal convergence", ok, ", ".join(parts))


def test_criterion_06_spatial_accuracy():
    kind = PoissonKernel(r=0.6, amplitude=0.5)
    cfg = ModelConfig("ch", 0.5)
    plan = resolve_A(cfg, make_initial(kind, GridSpec(64)), 1.0)
    tab = spatial_convergence(cfg, [8, 16, 24, 32], 1e-5, 1e-4, kind, plan)
    errs = ", ".join(f"{e:.2e}" for e in tab.errors)
    orders = ", ".join(f"{q:.2f}" for q in tab.local_orders)
    report(6, "superalgebraic spatial decay", bool(tab.superalgebraic), f"errors [{errs}], local orders [{orders}]")


def test_criterion_07_lemma_margins(ch_campaign, mbe_campaign):
    worst = math.inf
    for campaign in (ch_campaign, mbe_campaign):
        for c in campaign.values():
            for _, _, rec in c["runs"]:
                scale = 1.0 + abs(rec.initial_energy)
                worst = min(worst, float(np.min(rec.lemma_margin)) / scale)
    report(7, "per-step lemma margins", worst >= -1e-10, f"min margin/(1+E0) = {worst:.2e}")


def test_criterion_08_gronwall():
    rng = np.random.default_rng(808)
    violations, worst_eq = 0, 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 100))
        tau = 10 ** rng.uniform(-3, 0)
        a, b = rng.uniform(0, 2, m), rng.uniform(0, 2, m)
        y = y0 = rng.uniform(0, 3)
        for n in range(m):
            y = y + tau * (a[n] * y + b[n])
        if y > discrete_gronwall(y0, a, b, tau, m):
            violations += 1
        zero = np.zeros(m)
        want = y0 + tau * math.fsum(b)
        worst_eq = max(worst_eq, abs(discrete_gronwall(y0, zero, b, tau, m) - want) / want)
        want = y0 * math.exp(tau * math.fsum(a))
        if want > 0:
            worst_eq = max(worst_eq, abs(discrete_gronwall(y0, a, zero, tau, m) - want) / want)
    ok = violations == 0 and worst_eq <= 1e-14
    report(8, "discrete Gronwall bound", ok, f"{violations} violations in 1000; closed-form rel. error {worst_eq:.1e}")


def test_criterion_09_spectral_core():
    rng = np.random.default_rng(909)
    worst = {"round trip": 0.0, "idempotence": 0.0, "self-adjoint": 0.0, "parseval": 0.0, "composition": 0.0}
    for i in range(100):
        grid = GridSpec([8, 12, 16][i % 3], 0, ["ball", "square"][i % 2])
        f = random_field(grid, rng, mean_zero=False)
        g = SpectralField(grid, to_spectral(to_physical(random_field(grid, rng, band=grid.M // 2 - 1))).coeffs)
        h = SpectralField(grid, to_spectral(to_physical(random_field(grid, rng, band=grid.M // 2 - 1))).coeffs)
        back = to_spectral(to_physical(f)).coeffs
        worst["round trip"] = max(worst["round trip"], np.max(np.abs(back - f.coeffs)) / np.max(np.abs(f.coeffs)))
        p = project(g)
        worst["idempotence"] = max(worst["idempotence"], float(np.max(np.abs(project(p).coeffs - p.coeffs))))
        sa = abs(inner(p, h) - inner(g, project(h))) / (norm(g) * norm(h))
        worst["self-adjoint"] = max(worst["self-adjoint"], sa / 1e-12)
        quad = math.sqrt(np.sum(to_physical(f).values ** 2) * grid.cell_area)
        worst["parseval"] = max(worst["parseval"], abs(norm(f) - quad) / norm(f) / 1e-10)
        s1, s2 = rng.uniform(-2, 3, 2)
        z = random_field(grid, rng)
        two = apply_multiplier(apply_multiplier(z, frac_symbol(grid, s1)), frac_symbol(grid, s2)).coeffs
        one = apply_multiplier(z, frac_symbol(grid, s1 + s2)).coeffs
        worst["composition"] = max(worst["composition"], np.max(np.abs(two - one)) / np.max(np.abs(one)) / 1e-13)
    worst["round trip"] /= 1e-12
    ok = worst["idempotence"] == 0.0 and all(v <= 1.0 for k, v in worst.items() if k != "idempotence")
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (ratios to tolerance; idempotence absolute)"
    report(9, "spectral core on 100 fields", ok, detail)


def test_criterion_10_determinism(tmp_path):
    outs = []
    for name in ("first", "second"):
        d = tmp_path / name
        code_run = main(["run", "--N", "32", "--steps", "100", "--seed", "42", "--out-dir", str(d)])
        code_scan = main(["stability-scan", "--N", "16", "--taus", "0.1,1", "--betas", "0.1,1", "--steps", "50", "--out-dir", str(d)])
        outs.append(((d / "energy.csv").read_bytes(), (d / "scan.csv").read_bytes(), code_run, code_scan))
    ok = outs[0] == outs[1] and outs[0][2] == 0 and outs[0][3] == 0
    report(10, "byte-identical CSV outputs", ok, f"energy.csv {len(outs[0][0])} bytes, scan.csv {len(outs[0][1])} bytes")
