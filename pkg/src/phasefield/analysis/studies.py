"""Stability scans and temporal/spatial refinement studies.

Reference solutions are numerical: a 16x finer time step at the same ``N``
for temporal studies, and ``N_ref = 2 max(N_list)`` at the same time step for
spatial ones. The linear problem (``nonlinear=False``) can instead be checked
against its exact solution ``exp(-nu |k|^4 t)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import stepper as _stepper
from ..models import ModelConfig, ModelKind, StabilizationPlan, resolve_A
from ..spectral import CapacityError, GridSpec, SpectralField, norm, transfer
from .checks import check_energy_monotone, energy_tolerance


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))  # keeps parameter order


def error_norm(diff: SpectralField, kind: ModelKind) -> float:
    """L2 for CH, ``||grad .||_2`` for MBE."""
    return norm(diff, "l2" if ModelKind(kind) is ModelKind.CH else "hdot1")


# --- stability scan -------------------------------------------------------------


@dataclass(frozen=True)
class ScanRow:
    tau: float
    A: float
    beta: float | None
    monotone: bool
    first_violation: int | None
    final_energy: float
    status: str  # "ok", "increase" or "diverged"


@dataclass
class ScanResult:
    rows: list[ScanRow]

    def minimal_A(self) -> dict[float, float | None]:
        """Smallest monotone ``A`` for each ``tau`` (``None`` if none was)."""
        out: dict[float, float | None] = {}
        for r in self.rows:
            out.setdefault(r.tau, None)
            if r.monotone and (out[r.tau] is None or r.A < out[r.tau]):
                out[r.tau] = r.A
        return out

    def minimal_beta(self) -> dict[float, float | None]:
        out: dict[float, float | None] = {}
        for r in self.rows:
            out.setdefault(r.tau, None)
            if r.monotone and r.beta is not None and (out[r.tau] is None or r.beta < out[r.tau]):
                out[r.tau] = r.beta
        return out


def stability_scan(
    config: ModelConfig,
    init: SpectralField,
    tau_list: Sequence[float],
    n_steps: int,
    *,
    A_list: Sequence[float] | None = None,
    beta_list: Sequence[float] | None = None,
    s_op: int = 1,
    tol: float | None = None,
    workers: int = 1,
) -> ScanResult:
    """Run every ``(tau, A)`` cell and test energy monotonicity.

    Exactly one of ``A_list`` / ``beta_list`` is given; betas are turned into
    ``A`` through :func:`resolve_A`. Divergent cells are reported, not raised.
    """
    if (A_list is None) == (beta_list is None):
        raise ValueError("give exactly one of A_list or beta_list")
    if not tau_list:
        raise ValueError("tau_list is empty")
    if beta_list is not None:
        if not beta_list:
            raise ValueError("beta_list is empty")
        plans = [resolve_A(config, init, b, s_op) for b in beta_list]
    else:
        if not A_list:
            raise ValueError("A_list is empty")
        plans = [StabilizationPlan(A=float(a), s_op=s_op) for a in A_list]

    cells = [(float(t), p) for t in tau_list for p in plans]

    def one(cell):
        tau, plan = cell
        try:
            rec = _stepper.run(init, config, plan, tau, n_steps)
        except _stepper.DivergenceError as exc:
            return ScanRow(tau, plan.A, plan.beta, False, exc.step, math.nan, "diverged")
        rep = check_energy_monotone(rec, tol if tol is not None else energy_tolerance(rec.initial_energy))
        status = "ok" if rep.passed else "increase"
        return ScanRow(tau, plan.A, plan.beta, rep.passed, rep.first_violation_step, float(rec.energy[-1]), status)

    return ScanResult(_map(one, cells, workers))


# --- convergence ------------------------------------------------------------------


@dataclass
class RateEstimate:
    resolutions: list[float]
    errors: list[float]
    fitted_order: float = math.nan
    r_squared: float = math.nan

    def __post_init__(self):
        if len(self.resolutions) >= 3:
            self.fitted_order, self.r_squared = fit_order(self.resolutions, self.errors)


def fit_order(resolutions: Sequence[float], errors: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of log(error) against log(resolution), and r^2."""
    x = np.log(np.asarray(resolutions, dtype=float))
    e = np.asarray(errors, dtype=float)
    if len(x) < 3:
        raise ValueError("need at least 3 points for a rate fit")
    if np.any(e <= 0):
        return math.nan, math.nan
    y = np.log(e)
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def _steps_for(T: float, tau: float) -> int:
    n = round(T / tau)
    if n < 1 or abs(n * tau - T) > 1e-9 * T:
        raise ValueError(f"T_final={T} is not a multiple of tau={tau}")
    return n


def exact_linear(init: SpectralField, nu: float, t: float) -> SpectralField:
    """Exact solution ``exp(-nu |k|^4 t)`` of the linear (``f = 0``) problem."""
    return SpectralField(init.grid, np.exp(-nu * init.grid.ksq**2 * t) * init.coeffs)


def temporal_convergence(
    config: ModelConfig,
    init: SpectralField,
    tau_list: Sequence[float],
    T_final: float,
    plan: StabilizationPlan,
    *,
    reference: str = "numerical",
    ref_factor: int = 16,
    workers: int = 1,
) -> RateEstimate:
    """Error at ``T_final`` for each ``tau`` against a reference solution.

    ``reference="numerical"`` uses ``tau_ref = min(tau_list)/ref_factor``;
    ``"analytic"`` (linear problem only) uses the exact decay.
    """
    taus = [float(t) for t in tau_list]
    if len(taus) < 2 or len(set(taus)) != len(taus):
        raise ValueError("tau_list needs at least two distinct entries")
    if any(b >= a for a, b in zip(taus, taus[1:])):
        raise ValueError("tau_list must be decreasing")
    steps = [_steps_for(T_final, t) for t in taus]

    if reference == "analytic":
        if config.nonlinear:
            raise ValueError("analytic reference is only available for the linear problem")
        ref = exact_linear(init, config.nu, T_final)
    elif reference == "numerical":
        tau_ref = min(taus) / ref_factor
        ref = _stepper.evolve(init, config, plan, tau_ref, _steps_for(T_final, tau_ref))
    else:
        raise ValueError(f"unknown reference {reference!r}")

    def one(args):
        tau, n = args
        return error_norm(_stepper.evolve(init, config, plan, tau, n) - ref, config.kind)

    errors = _map(one, list(zip(taus, steps)), workers)
    return RateEstimate(taus, errors)


@dataclass
class SpatialTable:
    N_list: list[int]
    errors: list[float]
    N_ref: int
    floor: float
    local_orders: list[float] = field(default_factory=list)
    superalgebraic: bool | None = None

    def __post_init__(self):
        k = 0  # leading entries above the floor
        while k < len(self.errors) and self.errors[k] > self.floor:
            k += 1
        e, N = self.errors[:k], self.N_list[:k]
        self.local_orders = [math.log(e[i] / e[i + 1]) / math.log(N[i + 1] / N[i]) for i in range(k - 1)]
        if len(self.local_orders) >= 2:
            decreasing = all(b < a for a, b in zip(e, e[1:]))
            growing = all(q > p for p, q in zip(self.local_orders, self.local_orders[1:]))
            self.superalgebraic = decreasing and growing


def spatial_convergence(
    config: ModelConfig,
    N_list: Sequence[int],
    tau: float,
    T_final: float,
    init_kind,
    plan: StabilizationPlan,
    *,
    N_ref: int | None = None,
    cutoff: str = "ball",
    floor: float | None = None,
    workers: int = 1,
) -> SpatialTable:
    """Errors at ``T_final`` for each ``N`` against an ``N_ref`` run with the same ``tau``.

    ``init_kind`` is an initial-data description (see :func:`make_initial`); it
    is projected onto each grid, so ``u^0 = P_N u_0``. Local orders
    ``log(e_i/e_{i+1}) / log(N_{i+1}/N_i)`` are reported for errors above
    ``floor``; decay is called superalgebraic when they keep increasing.
    """
    Ns = [int(n) for n in N_list]
    if not Ns:
        raise ValueError("N_list is empty")
    N_ref = 2 * max(Ns) if N_ref is None else int(N_ref)
    if N_ref <= max(Ns):
        raise CapacityError(f"reference cutoff N_ref={N_ref} must exceed max(N_list)={max(Ns)}")
    n = _steps_for(T_final, tau)
    ref_grid = GridSpec(N_ref, 0, cutoff)
    ref = _stepper.evolve(_stepper.make_initial(init_kind, ref_grid), config, plan, tau, n)
    if floor is None:
        floor = 1e-12 * max(error_norm(ref, config.kind), 1.0)

    def one(N):
        g = GridSpec(N, 0, cutoff)
        u = _stepper.evolve(_stepper.make_initial(init_kind, g), config, plan, tau, n)
        return error_norm(transfer(u, ref_grid) - ref, config.kind)

    errors = _map(one, Ns, workers)
    return SpatialTable(Ns, errors, N_ref, floor)
