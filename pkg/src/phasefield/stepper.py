"""Stabilized semi-implicit Fourier-spectral time stepping.

CH::

    (u^{n+1} - u^n)/tau = -nu Lap^2 u^{n+1} + A Lap (u^{n+1} - u^n) + Lap P_N f(u^n)

MBE::

    (h^{n+1} - h^n)/tau = -nu Lap^2 h^{n+1} + A Lap (h^{n+1} - h^n) + P_N div g(grad h^n)

Every linear operator is diagonal in Fourier space, so the implicit solve is
a per-mode division. ``s_op = 2`` swaps the stabilizer for ``-A Lap^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np

from . import _kernels
from .analysis.lemmas import margin_from_parts
from .analysis.record import RunRecord
from .models import ModelConfig, ModelKind, StabilizationPlan, energy, sup_norm
from .spectral import (
    AREA,
    GridSpec,
    SpectralField,
    _analyze,
    _deriv_symbol,
    _synthesize,
    l2_norm_coeffs,
    transfer,
)


class DivergenceError(RuntimeError):
    """Raised when an iterate blows up; carries the step index and partial record."""

    def __init__(self, step: int, reason: str, record: Optional[RunRecord] = None):
        super().__init__(f"diverged at step {step}: {reason}")
        self.step = step
        self.reason = reason
        self.record = record


@dataclass
class StepperState:
    field: SpectralField
    tau: float
    step: int = 0

    @property
    def time(self) -> float:
        return self.step * self.tau


@dataclass
class StepDiagnostics:
    step: int
    time: float
    energy_before: float
    energy_after: float
    diff_l2: float
    diff_grad_l2: float
    linf_before: float
    linf_after: float
    residual: float
    mass: float
    lemma_margin: float = math.nan


@lru_cache(maxsize=64)
def _symbols(grid: GridSpec, nu: float, A: float, s_op: int, tau: float):
    k2 = grid.ksq
    stab = A * k2**s_op
    keep = 1.0 + tau * stab
    lhs = keep + nu * tau * k2 * k2
    return np.ascontiguousarray(keep), np.ascontiguousarray(lhs)


def nonlinear_term(field: SpectralField, kind: ModelKind | str) -> np.ndarray:
    """Coefficients of ``Lap P_N f(u)`` (CH) or ``P_N div g(grad h)`` (MBE).

    The nonlinearity is evaluated on the padded grid, transformed, and then
    truncated; with ``M >= 4N + 2`` no mode of the cubic aliases into the band.
    """
    grid = field.grid
    c = field.coeffs
    if ModelKind(kind) is ModelKind.CH:
        fu = _kernels.cubic(_synthesize(c))
        return np.where(grid.mask, -grid.ksq * _analyze(fu), 0.0)
    ik1, ik2 = _deriv_symbol(grid, 0), _deriv_symbol(grid, 1)
    gx, gy = _kernels.slope_cubic(_synthesize(ik1 * c), _synthesize(ik2 * c))
    return np.where(grid.mask, ik1 * _analyze(gx) + ik2 * _analyze(gy), 0.0)


def scheme_residual(
    u_n: np.ndarray, u_np1: np.ndarray, rhs: np.ndarray, grid: GridSpec, nu: float, A: float, s_op: int, tau: float
) -> float:
    """L2 norm of ``(u1-u0)/tau + nu Lap^2 u1 + A(-Lap)^s (u1-u0) - rhs``."""
    d = u_np1 - u_n
    r = d / tau + nu * grid.ksq**2 * u_np1 + A * grid.ksq**s_op * d - rhs
    return l2_norm_coeffs(r)


def _advance(state: StepperState, config: ModelConfig, plan: StabilizationPlan, enforce_mass: bool):
    grid = state.field.grid
    tau = state.tau
    keep, lhs = _symbols(grid, config.nu, plan.A, plan.s_op, tau)
    c = state.field.coeffs
    if config.nonlinear:
        rhs = nonlinear_term(state.field, config.kind)
    else:
        rhs = np.zeros_like(c)
    new = _kernels.semi_implicit_solve(c, rhs, keep, lhs, tau)
    new = np.where(grid.mask, new, 0.0)
    if enforce_mass:
        new[0, 0] = 0.0
    if not np.all(np.isfinite(new)):
        raise DivergenceError(state.step + 1, "non-finite coefficient")
    return new, rhs


def step(
    state: StepperState,
    config: ModelConfig,
    plan: StabilizationPlan,
    *,
    enforce_mass: bool = True,
    energy_before: float | None = None,
    linf_before: float | None = None,
) -> tuple[StepperState, StepDiagnostics]:
    """Advance one step of the scheme selected by ``config.kind``.

    ``energy_before``/``linf_before`` may be passed to skip recomputing values
    already known from the previous step.
    """
    grid = state.field.grid
    new, rhs = _advance(state, config, plan, enforce_mass)
    nxt = StepperState(SpectralField(grid, new), state.tau, state.step + 1)
    if energy_before is None:
        energy_before = energy(state.field, config)
    if linf_before is None:
        linf_before = sup_norm(state.field, config.kind)
    e_after = energy(nxt.field, config)
    l_after = sup_norm(nxt.field, config.kind)
    d = new - state.field.coeffs
    p = d.real**2 + d.imag**2
    diff_l2 = math.sqrt(float(np.sum(p)) / AREA)
    diff_grad = math.sqrt(float(np.sum(grid.ksq * p)) / AREA)
    res = scheme_residual(state.field.coeffs, new, rhs, grid, config.nu, plan.A, plan.s_op, state.tau)
    margin = margin_from_parts(
        config.kind, e_after - energy_before, d, grid.ksq, linf_before, l_after, config.nu, state.tau, plan.A, plan.s_op
    )
    diag = StepDiagnostics(
        step=nxt.step,
        time=nxt.time,
        energy_before=energy_before,
        energy_after=e_after,
        diff_l2=diff_l2,
        diff_grad_l2=diff_grad,
        linf_before=linf_before,
        linf_after=l_after,
        residual=res,
        mass=float(new[0, 0].real),
        lemma_margin=margin,
    )
    return nxt, diag


def step_ch(state: StepperState, nu: float, plan: StabilizationPlan, **kw):
    return step(state, ModelConfig(ModelKind.CH, nu), plan, **kw)


def step_mbe(state: StepperState, nu: float, plan: StabilizationPlan, **kw):
    return step(state, ModelConfig(ModelKind.MBE, nu), plan, **kw)


def run(
    init: SpectralField,
    config: ModelConfig,
    plan: StabilizationPlan,
    tau: float,
    n_steps: int,
    observer: Callable[[StepDiagnostics], None] | None = None,
    *,
    enforce_mass: bool = True,
    params: dict | None = None,
    blowup_factor: float = 1e12,
    on_state: Callable[[StepperState], None] | None = None,
) -> RunRecord:
    """Apply ``n_steps`` steps from ``init``.

    ``observer`` receives each step's diagnostics; ``on_state`` receives each
    new state (used for snapshots).

    Aborts with :class:`DivergenceError` (carrying the partial record) on a
    non-finite iterate or energy above ``blowup_factor * max(1, E(u^0))``.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    e0 = energy(init, config)
    l0 = sup_norm(init, config.kind)
    snapshot = {
        "model": config.kind.value,
        "nu": config.nu,
        "nonlinear": config.nonlinear,
        "N": init.grid.N,
        "M": init.grid.M,
        "cutoff": init.grid.cutoff.value,
        "tau": tau,
        "steps": n_steps,
        "A": plan.A,
        "beta": plan.beta,
        "s_op": plan.s_op,
    }
    snapshot.update(params or {})
    record = RunRecord(initial_energy=e0, initial_linf=l0, params=snapshot)
    limit = blowup_factor * max(1.0, abs(e0))
    state = StepperState(init, tau)
    e_prev, l_prev = e0, l0
    for _ in range(n_steps):
        try:
            state, diag = step(state, config, plan, enforce_mass=enforce_mass, energy_before=e_prev, linf_before=l_prev)
        except DivergenceError as exc:
            exc.record = record
            raise
        if not math.isfinite(diag.energy_after) or diag.energy_after > limit:
            raise DivergenceError(diag.step, f"energy {diag.energy_after:.3e} exceeds limit", record)
        record.append(diag)
        if observer is not None:
            observer(diag)
        if on_state is not None:
            on_state(state)
        e_prev, l_prev = diag.energy_after, diag.linf_after
    record.final = state.field
    return record


def evolve(init: SpectralField, config: ModelConfig, plan: StabilizationPlan, tau: float, n_steps: int) -> SpectralField:
    """Final iterate only, without diagnostics."""
    state = StepperState(init, tau)
    for _ in range(n_steps):
        new, _ = _advance(state, config, plan, True)
        state = StepperState(SpectralField(init.grid, new), tau, state.step + 1)
    return state.field


# --- initial data -------------------------------------------------------------


@dataclass(frozen=True)
class RandomBandlimited:
    """Independent Gaussian coefficients on ``0 < |k| <= band``, rescaled so
    the sup norm equals ``amplitude``.

    The sup norm is measured on a fixed band-dependent grid, so the same
    function is produced on every grid with ``N >= band``. With
    ``normalize="gradient"`` it is ``max |grad u|`` that is scaled instead
    (the natural choice for MBE heights).
    """

    seed: int = 0
    amplitude: float = 1.0
    band: int = 8
    normalize: str = "value"


@dataclass(frozen=True)
class SingleMode:
    """``amplitude * sin(k . x)``."""

    k: tuple[int, int] = (1, 0)
    amplitude: float = 1.0


@dataclass(frozen=True)
class TwoMode:
    """``a * sin(k_a . x) + b * cos(k_b . x)``."""

    k_a: tuple[int, int] = (1, 0)
    k_b: tuple[int, int] = (0, 2)
    a: float = 1.0
    b: float = 0.5


@dataclass(frozen=True)
class PoissonKernel:
    """Analytic, not band-limited: ``P_r(x1) P_r(x2 - shift) - 1`` scaled to
    sup norm ``amplitude``; coefficients decay like ``r^(|k1|+|k2|)``."""

    r: float = 0.55
    amplitude: float = 0.5
    shift: float = 1.0


InitKind = Union[RandomBandlimited, SingleMode, TwoMode, PoissonKernel]


def _put_mode(c: np.ndarray, k: tuple[int, int], value: complex) -> None:
    M = c.shape[0]
    c[k[0] % M, k[1] % M] += value
    c[(-k[0]) % M, (-k[1]) % M] += np.conj(value)


def _mode_allowed(grid: GridSpec, k) -> bool:
    k1, k2 = k
    if grid.cutoff.value == "ball":
        return k1 * k1 + k2 * k2 <= grid.N**2
    return max(abs(k1), abs(k2)) <= grid.N


def _random_coeffs(kind: RandomBandlimited, M: int) -> np.ndarray:
    b = kind.band
    rng = np.random.default_rng(kind.seed)
    draws = rng.standard_normal((2 * b + 1, 2 * b + 1, 2))
    c = np.zeros((M, M), dtype=np.complex128)
    for i, k1 in enumerate(range(-b, b + 1)):
        for j, k2 in enumerate(range(-b, b + 1)):
            upper_half = k1 > 0 or (k1 == 0 and k2 > 0)
            if upper_half and k1 * k1 + k2 * k2 <= b * b:
                _put_mode(c, (k1, k2), complex(draws[i, j, 0], draws[i, j, 1]))
    return c


def make_initial(kind: InitKind, grid: GridSpec) -> SpectralField:
    """Mean-zero, Hermitian initial field supported in the grid's cutoff set."""
    M = grid.M
    c = np.zeros((M, M), dtype=np.complex128)
    if isinstance(kind, RandomBandlimited):
        if not 1 <= kind.band <= grid.N:
            raise ValueError(f"band must lie in [1, N={grid.N}], got {kind.band}")
        M_ref = 8 * kind.band + 8
        raw = SpectralField(GridSpec(kind.band, M_ref), _random_coeffs(kind, M_ref))
        if kind.normalize == "value":
            peak = sup_norm(raw, ModelKind.CH)
        elif kind.normalize == "gradient":
            peak = sup_norm(raw, ModelKind.MBE)
        else:
            raise ValueError(f"normalize must be 'value' or 'gradient', got {kind.normalize!r}")
        scale = kind.amplitude / peak if peak > 0 else 0.0
        out = transfer(raw * scale, grid).coeffs
    elif isinstance(kind, SingleMode):
        if not _mode_allowed(grid, kind.k) or tuple(kind.k) == (0, 0):
            raise ValueError(f"mode {kind.k} is zero or outside the cutoff set")
        # sin(k.x) = (e^{ik.x} - e^{-ik.x}) / 2i
        _put_mode(c, kind.k, -0.5j * AREA * kind.amplitude)
        out = c
    elif isinstance(kind, TwoMode):
        for k in (kind.k_a, kind.k_b):
            if not _mode_allowed(grid, k) or tuple(k) == (0, 0):
                raise ValueError(f"mode {k} is zero or outside the cutoff set")
        _put_mode(c, kind.k_a, -0.5j * AREA * kind.a)
        _put_mode(c, kind.k_b, 0.5 * AREA * kind.b)
        out = c
    elif isinstance(kind, PoissonKernel):
        if not 0 < kind.r < 1:
            raise ValueError(f"r must lie in (0, 1), got {kind.r}")
        r = kind.r
        peak = ((1 + r) / (1 - r)) ** 2 - 1.0
        k1, k2 = grid.k1, grid.k2
        out = AREA * r ** (np.abs(k1) + np.abs(k2)) * np.exp(-1j * k2 * kind.shift) * (kind.amplitude / peak)
        out = out.astype(np.complex128)
    else:
        raise TypeError(f"unknown initial-data kind {kind!r}")
    out = np.where(grid.mask, out, 0.0)
    out[0, 0] = 0.0
    return SpectralField(grid, out)
