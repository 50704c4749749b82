"""Cahn-Hilliard and MBE (slope selection) models: nonlinearities, energies,
and the stabilization constant."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .spectral import (
    AREA,
    PhysicalField,
    SpectralField,
    _synthesize,
    gradient,
)


class ModelKind(str, enum.Enum):
    CH = "ch"
    MBE = "mbe"


@dataclass(frozen=True)
class ModelConfig:
    """Model selector and diffusion coefficient ``nu``.

    ``nonlinear=False`` drops the cubic term (``f = 0`` or ``g = 0``), which
    leaves the linear biharmonic problem with a closed-form solution; it is a
    diagnostic switch for convergence checks.
    """

    kind: ModelKind = ModelKind.CH
    nu: float = 1.0
    nonlinear: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")


@dataclass(frozen=True)
class StabilizationPlan:
    """Stabilization constant ``A`` applied as ``-A (-Delta)^s_op (u^{n+1} - u^n)``.

    ``beta`` is ``None`` when ``A`` was given directly rather than resolved
    from the stability bound.
    """

    A: float
    beta: float | None = None
    s_op: int = 1
    sup_norm: float | None = None

    def __post_init__(self):
        if self.A < 0 or not math.isfinite(self.A):
            raise ValueError(f"stabilization constant must be finite and >= 0, got {self.A}")
        if self.s_op not in (1, 2):
            raise ValueError(f"s_op must be 1 or 2, got {self.s_op}")


def f_ch(u: PhysicalField) -> PhysicalField:
    """``f(u) = u^3 - u`` pointwise."""
    return PhysicalField(u.grid, _kernels.cubic(np.ascontiguousarray(u.values)))


def g_mbe(p: tuple[PhysicalField, PhysicalField]) -> tuple[PhysicalField, PhysicalField]:
    """``g(z) = (|z|^2 - 1) z`` pointwise on a gradient pair."""
    px, py = p
    gx, gy = _kernels.slope_cubic(
        np.ascontiguousarray(px.values), np.ascontiguousarray(py.values)
    )
    return PhysicalField(px.grid, gx), PhysicalField(py.grid, gy)


def _grad_values(h: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    hx, hy = gradient(h)
    return _synthesize(hx.coeffs), _synthesize(hy.coeffs)


def energy_ch(u: SpectralField, nu: float) -> float:
    """``E(u) = int nu/2 |grad u|^2 + (u^2 - 1)^2 / 4 dx``.

    The gradient part is evaluated by Parseval. The potential is a quartic
    trig polynomial with modes up to 4N < M, so the grid quadrature is exact.
    """
    c = u.coeffs
    grad_sq = float(np.sum(u.grid.ksq * (c.real**2 + c.imag**2))) / AREA
    well = _kernels.quartic_well_sum(_synthesize(c)) * u.grid.cell_area
    return 0.5 * nu * grad_sq + float(well)


def energy_mbe(h: SpectralField, nu: float) -> float:
    """``E(h) = nu/2 ||Laplacian h||^2 + int (|grad h|^2 - 1)^2 / 4 dx``."""
    c = h.coeffs
    lap_sq = float(np.sum(h.grid.ksq**2 * (c.real**2 + c.imag**2))) / AREA
    hx, hy = _grad_values(h)
    well = _kernels.slope_well_sum(hx, hy) * h.grid.cell_area
    return 0.5 * nu * lap_sq + float(well)


def energy(field: SpectralField, config: ModelConfig) -> float:
    if config.kind is ModelKind.CH:
        return energy_ch(field, config.nu)
    return energy_mbe(field, config.nu)


def mass(u: SpectralField) -> float:
    """``int u dx``, which is the zero coefficient under our convention."""
    return float(u.coeffs[0, 0].real)


def sup_norm(field: SpectralField, kind: ModelKind | str) -> float:
    """Grid maximum of ``|u|`` (CH) or ``|grad h|`` (MBE)."""
    if ModelKind(kind) is ModelKind.CH:
        return _kernels.max_abs(_synthesize(field.coeffs))
    hx, hy = _grad_values(field)
    return float(np.sqrt(np.max(hx * hx + hy * hy)))


def stability_bound(sup: float, nu: float) -> float:
    """``||u0||_inf^2 + |log nu|^2 / nu + 1`` (natural log)."""
    return sup * sup + math.log(nu) ** 2 / nu + 1.0


def resolve_A(config: ModelConfig, init: SpectralField, beta: float = 1.0, s_op: int = 1) -> StabilizationPlan:
    """Stabilization constant from the unconditional-stability bound.

    ``A = beta * (S^2 + |log nu|^2 / nu + 1)`` where ``S`` is the sup norm of
    the initial field (CH) or of its gradient (MBE).
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    sup = sup_norm(init, config.kind)
    return StabilizationPlan(A=beta * stability_bound(sup, config.nu), beta=beta, s_op=s_op, sup_norm=sup)
