"""Per-step energy inequalities satisfied by consecutive scheme iterates.

For CH, with ``d = u^{n+1} - u^n``::

    E_{n+1} - E_n + A ||d||^2 + (1/2 + sqrt(2 nu / tau)) ||d||^2
        <= ||d||^2 (||u^n||_inf^2 + ||u^{n+1}||_inf^2 / 2)

and for MBE, with ``d = h^{n+1} - h^n``::

    E_{n+1} - E_n + (A + 1/2 + sqrt(2 nu / tau)) ||grad d||^2
        <= ||grad d||^2 * 3/2 * max(||grad h^n||_inf^2, ||grad h^{n+1}||_inf^2)

The margin is RHS - LHS. For ``s_op = 2`` the stabilizer contributes
``A || |grad|^{s_op - 1} d ||^2`` (CH) or ``A || |grad|^{s_op} d ||^2`` (MBE)
instead; with ``s_op = 1`` these are the terms above. Sup norms are grid
maxima; the inequalities still hold exactly because every integral involved
is a trig polynomial the grid integrates exactly.
"""

from __future__ import annotations

import math

import numpy as np

from ..models import ModelKind, energy_ch, energy_mbe, sup_norm
from ..spectral import AREA, SpectralField


def _weighted_sq(c: np.ndarray, ksq: np.ndarray, power: float) -> float:
    p = c.real**2 + c.imag**2
    if power == 0:
        return float(np.sum(p)) / AREA
    return float(np.sum(ksq**power * p)) / AREA


def margin_from_parts(
    kind: ModelKind,
    d_energy: float,
    d_coeffs: np.ndarray,
    ksq: np.ndarray,
    sup_n: float,
    sup_np1: float,
    nu: float,
    tau: float,
    A: float,
    s_op: int = 1,
) -> float:
    coupling = 0.5 + math.sqrt(2.0 * nu / tau)
    if ModelKind(kind) is ModelKind.CH:
        d_sq = _weighted_sq(d_coeffs, ksq, 0)
        stab_sq = d_sq if s_op == 1 else _weighted_sq(d_coeffs, ksq, s_op - 1)
        rhs = d_sq * (sup_n**2 + 0.5 * sup_np1**2)
    else:
        d_sq = _weighted_sq(d_coeffs, ksq, 1)
        stab_sq = d_sq if s_op == 1 else _weighted_sq(d_coeffs, ksq, s_op)
        rhs = d_sq * 1.5 * max(sup_n, sup_np1) ** 2
    lhs = d_energy + A * stab_sq + coupling * d_sq
    return rhs - lhs


def lemma_z2_margin(u_n: SpectralField, u_np1: SpectralField, nu: float, tau: float, A: float, s_op: int = 1) -> float:
    """Slack in the CH per-step inequality for iterates ``u_n -> u_np1``."""
    d = u_np1 - u_n
    return margin_from_parts(
        ModelKind.CH,
        energy_ch(u_np1, nu) - energy_ch(u_n, nu),
        d.coeffs,
        u_n.grid.ksq,
        sup_norm(u_n, ModelKind.CH),
        sup_norm(u_np1, ModelKind.CH),
        nu,
        tau,
        A,
        s_op,
    )


def lemma_z2p_margin(h_n: SpectralField, h_np1: SpectralField, nu: float, tau: float, A: float, s_op: int = 1) -> float:
    """Slack in the MBE per-step inequality for iterates ``h_n -> h_np1``."""
    d = h_np1 - h_n
    return margin_from_parts(
        ModelKind.MBE,
        energy_mbe(h_np1, nu) - energy_mbe(h_n, nu),
        d.coeffs,
        h_n.grid.ksq,
        sup_norm(h_n, ModelKind.MBE),
        sup_norm(h_np1, ModelKind.MBE),
        nu,
        tau,
        A,
        s_op,
    )
