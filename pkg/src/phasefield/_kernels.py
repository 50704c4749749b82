"""Pointwise and per-mode inner loops.

Two interchangeable implementations live here: ``numpy_impl`` (vectorised
numpy) and ``numba_impl`` (``@njit`` loops). The active one is bound to the
module-level names at import time. Set ``PHASEFIELD_NUMBA=0`` to force the
numpy path; numba is also skipped if it cannot be imported.

Both paths use the same operation order (``u*u*u - u`` and so on), so the
pointwise kernels agree bit for bit. Reductions (``quartic_well_sum``) may
differ in the last few ulps because numpy sums pairwise.
"""

import os
from types import SimpleNamespace

import numpy as np


def _cubic_np(u):
    return u * u * u - u


def _slope_cubic_np(zx, zy):
    w = zx * zx + zy * zy - 1.0
    return w * zx, w * zy


def _quartic_well_sum_np(u):
    w = u * u - 1.0
    return 0.25 * np.sum(w * w)


def _slope_well_sum_np(zx, zy):
    w = zx * zx + zy * zy - 1.0
    return 0.25 * np.sum(w * w)


def _semi_implicit_solve_np(uh, rhs_h, keep, lhs, tau):
    # keep = 1 + A tau |k|^(2s); lhs = 1 + nu tau |k|^4 + A tau |k|^(2s)
    num = keep * uh + tau * rhs_h
    # componentwise division; matches the compiled loop bit for bit
    out = np.empty_like(num)
    out.real = num.real / lhs
    out.imag = num.imag / lhs
    return out


def _max_abs_np(v):
    return float(np.max(np.abs(v))) if v.size else 0.0


numpy_impl = SimpleNamespace(
    name="numpy",
    cubic=_cubic_np,
    slope_cubic=_slope_cubic_np,
    quartic_well_sum=_quartic_well_sum_np,
    slope_well_sum=_slope_well_sum_np,
    semi_implicit_solve=_semi_implicit_solve_np,
    max_abs=_max_abs_np,
)


def _build_numba():
    from numba import njit

    @njit(cache=True)
    def cubic(u):
        out = np.empty_like(u)
        n0, n1 = u.shape
        for i in range(n0):
            for j in range(n1):
                x = u[i, j]
                out[i, j] = x * x * x - x
        return out

    @njit(cache=True)
    def slope_cubic(zx, zy):
        gx = np.empty_like(zx)
        gy = np.empty_like(zy)
        n0, n1 = zx.shape
        for i in range(n0):
            for j in range(n1):
                a = zx[i, j]
                b = zy[i, j]
                w = a * a + b * b - 1.0
                gx[i, j] = w * a
                gy[i, j] = w * b
        return gx, gy

    @njit(cache=True)
    def quartic_well_sum(u):
        acc = 0.0
        n0, n1 = u.shape
        for i in range(n0):
            for j in range(n1):
                x = u[i, j]
                w = x * x - 1.0
                acc += w * w
        return 0.25 * acc

    @njit(cache=True)
    def slope_well_sum(zx, zy):
        acc = 0.0
        n0, n1 = zx.shape
        for i in range(n0):
            for j in range(n1):
                a = zx[i, j]
                b = zy[i, j]
                w = a * a + b * b - 1.0
                acc += w * w
        return 0.25 * acc

    @njit(cache=True)
    def semi_implicit_solve(uh, rhs_h, keep, lhs, tau):
        out = np.empty_like(uh)
        n0, n1 = uh.shape
        for i in range(n0):
            for j in range(n1):
                z = keep[i, j] * uh[i, j] + tau * rhs_h[i, j]
                out[i, j] = complex(z.real / lhs[i, j], z.imag / lhs[i, j])
        return out

    return SimpleNamespace(
        name="numba",
        cubic=cubic,
        slope_cubic=slope_cubic,
        quartic_well_sum=quartic_well_sum,
        slope_well_sum=slope_well_sum,
        semi_implicit_solve=semi_implicit_solve,
        # a compiled loop with NaN propagation loses to numpy's reduction
        max_abs=_max_abs_np,
    )


try:
    numba_impl = _build_numba()
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None


def _select():
    flag = os.environ.get("PHASEFIELD_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "no", "off") or numba_impl is None:
        return numpy_impl
    return numba_impl


active = _select()
BACKEND = active.name

cubic = active.cubic
slope_cubic = active.slope_cubic
quartic_well_sum = active.quartic_well_sum
slope_well_sum = active.slope_well_sum
semi_implicit_solve = active.semi_implicit_solve
max_abs = active.max_abs
