from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..spectral import SpectralField, norm
from .record import RunRecord


@dataclass(frozen=True)
class MonotoneReport:
    passed: bool
    first_violation_step: int | None
    max_increase: float

    def __bool__(self) -> bool:
        return self.passed


def energy_tolerance(e0: float) -> float:
    return 1e-10 * max(1.0, abs(e0))


def check_energy_monotone(record: Union[RunRecord, Sequence[float]], tol: float | None = None) -> MonotoneReport:
    """Pass iff ``E_{n+1} <= E_n + tol`` for every step.

    ``record`` is a :class:`RunRecord` or the energy series ``E_0, E_1, ...``.
    The default tolerance is ``1e-10 * max(1, |E_0|)``. Step numbers in the
    report refer to the later index ``n+1``.
    """
    energies = record.energies if isinstance(record, RunRecord) else np.asarray(record, dtype=float)
    if energies.size == 0:
        raise ValueError("empty energy series")
    if tol is None:
        tol = energy_tolerance(float(energies[0]))
    inc = np.diff(energies)
    if inc.size == 0:
        return MonotoneReport(True, None, 0.0)
    bad = np.flatnonzero(~(inc <= tol))
    first = int(bad[0]) + 1 if bad.size else None
    max_inc = float(np.max(inc)) if np.all(np.isfinite(inc)) else math.inf
    return MonotoneReport(first is None, first, max(0.0, max_inc))


def discrete_gronwall(y0: float, alphas: Sequence[float], betas: Sequence[float], tau: float, m: int) -> float:
    """Bound on ``y_m`` given ``(y_{n+1} - y_n)/tau <= alpha_n y_n + beta_n``::

        exp(tau sum_{n<m} alpha_n) y0 + tau sum_{k<m} exp(tau sum_{k<j<m} alpha_j) beta_k
    """
    a = np.asarray(alphas, dtype=float)
    b = np.asarray(betas, dtype=float)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if a.size < m or b.size < m:
        raise ValueError(f"sequences must have length >= m={m}, got {a.size} and {b.size}")
    if y0 < 0 or tau <= 0 or np.any(a[:m] < 0) or np.any(b[:m] < 0):
        raise ValueError("inputs must be nonnegative and tau positive")
    a, b = a[:m], b[:m]
    growth = math.exp(tau * math.fsum(a)) * y0
    # tails[k] = sum_{j=k+1}^{m-1} alpha_j
    tails = np.concatenate([np.cumsum(a[::-1])[::-1][1:], [0.0]])
    return growth + tau * math.fsum(np.exp(tau * tails) * b)


def log_interp_ratio(f: SpectralField, s: float = 1.5) -> float:
    """``||f||_inf / (||f||_{Hdot^1} log(3 + ||f||_{H^s}))`` for mean-zero ``f``.

    The sup norm is the grid maximum. Returns 0 for the zero field.
    """
    if not s > 1:
        raise ValueError(f"interpolation order must exceed 1, got {s}")
    sup = norm(f, "linf")
    if sup == 0.0:
        return 0.0
    return sup / (norm(f, "hdot1") * math.log(3.0 + norm(f, "hs", s)))
