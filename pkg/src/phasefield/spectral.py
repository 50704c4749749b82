"""Fourier pseudospectral substrate on the 2D torus [0, 2pi)^2.

Coefficients follow the continuum convention

    fhat(k) = int f(x) exp(-i k.x) dx,    f(x) = (2pi)^-2 sum_k fhat(k) exp(i k.x),

so they do not depend on the grid size ``M`` and Parseval reads
``||f||_2^2 = (2pi)^-2 sum |fhat(k)|^2``. Arrays use the standard DFT layout:
``coeffs[i, j]`` holds the mode ``(k1, k2)`` with ``k1 = fftfreq(M)[i] * M``
along the first axis (x1) and likewise ``k2`` along the second (x2).
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

from . import _kernels

TWO_PI = 2.0 * math.pi
AREA = TWO_PI**2


class SpectralError(ValueError):
    """Base class for invalid spectral-field operations."""


class SymmetryError(SpectralError):
    """Coefficients do not describe a real-valued field."""


class MeanZeroError(SpectralError):
    """A singular multiplier was applied to a field with nonzero mean."""


class CapacityError(SpectralError):
    """Requested mode cutoff does not fit on the physical grid."""


class GridMismatchError(SpectralError):
    pass


class Cutoff(str, enum.Enum):
    BALL = "ball"  # |k| <= N
    SQUARE = "square"  # max(|k1|, |k2|) <= N


def fft_workers() -> int:
    """Worker count for transforms, from ``PHASEFIELD_THREADS`` (0 = auto)."""
    raw = os.environ.get("PHASEFIELD_THREADS", "0").strip() or "0"
    n = int(raw)
    return -1 if n <= 0 else n


def default_grid_size(N: int) -> int:
    """Smallest even size >= 4N + 4 that scipy.fft transforms quickly."""
    m = 4 * N + 4
    while True:
        m = sfft.next_fast_len(m)
        if m % 2 == 0:
            return m
        m += 1


@dataclass(frozen=True)
class GridSpec:
    """Mode cutoff ``N``, physical points ``M`` per axis, cutoff shape.

    ``M >= 4N + 2`` keeps the projection of cubic nonlinearities of band-``N``
    fields free of aliasing; it defaults to :func:`default_grid_size`.
    """

    N: int
    M: int = 0
    cutoff: Cutoff = Cutoff.BALL

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"mode cutoff N must be positive, got {self.N}")
        if self.M == 0:
            object.__setattr__(self, "M", default_grid_size(self.N))
        object.__setattr__(self, "cutoff", Cutoff(self.cutoff))
        if self.M % 2:
            raise ValueError(f"grid size M must be even, got {self.M}")
        if self.M < 4 * self.N + 2:
            raise ValueError(
                f"grid size M={self.M} too small for N={self.N}; need M >= 4N+2 = {4 * self.N + 2}"
            )

    @cached_property
    def k1(self) -> np.ndarray:
        return (sfft.fftfreq(self.M, 1.0 / self.M)).reshape(-1, 1)

    @cached_property
    def k2(self) -> np.ndarray:
        return (sfft.fftfreq(self.M, 1.0 / self.M)).reshape(1, -1)

    @cached_property
    def ksq(self) -> np.ndarray:
        return self.k1**2 + self.k2**2

    @cached_property
    def mask(self) -> np.ndarray:
        return cutoff_mask(self.M, self.N, self.cutoff)

    @cached_property
    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        x = TWO_PI * np.arange(self.M) / self.M
        return np.meshgrid(x, x, indexing="ij")

    @property
    def cell_area(self) -> float:
        return (TWO_PI / self.M) ** 2

    def with_N(self, N: int) -> "GridSpec":
        return GridSpec(N, 0, self.cutoff)


def cutoff_mask(M: int, N: int, cutoff: Cutoff | str = Cutoff.BALL) -> np.ndarray:
    if N >= M // 2:
        raise CapacityError(f"cutoff N={N} needs N < M/2 = {M // 2}")
    k = sfft.fftfreq(M, 1.0 / M)
    k1, k2 = k.reshape(-1, 1), k.reshape(1, -1)
    if Cutoff(cutoff) is Cutoff.BALL:
        return k1**2 + k2**2 <= N * N
    return np.maximum(np.abs(k1), np.abs(k2)) <= N


@dataclass
class SpectralField:
    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (self.grid.M, self.grid.M):
            raise ValueError(
                f"coefficient array shape {self.coeffs.shape} does not match grid M={self.grid.M}"
            )

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, np.zeros((grid.M, grid.M), dtype=np.complex128))

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    @property
    def mean_coeff(self) -> complex:
        return complex(self.coeffs[0, 0])

    def _check(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise GridMismatchError(f"grids differ: {self.grid} vs {other.grid}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)


@dataclass
class PhysicalField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.M, self.grid.M):
            raise ValueError(
                f"value array shape {self.values.shape} does not match grid M={self.grid.M}"
            )


def reflect(c: np.ndarray) -> np.ndarray:
    """Return ``c(-k)`` in DFT layout."""
    return np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1))


def hermitian_defect(c: np.ndarray) -> float:
    return float(np.max(np.abs(c - np.conj(reflect(c))))) if c.size else 0.0


def _analyze(v: np.ndarray) -> np.ndarray:
    """Physical samples -> exactly Hermitian coefficients."""
    M = v.shape[0]
    h = M // 2
    half = sfft.rfft2(v, norm="forward", workers=fft_workers()) * AREA
    c = np.empty((M, M), dtype=np.complex128)
    c[:, : h + 1] = half
    # mirrored columns k2 = -1 .. -(h-1) from k2 = 1 .. h-1
    c[:, h + 1 :] = np.conj(np.roll(np.flip(half[:, 1:h], axis=(0, 1)), 1, axis=0))
    # columns k2 = 0 and k2 = -M/2 map onto themselves; symmetrise them
    for j in (0, h):
        col = c[:, j]
        mirror = np.roll(col[::-1], 1)
        c[:, j] = 0.5 * (col + np.conj(mirror))
    return c


def _synthesize(c: np.ndarray) -> np.ndarray:
    """Hermitian coefficients -> physical samples (no symmetry check)."""
    M = c.shape[0]
    return sfft.irfft2(c[:, : M // 2 + 1], s=(M, M), norm="forward", workers=fft_workers()) / AREA


def l2_norm_coeffs(c: np.ndarray) -> float:
    return math.sqrt(float(np.sum(c.real**2 + c.imag**2)) / AREA)


def to_physical(f: SpectralField) -> PhysicalField:
    """Evaluate ``f`` at the grid nodes ``x_ij = (2pi i/M, 2pi j/M)``.

    Raises :class:`SymmetryError` if the inverse transform leaves an imaginary
    part larger than ``1e-12 * ||f||_2``.
    """
    full = sfft.ifft2(f.coeffs, norm="forward", workers=fft_workers()) / AREA
    scale = l2_norm_coeffs(f.coeffs)
    residue = float(np.max(np.abs(full.imag))) if full.size else 0.0
    if residue > 1e-12 * scale:
        raise SymmetryError(
            f"coefficients are not Hermitian: imaginary residue {residue:.3e} (||f||_2 = {scale:.3e})"
        )
    return PhysicalField(f.grid, np.ascontiguousarray(full.real))


def to_spectral(v: PhysicalField) -> SpectralField:
    if not np.all(np.isfinite(v.values)):
        raise ValueError("physical field has non-finite values")
    return SpectralField(v.grid, _analyze(v.values))


def project(f: SpectralField, N: int | None = None, cutoff: Cutoff | str | None = None) -> SpectralField:
    """Truncate ``f`` to the modes kept by the cutoff (defaults from the grid)."""
    N = f.grid.N if N is None else N
    cutoff = f.grid.cutoff if cutoff is None else cutoff
    if N == f.grid.N and Cutoff(cutoff) is f.grid.cutoff:
        mask = f.grid.mask
    else:
        mask = cutoff_mask(f.grid.M, N, cutoff)
    return SpectralField(f.grid, np.where(mask, f.coeffs, 0.0))


Symbol = Union[np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def apply_multiplier(f: SpectralField, sigma: Symbol) -> SpectralField:
    """Scale each coefficient by ``sigma(k)``.

    ``sigma`` is an array in DFT layout or a callable ``sigma(k1, k2)``. If
    ``sigma(0)`` is not finite the field must be mean-zero and the output
    mean is set to 0.
    """
    sym = sigma(f.grid.k1, f.grid.k2) if callable(sigma) else sigma
    sym = np.broadcast_to(np.asarray(sym), f.coeffs.shape)
    s0 = sym[0, 0]
    if np.isfinite(s0):
        return SpectralField(f.grid, f.coeffs * sym)
    if abs(f.coeffs[0, 0]) > 1e-12 * l2_norm_coeffs(f.coeffs):
        raise MeanZeroError(f"multiplier is singular at k=0 but coeff(0) = {f.coeffs[0, 0]}")
    with np.errstate(invalid="ignore"):
        out = f.coeffs * sym
    out[0, 0] = 0.0
    return SpectralField(f.grid, out)


def frac_symbol(grid: GridSpec, s: float) -> np.ndarray:
    """``|k|^s`` with ``inf`` at ``k = 0`` when ``s < 0``."""
    with np.errstate(divide="ignore"):
        return np.sqrt(grid.ksq) ** s


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, -f.grid.ksq * f.coeffs)


def bilaplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, f.grid.ksq**2 * f.coeffs)


def frac_laplacian(f: SpectralField, s: float) -> SpectralField:
    """``|nabla|^s f``; negative ``s`` requires mean-zero ``f``."""
    return apply_multiplier(f, frac_symbol(f.grid, s))


def _deriv_symbol(grid: GridSpec, axis: int) -> np.ndarray:
    k = (grid.k1 if axis == 0 else grid.k2).copy()
    k[k == -grid.M // 2] = 0.0  # Nyquist has no Hermitian-consistent derivative
    return 1j * k


def gradient(f: SpectralField) -> tuple[SpectralField, SpectralField]:
    return (
        SpectralField(f.grid, _deriv_symbol(f.grid, 0) * f.coeffs),
        SpectralField(f.grid, _deriv_symbol(f.grid, 1) * f.coeffs),
    )


def divergence(fx: SpectralField, fy: SpectralField) -> SpectralField:
    fx._check(fy)
    g = fx.grid
    return SpectralField(g, _deriv_symbol(g, 0) * fx.coeffs + _deriv_symbol(g, 1) * fy.coeffs)


def norm(f: SpectralField, kind: str = "l2", s: float | None = None) -> float:
    """Norm of ``f``.

    ``kind`` is one of ``"l2"``, ``"linf"``, ``"hdot1"``, ``"hs"``, ``"hdots"``.
    Sobolev norms carry the same ``(2pi)^-2`` factor as Parseval, so that
    ``norm(f, "hdot1") == ||grad f||_2``. ``"linf"`` is the maximum over the
    grid nodes, not the true supremum.
    """
    kind = kind.lower()
    c = f.coeffs
    power = c.real**2 + c.imag**2
    if kind == "l2":
        return math.sqrt(float(np.sum(power)) / AREA)
    if kind == "linf":
        return _kernels.max_abs(to_physical(f).values)
    if kind == "hdot1":
        return math.sqrt(float(np.sum(f.grid.ksq * power)) / AREA)
    if s is None:
        raise ValueError(f"norm kind {kind!r} needs an order s")
    if kind == "hdots":
        if s < 0 and power[0, 0] > 0:
            raise MeanZeroError("negative-order seminorm of a field with nonzero mean")
        w = frac_symbol(f.grid, 2 * s)
        w[0, 0] = 0.0 if s != 0 else 1.0
        return math.sqrt(float(np.sum(w * power)) / AREA)
    if kind == "hs":
        w = 1.0 + frac_symbol(f.grid, 2 * s)
        if s <= 0:
            w[0, 0] = 2.0 if s == 0 else 1.0
        return math.sqrt(float(np.sum(w * power)) / AREA)
    raise ValueError(f"unknown norm kind {kind!r}")


def inner(f: SpectralField, g: SpectralField) -> float:
    """L2 inner product ``(f, g)``."""
    f._check(g)
    z = np.vdot(g.coeffs, f.coeffs) / AREA
    return float(z.real)


def transfer(f: SpectralField, grid: GridSpec) -> SpectralField:
    """Re-embed coefficients on another grid, keeping ``|k_j| < min(M, M')/2``."""
    M_src, M_dst = f.grid.M, grid.M
    h = min(M_src, M_dst) // 2
    idx_src = np.r_[0:h, M_src - h + 1 : M_src]
    idx_dst = np.r_[0:h, M_dst - h + 1 : M_dst]
    out = np.zeros((M_dst, M_dst), dtype=np.complex128)
    out[np.ix_(idx_dst, idx_dst)] = f.coeffs[np.ix_(idx_src, idx_src)]
    return SpectralField(grid, out)
