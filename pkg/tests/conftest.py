import numpy as np
import pytest

from phasefield.spectral import GridSpec, SpectralField

ACCEPTANCE_LINES = []


def mirror(c):
    """c(-k) via explicit index arithmetic (kept independent of the package)."""
    M = c.shape[0]
    idx = (-np.arange(M)) % M
    return c[np.ix_(idx, idx)]


def random_field(grid, rng, band=None, mean_zero=True, scale=1.0):
    """Random real field with modes |k| <= band (default: the grid cutoff)."""
    M = grid.M
    c = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    c = 0.5 * (c + np.conj(mirror(c)))
    k = np.fft.fftfreq(M, 1.0 / M)
    band = grid.N if band is None else band
    inside = k[:, None] ** 2 + k[None, :] ** 2 <= band**2
    c = np.where(inside, c, 0.0) * scale * (2 * np.pi) ** 2 / max(1, band)
    if mean_zero:
        c[0, 0] = 0.0
    return SpectralField(grid, c)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid8():
    return GridSpec(8)


@pytest.fixture
def grid16():
    return GridSpec(16)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
