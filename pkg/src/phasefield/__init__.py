"""Stabilized semi-implicit Fourier-spectral solvers for the periodic 2D
Cahn-Hilliard and MBE (slope selection) equations."""

from ._kernels import BACKEND
from .spectral import Cutoff, GridSpec, PhysicalField, SpectralField
from .models import ModelConfig, ModelKind, StabilizationPlan, resolve_A
from .stepper import (
    DivergenceError,
    PoissonKernel,
    RandomBandlimited,
    SingleMode,
    StepperState,
    TwoMode,
    make_initial,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Cutoff",
    "DivergenceError",
    "GridSpec",
    "ModelConfig",
    "ModelKind",
    "PhysicalField",
    "PoissonKernel",
    "RandomBandlimited",
    "SingleMode",
    "SpectralField",
    "StabilizationPlan",
    "StepperState",
    "TwoMode",
    "make_initial",
    "resolve_A",
    "run",
]
