"""Verification tools: energy-decay checks, per-step lemma margins, the
discrete Gronwall bound, and refinement/stability studies."""

from .checks import MonotoneReport, check_energy_monotone, discrete_gronwall, energy_tolerance, log_interp_ratio
from .lemmas import lemma_z2_margin, lemma_z2p_margin
from .record import COLUMNS, RunRecord
from .studies import (
    RateEstimate,
    ScanResult,
    ScanRow,
    SpatialTable,
    exact_linear,
    fit_order,
    spatial_convergence,
    stability_scan,
    temporal_convergence,
)

__all__ = [
    "COLUMNS",
    "MonotoneReport",
    "RateEstimate",
    "RunRecord",
    "ScanResult",
    "ScanRow",
    "SpatialTable",
    "check_energy_monotone",
    "discrete_gronwall",
    "energy_tolerance",
    "exact_linear",
    "fit_order",
    "lemma_z2_margin",
    "lemma_z2p_margin",
    "log_interp_ratio",
    "spatial_convergence",
    "stability_scan",
    "temporal_convergence",
]
