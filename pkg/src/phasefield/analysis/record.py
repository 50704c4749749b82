from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

COLUMNS = ("step", "time", "energy", "mass", "linf", "diff_l2", "residual", "lemma_margin")


@dataclass
class RunRecord:
    """Per-step series of a run plus the initial state's energy and sup norm.

    Row ``i`` describes ``u^{i+1}``; ``initial_energy`` is ``E(u^0)``.
    """

    initial_energy: float
    initial_linf: float
    params: dict = field(default_factory=dict)
    rows: list[tuple] = field(default_factory=list)
    final: Any = None

    def append(self, diag) -> None:
        self.rows.append(
            (
                diag.step,
                diag.time,
                diag.energy_after,
                diag.mass,
                diag.linf_after,
                diag.diff_l2,
                diag.residual,
                diag.lemma_margin,
            )
        )

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = COLUMNS.index(name)
        dtype = np.int64 if name == "step" else np.float64
        return np.array([r[i] for r in self.rows], dtype=dtype)

    @property
    def energy(self) -> np.ndarray:
        return self.column("energy")

    @property
    def energies(self) -> np.ndarray:
        """``E_0, E_1, ..., E_n`` including the initial energy."""
        return np.concatenate([[self.initial_energy], self.energy])

    @property
    def time(self) -> np.ndarray:
        return self.column("time")

    @property
    def mass(self) -> np.ndarray:
        return self.column("mass")

    @property
    def lemma_margin(self) -> np.ndarray:
        return self.column("lemma_margin")

    @property
    def residual(self) -> np.ndarray:
        return self.column("residual")
