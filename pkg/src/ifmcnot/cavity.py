"""Lossless two-mirror Fabry-Perot cavity used as the conditional router.

The intracavity ion is modelled as a dispersive phase: in the excited state
it adds ``state_shift`` to the round-trip phase and detunes the cavity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CavityParams:
    r: float
    phi: float = 0.0
    state_shift: float = np.pi

    def __post_init__(self):
        if not 0.0 <= self.r < 1.0:
            raise ValueError(f"mirror amplitude reflectivity must lie in [0, 1), got {self.r}")
        if not (np.isfinite(self.phi) and np.isfinite(self.state_shift)):
            raise ValueError("cavity phases must be finite")


def airy_transmission(p: CavityParams, ion_excited: bool) -> tuple[float, float]:
    """Intensity transmission and reflection (T, R) of the cavity."""
    phase = p.phi + (p.state_shift if ion_excited else 0.0)
    a = (1.0 - p.r ** 2) ** 2
    t = a / (a + 4.0 * p.r ** 2 * np.sin(0.5 * phase) ** 2)
    return float(t), float(1.0 - t)


def routing_error(p: CavityParams) -> float:
    """Worst-branch leakage: max(1 - T_ground, 1 - R_excited)."""
    t_ground, _ = airy_transmission(p, False)
    _, r_excited = airy_transmission(p, True)
    return float(max(1.0 - t_ground, 1.0 - r_excited))
