"""Physical constants and unit conversions.

Single numerical source of truth for the package.  Everything internal is
SI with angular frequencies in rad/s; conversion helpers live here so that
non-SI inputs (Torr, GHz, mK, nm, ...) are converted once, on ingestion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

# Multiplicative conversion factors into internal units.
TORR_TO_PA = 101325.0 / 760.0
HZ_TO_RAD_S = TWO_PI
KHZ_TO_RAD_S = TWO_PI * 1e3
MHZ_TO_RAD_S = TWO_PI * 1e6
GHZ_TO_RAD_S = TWO_PI * 1e9
NM_TO_M = 1e-9
UM_TO_M = 1e-6
MK_TO_K = 1e-3
MS_TO_S = 1e-3
US_TO_S = 1e-6

STANDARD_GRAVITY = 9.80665  # m/s^2


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants (SI, angular frequencies in rad/s)."""

    hbar: float = 1.054571817e-34       # J s
    k_B: float = 1.380649e-23           # J/K
    mu_B: float = 9.2740100783e-24      # J/T
    g_NV: float = 2.0                   # electron g-factor of the NV spin
    D: float = GHZ_TO_RAD_S * 2.88      # zero-field splitting, rad/s
    g_local: float = STANDARD_GRAVITY   # m/s^2, configurable per site
    c: float = 299792458.0              # m/s
    torr_to_pa: float = TORR_TO_PA

    @property
    def d_hz(self) -> float:
        """Zero-field splitting expressed in ordinary Hz."""
        return self.D / TWO_PI

    @property
    def zeeman_rate(self) -> float:
        """|+1>-|-1> splitting per Tesla, rad/s/T (g_NV mu_B / hbar)."""
        return self.g_NV * self.mu_B / self.hbar


CONSTANTS = PhysicalConstants()
