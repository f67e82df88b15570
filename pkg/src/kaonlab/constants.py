"""Unit systems and physical constants.

Two stock unit systems are provided:

* ``NATURAL`` -- hbar = 1, c = 1, used by the quantum-dynamics benchmarks.
* ``MEV_M_S`` -- energies in MeV, lengths in metres, times in seconds,
  used by the kaon / event-lab modules.

All numeric values here are external physical constants (CODATA / PDG),
adopted as overridable defaults.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """hbar and c in whatever unit system the caller works in."""

    hbar: float
    c: float

    def __post_init__(self):
        if self.hbar <= 0 or self.c <= 0:
            raise ValueError("physical constants must be strictly positive")


#: Natural units, hbar = m = 1 style quantum benchmarks.
NATURAL = PhysicalConstants(hbar=1.0, c=1.0)

#: MeV / metre / second system for the kaon pipeline.
MEV_M_S = PhysicalConstants(hbar=6.582119569e-22, c=2.99792458e8)

# Default particle properties (PDG values, MeV).
M_KAON_MEV = 497.611
M_PI_CHARGED_MEV = 139.570
M_PI_NEUTRAL_MEV = 134.9768

# Default kaon lifetimes (seconds) and mass splitting (MeV).
TAU_S_SEC = 1e-10
TAU_L_SEC = 5.12e-8
DELTA_M_MEV = 3.48e-12
