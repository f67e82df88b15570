"""kaonlab: a desk-scale numerical laboratory for the neutral-kaon
CP-violation inference chain under the pilot-wave picture.

Subpackages cover 1D Schrodinger evolution, Bohmian trajectories, two-state
kaon dynamics, lab-frame decay Monte Carlo, linear-track vertex
reconstruction, and the wave-packet spreading error budget.
"""

__version__ = "0.1.0"
