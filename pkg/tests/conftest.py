import numpy as np
import pytest

from kaonlab.events import BeamSpec
from kaonlab.kaon import KaonParams
from kaonlab.quantum import Grid1D, Potential, evolve_history, init_gaussian_packet


def free_gaussian_sigma(sigma0, t, hbar=1.0, mass=1.0):
    """Analytic free-Gaussian width, the oracle for spreading tests."""
    return sigma0 * np.sqrt(1.0 + (hbar * t / (2.0 * mass * sigma0**2)) ** 2)


def free_gaussian_velocity(x, t, sigma0=1.0, hbar=1.0, mass=1.0):
    """Analytic free-Gaussian velocity field hbar^2 t x / (4 m^2 s0^4 + hbar^2 t^2)."""
    return hbar**2 * t * x / (4.0 * mass**2 * sigma0**4 + hbar**2 * t**2)


@pytest.fixture(scope="session")
def benchmark_history():
    """Free Gaussian (hbar = m = sigma0 = 1) evolved to t = 2, every step kept."""
    grid = Grid1D(-15.0, 15.0, 1501)
    wf = init_gaussian_packet(grid, 0.0, 1.0, 0.0)
    return evolve_history(
        wf, Potential.free(grid), mass=1.0, dt=0.004, n_steps=500, store_every=1
    )


@pytest.fixture(scope="session")
def default_params():
    return KaonParams()


@pytest.fixture(scope="session")
def default_beam():
    return BeamSpec(
        source_position=np.zeros(3),
        direction=np.array([0.0, 0.0, 1.0]),
        kaon_momentum=10000.0,
    )
