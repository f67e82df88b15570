import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from conftest import free_gaussian_sigma, free_gaussian_velocity
from kaonlab.quantum import (
    BoundaryError,
    Grid1D,
    Potential,
    Wavefunction,
    continuity_residual,
    evolve,
    evolve_history,
    init_gaussian_packet,
    polar_decompose,
    probability_current,
    probability_density,
    rms_width,
)


def grid(n=801, half=10.0):
    return Grid1D(-half, half, n)


class TestGrid:
    def test_dx(self):
        g = Grid1D(0.0, 1.0, 11)
        assert g.dx == pytest.approx(0.1)
        assert len(g.x) == 11

    def test_rejects_tiny_or_inverted(self):
        with pytest.raises(ValueError):
            Grid1D(0.0, 1.0, 2)
        with pytest.raises(ValueError):
            Grid1D(1.0, 0.0, 10)


class TestGaussianPacket:
    def test_symmetric_real_positive(self):
        wf = init_gaussian_packet(grid(), 0.0, 1.0, 0.0)
        assert np.allclose(wf.amplitudes.imag, 0.0)
        assert np.all(wf.amplitudes.real > 0)
        assert np.allclose(wf.amplitudes, wf.amplitudes[::-1])
        assert wf.norm() == pytest.approx(1.0, abs=1e-12)

    def test_momentum_kick_only_changes_phase(self):
        wf0 = init_gaussian_packet(grid(), 0.0, 1.0, 0.0)
        wf5 = init_gaussian_packet(grid(), 0.0, 1.0, 5.0)
        assert np.allclose(
            probability_density(wf5), probability_density(wf0), atol=1e-14
        )
        polar = polar_decompose(wf5)
        x = wf5.grid.x
        ok = polar.phase_defined
        expected = 5.0 * (x[ok] - x[ok][0])
        assert np.allclose(polar.action[ok], expected, atol=1e-8)

    def test_boundary_rejection(self):
        with pytest.raises(BoundaryError):
            init_gaussian_packet(grid(), 8.0, 1.0, 0.0)

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            init_gaussian_packet(grid(), 0.0, -1.0, 0.0)


class TestEvolve:
    def test_single_step_unitary(self):
        g = grid()
        wf = init_gaussian_packet(g, 0.0, 1.0, 1.0)
        out = evolve(wf, Potential.free(g), 1.0, 1e-3, 1)
        assert out.norm() == pytest.approx(wf.norm(), abs=1e-12)

    def test_norm_drift_1000_steps(self):
        g = Grid1D(-15.0, 15.0, 1201)
        wf = init_gaussian_packet(g, 0.0, 1.0, 0.0)
        out = evolve(wf, Potential.free(g), 1.0, 2e-3, 1000)
        assert abs(out.norm() - wf.norm()) <= 1e-8

    @pytest.mark.parametrize("sigma0,t", [(1.0, 2.0), (0.5, 1.0), (2.0, 4.0)])
    def test_free_gaussian_spreading(self, sigma0, t):
        # analytic sigma(t) = sigma0 sqrt(1 + (t/2 sigma0^2)^2) is the oracle
        half = 8.0 * free_gaussian_sigma(sigma0, t) + 6.0 * sigma0
        g = Grid1D(-half, half, int(20 * half / min(sigma0, 1.0)) | 1)
        wf = init_gaussian_packet(g, 0.0, sigma0, 0.0)
        out = evolve(wf, Potential.free(g), 1.0, t / 500, 500)
        expected = free_gaussian_sigma(sigma0, t)
        assert rms_width(out) == pytest.approx(expected, rel=0.01)

    def test_harmonic_eigenstate_density_static(self):
        # oracle: diagonalize the same discrete Hamiltonian
        g = grid(n=601, half=8.0)
        pot = Potential.harmonic(g, mass=1.0, omega=1.0)
        dx = g.dx
        diag = 1.0 / dx**2 + pot.values
        off = np.full(g.n_points - 1, -0.5 / dx**2)
        energies, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
        wf = Wavefunction(g, vecs[:, 0].astype(complex)).normalize()
        period = 2.0 * np.pi / energies[0]
        out = evolve(wf, pot, 1.0, period / 2000, 2000)
        l1 = np.sum(np.abs(probability_density(out) - probability_density(wf))) * dx
        assert l1 < 1e-6

    def test_instability_reported_with_step(self):
        g = grid()
        wf = init_gaussian_packet(g, 0.0, 1.0, 0.0)
        with pytest.raises(ValueError, match="dt"):
            evolve(wf, Potential.free(g), 1.0, 1e3, 1)


class TestDensityAndCurrent:
    def test_density_normalization_and_positivity(self):
        wf = init_gaussian_packet(grid(), 0.0, 1.0, 3.0)
        rho = probability_density(wf)
        assert np.all(rho >= 0)
        assert np.trapezoid(rho, dx=wf.grid.dx) == pytest.approx(1.0, abs=1e-12)

    def test_plane_wave_flat_density(self):
        g = grid()
        wf = Wavefunction(g, np.exp(1j * 2.0 * g.x))
        assert np.allclose(probability_density(wf), 1.0, atol=1e-14)

    def test_zero_wavefunction(self):
        g = grid()
        wf = Wavefunction(g, np.zeros(g.n_points, dtype=complex))
        assert np.all(probability_density(wf) == 0.0)

    def test_real_packet_has_zero_current(self):
        wf = init_gaussian_packet(grid(), 0.0, 1.0, 0.0)
        assert np.max(np.abs(probability_current(wf, 1.0))) < 1e-12

    def test_plane_wave_current_ratio(self):
        g = grid(n=2001)
        k = 2.0
        wf = Wavefunction(g, np.exp(1j * k * g.x))
        ratio = probability_current(wf, 1.0)[1:-1] / probability_density(wf)[1:-1]
        # central differences give sin(k dx)/dx, an O(dx^2) defect
        assert np.allclose(ratio, k, rtol=(k * g.dx) ** 2)

    def test_plane_wave_current_refines_quadratically(self):
        k = 2.0
        errs = []
        for n in (501, 1001, 2001):
            g = grid(n=n)
            wf = Wavefunction(g, np.exp(1j * k * g.x))
            ratio = probability_current(wf, 1.0)[1:-1] / probability_density(wf)[1:-1]
            errs.append(np.max(np.abs(ratio - k)))
        assert errs[1] < errs[0] / 3.5
        assert errs[2] < errs[1] / 3.5

    def test_free_gaussian_current_value(self, benchmark_history):
        wf = benchmark_history[-1]  # t = 2
        rho = probability_density(wf)
        j = probability_current(wf, 1.0)
        v_at_2 = np.interp(2.0, wf.grid.x, j / rho)
        assert v_at_2 == pytest.approx(free_gaussian_velocity(2.0, 2.0), rel=1e-3)


class TestPolarDecompose:
    def test_plane_wave_readoff(self):
        g = grid()
        k = 1.5
        wf = Wavefunction(g, np.exp(1j * k * g.x))
        polar = polar_decompose(wf)
        assert np.allclose(polar.amplitude, 1.0, atol=1e-14)
        expected = k * (g.x - g.x[0])
        assert np.allclose(polar.action, expected, atol=1e-9)

    def test_real_positive_gaussian_zero_phase(self):
        wf = init_gaussian_packet(grid(), 0.0, 1.0, 0.0)
        polar = polar_decompose(wf)
        assert np.allclose(polar.action[polar.phase_defined], 0.0, atol=1e-12)

    def test_node_flagged_with_two_segments(self):
        g = grid(n=801)  # odd count, x = 0 on the grid
        psi = g.x * np.exp(-0.5 * g.x**2)
        wf = Wavefunction(g, psi.astype(complex)).normalize()
        polar = polar_decompose(wf, rho_floor=1e-30)
        mid = g.n_points // 2
        assert not polar.phase_defined[mid]
        assert len(polar.segments) == 2

    def test_round_trip(self):
        wf = init_gaussian_packet(grid(), 0.0, 1.0, 4.0)
        polar = polar_decompose(wf)
        rebuilt = polar.amplitude * np.exp(1j * polar.action)
        ok = polar.phase_defined
        # global phase anchored at the leftmost valid point
        anchor = wf.amplitudes[ok][0] / rebuilt[ok][0]
        assert np.allclose(rebuilt[ok] * anchor, wf.amplitudes[ok], atol=1e-10)


class TestContinuityResidual:
    def residual(self, dt, n_points):
        g = Grid1D(-15.0, 15.0, n_points)
        wf = init_gaussian_packet(g, 0.0, 1.0, 0.0)
        hist = evolve_history(wf, Potential.free(g), 1.0, dt, 2, store_every=1)
        return continuity_residual(hist[1], hist[2], 1.0)

    def test_converges_under_refinement(self):
        coarse = self.residual(0.004, 751)
        fine = self.residual(0.002, 1501)
        assert coarse < 1e-3
        assert fine < coarse / 2.0

    def test_stationary_state_near_zero(self):
        g = grid(n=601, half=8.0)
        pot = Potential.harmonic(g, 1.0, 1.0)
        dx = g.dx
        diag = 1.0 / dx**2 + pot.values
        off = np.full(g.n_points - 1, -0.5 / dx**2)
        _, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
        wf0 = Wavefunction(g, vecs[:, 0].astype(complex)).normalize()
        hist = evolve_history(wf0, pot, 1.0, 1e-3, 2, store_every=1)
        assert continuity_residual(hist[1], hist[2], 1.0) < 1e-8

    def test_detects_broken_evolution(self):
        g = grid()
        wf = init_gaussian_packet(g, 0.0, 1.0, 0.0)
        hist = evolve_history(wf, Potential.free(g), 1.0, 1e-3, 1)
        good = continuity_residual(hist[0], hist[1], 1.0)
        rng = np.random.default_rng(0)
        corrupted = Wavefunction(
            g,
            hist[1].amplitudes + 0.01 * rng.standard_normal(g.n_points),
            hist[1].time,
        )
        assert continuity_residual(hist[0], corrupted, 1.0) > 100 * good
