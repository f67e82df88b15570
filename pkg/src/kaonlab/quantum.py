"""1D wavefunctions on a grid: Gaussian packets, Crank-Nicolson evolution,
density, probability current, polar form, and a continuity-equation residual.

The time stepper is Crank-Nicolson with Dirichlet (psi = 0) boundaries; the
domain must be large enough that the packet never reaches the edges.  Norm
preservation and boundary leakage are monitored every step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .constants import NATURAL, PhysicalConstants


class BoundaryError(ValueError):
    """Packet support touches or leaks into the Dirichlet boundary."""


class NumericalInstabilityError(RuntimeError):
    """Evolution violated its norm-conservation tolerance."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform spatial grid on [x_min, x_max] with n_points nodes."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError(f"n_points must be >= 3, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass(frozen=True)
class Potential:
    """Real potential V(x) sampled on a grid."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)

    @staticmethod
    def free(grid: Grid1D) -> "Potential":
        return Potential(np.zeros(grid.n_points))

    @staticmethod
    def harmonic(grid: Grid1D, mass: float, omega: float) -> "Potential":
        return Potential(0.5 * mass * omega**2 * grid.x**2)


@dataclass(frozen=True)
class Wavefunction:
    """Complex amplitudes on a grid at a single time."""

    grid: Grid1D
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.grid.n_points,):
            raise ValueError(
                f"amplitudes shape {amp.shape} does not match grid "
                f"({self.grid.n_points},)"
            )
        object.__setattr__(self, "amplitudes", amp)

    def norm(self) -> float:
        """Total probability, integral of |psi|^2 dx (trapezoid)."""
        return float(np.trapezoid(np.abs(self.amplitudes) ** 2, dx=self.grid.dx))

    def normalize(self) -> "Wavefunction":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero wavefunction")
        return Wavefunction(self.grid, self.amplitudes / np.sqrt(n), self.time)


def init_gaussian_packet(
    grid: Grid1D, center: float, sigma0: float, k0: float
) -> Wavefunction:
    """Normalized Gaussian packet exp(-(x-c)^2/4 sigma0^2) exp(i k0 x).

    Rejects packets whose 6-sigma support reaches a grid boundary.
    """
    if sigma0 <= 0:
        raise ValueError(f"sigma0 must be positive, got {sigma0}")
    margin_lo = center - grid.x_min
    margin_hi = grid.x_max - center
    if min(margin_lo, margin_hi) <= 6.0 * sigma0:
        raise BoundaryError(
            f"packet at center={center} with sigma0={sigma0} is within "
            f"6 sigma of a boundary (margins {margin_lo:.3g}, {margin_hi:.3g})"
        )
    x = grid.x
    psi = np.exp(-((x - center) ** 2) / (4.0 * sigma0**2)) * np.exp(1j * k0 * x)
    return Wavefunction(grid, psi, 0.0).normalize()


@dataclass
class EvolveSettings:
    """Knobs for the Crank-Nicolson stepper."""

    norm_tolerance: float = 1e-8
    boundary_density_limit: float = 1e-8
    cfl_safety_factor: float = 50.0


def _cn_matrices(grid, potential, mass, dt, hbar):
    """Banded (ab) form of A = I + i dt/2hbar H and the B-apply pieces."""
    dx = grid.dx
    n = grid.n_points
    kin = hbar**2 / (mass * dx**2)
    diag_h = kin + potential.values
    off_h = -0.5 * kin
    lam = 1j * dt / (2.0 * hbar)
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = lam * off_h
    ab[1, :] = 1.0 + lam * diag_h
    ab[2, :-1] = lam * off_h
    b_diag = 1.0 - lam * diag_h
    b_off = -lam * off_h
    return ab, b_diag, b_off


def evolve(
    wf: Wavefunction,
    potential: Potential,
    mass: float,
    dt: float,
    n_steps: int,
    constants: PhysicalConstants = NATURAL,
    settings: EvolveSettings | None = None,
) -> Wavefunction:
    """Advance psi by n_steps Crank-Nicolson steps of size dt."""
    return evolve_history(
        wf, potential, mass, dt, n_steps, constants, settings, store_every=0
    )[-1]


def evolve_history(
    wf: Wavefunction,
    potential: Potential,
    mass: float,
    dt: float,
    n_steps: int,
    constants: PhysicalConstants = NATURAL,
    settings: EvolveSettings | None = None,
    store_every: int = 1,
) -> list[Wavefunction]:
    """Like evolve() but returns snapshots every `store_every` steps
    (always including the initial and final states).  store_every=0 keeps
    only endpoints.
    """
    if settings is None:
        settings = EvolveSettings()
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if potential.values.shape != (wf.grid.n_points,):
        raise ValueError("potential does not match the wavefunction grid")
    hbar = constants.hbar
    dt_ref = wf.grid.dx**2 * mass / hbar
    if dt > settings.cfl_safety_factor * dt_ref:
        raise ValueError(
            f"dt={dt:.3g} exceeds {settings.cfl_safety_factor} x dx^2 m/hbar "
            f"= {settings.cfl_safety_factor * dt_ref:.3g}; refine the step"
        )

    ab, b_diag, b_off = _cn_matrices(wf.grid, potential, mass, dt, hbar)
    psi = wf.amplitudes.copy()
    norm0 = wf.norm()
    dx = wf.grid.dx
    out = [wf]
    for step in range(1, n_steps + 1):
        rhs = b_diag * psi
        rhs[:-1] += b_off * psi[1:]
        rhs[1:] += b_off * psi[:-1]
        psi = solve_banded((1, 1), ab, rhs)
        edge_rho = max(abs(psi[0]) ** 2, abs(psi[-1]) ** 2)
        if edge_rho > settings.boundary_density_limit:
            raise BoundaryError(
                f"boundary density {edge_rho:.3g} exceeds "
                f"{settings.boundary_density_limit:.3g} at step {step}"
            )
        norm = float(np.trapezoid(np.abs(psi) ** 2, dx=dx))
        if abs(norm - norm0) > settings.norm_tolerance:
            raise NumericalInstabilityError(
                f"norm drift {norm - norm0:.3g} beyond tolerance "
                f"{settings.norm_tolerance:.3g} at step {step}"
            )
        if (store_every and step % store_every == 0) or step == n_steps:
            out.append(Wavefunction(wf.grid, psi.copy(), wf.time + step * dt))
    return out


def probability_density(wf: Wavefunction) -> np.ndarray:
    """rho = |psi|^2 per grid point."""
    return np.abs(wf.amplitudes) ** 2


def probability_current(
    wf: Wavefunction, mass: float, constants: PhysicalConstants = NATURAL
) -> np.ndarray:
    """j = (hbar/m) Im(psi* dpsi/dx), central differences (one-sided at ends)."""
    psi = wf.amplitudes
    dpsi = np.gradient(psi, wf.grid.dx)
    return (constants.hbar / mass) * np.imag(np.conj(psi) * dpsi)


@dataclass(frozen=True)
class PolarForm:
    """psi = amplitude * exp(i action / hbar) where the phase is defined."""

    amplitude: np.ndarray
    action: np.ndarray
    phase_defined: np.ndarray  # bool mask, False below the density floor
    segments: list[tuple[int, int]] = field(default_factory=list)


def polar_decompose(
    wf: Wavefunction,
    rho_floor: float | None = None,
    constants: PhysicalConstants = NATURAL,
) -> PolarForm:
    """Split psi into amplitude R and action S (hbar x unwrapped phase).

    The phase is unwrapped independently within each contiguous region where
    rho > rho_floor; S is offset so it vanishes at the leftmost valid point.
    Points at or below the floor are flagged undefined.
    """
    rho = probability_density(wf)
    if rho_floor is None:
        rho_floor = 1e-12 * float(rho.max()) if rho.max() > 0 else 0.0
    amplitude = np.abs(wf.amplitudes)
    valid = rho > rho_floor
    action = np.zeros(wf.grid.n_points)
    segments: list[tuple[int, int]] = []
    idx = np.flatnonzero(valid)
    if idx.size:
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate(([0], breaks + 1))
        ends = np.concatenate((breaks, [idx.size - 1]))
        anchor = None
        for s, e in zip(starts, ends):
            lo, hi = idx[s], idx[e] + 1
            seg_phase = np.unwrap(np.angle(wf.amplitudes[lo:hi]))
            if anchor is None:
                anchor = seg_phase[0]
            action[lo:hi] = constants.hbar * (seg_phase - anchor)
            segments.append((int(lo), int(hi)))
    return PolarForm(amplitude, action, valid, segments)


def continuity_residual(
    wf_before: Wavefunction,
    wf_after: Wavefunction,
    mass: float,
    constants: PhysicalConstants = NATURAL,
) -> float:
    """Max interior |d rho/dt + d j/dx| between two snapshots.

    Time derivative is a forward difference at the midpoint; the current is
    averaged over the two snapshots to match.
    """
    if not wf_after.time > wf_before.time:
        raise ValueError("wf_after must be later than wf_before")
    dt = wf_after.time - wf_before.time
    drho_dt = (probability_density(wf_after) - probability_density(wf_before)) / dt
    j_mid = 0.5 * (
        probability_current(wf_before, mass, constants)
        + probability_current(wf_after, mass, constants)
    )
    dj_dx = np.gradient(j_mid, wf_before.grid.dx)
    interior = slice(1, -1)
    return float(np.max(np.abs(drho_dt[interior] + dj_dx[interior])))


def rms_width(wf: Wavefunction) -> float:
    """RMS width sqrt(<x^2> - <x>^2) of |psi|^2."""
    x = wf.grid.x
    rho = probability_density(wf)
    w = np.trapezoid(rho, dx=wf.grid.dx)
    mean = np.trapezoid(x * rho, dx=wf.grid.dx) / w
    var = np.trapezoid((x - mean) ** 2 * rho, dx=wf.grid.dx) / w
    return float(np.sqrt(var))


def write_wavefunction_csv(
    wf: Wavefunction,
    mass: float,
    path,
    constants: PhysicalConstants = NATURAL,
) -> None:
    """Snapshot CSV with columns x, re_psi, im_psi, rho, j."""
    rho = probability_density(wf)
    j = probability_current(wf, mass, constants)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "re_psi", "im_psi", "rho", "j"])
        for i, x in enumerate(wf.grid.x):
            writer.writerow(
                [
                    repr(float(x)),
                    repr(float(wf.amplitudes[i].real)),
                    repr(float(wf.amplitudes[i].imag)),
                    repr(float(rho[i])),
                    repr(float(j[i])),
                ]
            )
