"""Bohmian velocity fields and deterministic trajectories.

The velocity is taken as j/rho (identical to the gradient-of-phase law
wherever rho > 0, and free of phase-unwrap fragility).  Trajectories are
integrated with one RK4 step per stored wavefunction snapshot, with the
velocity field interpolated linearly in x and t.  Quantum-equilibrium
ensembles are drawn from |psi|^2 by inverse CDF.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .constants import NATURAL, PhysicalConstants
from .quantum import Wavefunction, probability_current, probability_density


class NodeRegionError(ValueError):
    """Velocity requested where the density is below the floor."""


class TrajectoryError(RuntimeError):
    """Trajectory left the grid or entered a node region."""


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered (t, x) samples of one Bohmian particle."""

    times: np.ndarray
    positions: np.ndarray
    particle_mass: float
    complete: bool = True
    failure_reason: str | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if t.shape != x.shape:
            raise ValueError("times and positions must have the same shape")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("sample times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)


@dataclass(frozen=True)
class EnsembleSpec:
    n_particles: int
    seed: int
    sampling: str = "equilibrium"

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.sampling != "equilibrium":
            raise ValueError(f"unknown sampling mode {self.sampling!r}")


@dataclass(frozen=True)
class EquivarianceResult:
    """Outcome of transporting an equilibrium ensemble and comparing to rho."""

    n_particles: int
    n_failed: int
    l1_distance: float
    statistical_error: float
    valid: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n_particles,
                "failures": self.n_failed,
                "l1_distance": self.l1_distance,
                "statistical_error": self.statistical_error,
                "valid": self.valid,
            },
            sort_keys=True,
        )


def plane_wave_velocity(
    k: float, mass: float, constants: PhysicalConstants = NATURAL
) -> float:
    """Velocity hbar k / m of a plane-wave-guided particle."""
    if mass <= 0:
        raise ValueError(f"mass must be positive, got {mass}")
    return constants.hbar * k / mass


def _velocity_field(wf, mass, rho_floor, constants):
    """Per-node velocity j/rho with NaN below the density floor."""
    rho = probability_density(wf)
    floor = rho_floor if rho_floor is not None else 1e-12 * float(rho.max())
    j = probability_current(wf, mass, constants)
    v = np.full(rho.shape, np.nan)
    ok = rho > floor
    v[ok] = j[ok] / rho[ok]
    return v


def velocity_at(
    wf: Wavefunction,
    x: float,
    mass: float,
    rho_floor: float | None = None,
    constants: PhysicalConstants = NATURAL,
) -> float:
    """Bohmian velocity v = j/rho at x, linear interpolation between nodes."""
    grid = wf.grid
    if not (grid.x_min <= x <= grid.x_max):
        raise ValueError(f"x={x} outside grid [{grid.x_min}, {grid.x_max}]")
    v = _velocity_field(wf, mass, rho_floor, constants)
    val = float(np.interp(x, grid.x, v))
    if np.isnan(val):
        raise NodeRegionError(f"velocity undefined at x={x}: density below floor")
    return val


def _check_history(history):
    if len(history) < 2:
        raise ValueError("history must contain at least two snapshots")
    times = np.array([wf.time for wf in history])
    strides = np.diff(times)
    if not np.all(strides > 0):
        raise ValueError("history times must be strictly increasing")
    if not np.allclose(strides, strides[0], rtol=1e-9, atol=0.0):
        raise ValueError("history must be uniformly strided in time")
    return times


def _propagate_positions(history, x0, mass, rho_floor, constants):
    """Vectorized RK4 transport of many particles through a snapshot history.

    Returns (positions[n_times, n_particles], active[n_particles],
    failure_step[n_particles]); inactive particles freeze at their last
    valid position.
    """
    times = _check_history(history)
    grid = history[0].grid
    xg = grid.x
    fields = [_velocity_field(wf, mass, rho_floor, constants) for wf in history]

    x = np.array(x0, dtype=float, copy=True)
    active = np.ones(x.shape, dtype=bool)
    failure_step = np.full(x.shape, -1, dtype=int)
    out = np.empty((len(history),) + x.shape)
    out[0] = x

    def sample(field, pos):
        v = np.interp(pos, xg, field)
        v[(pos < grid.x_min) | (pos > grid.x_max)] = np.nan
        return v

    for i in range(len(history) - 1):
        h = times[i + 1] - times[i]
        v0, v1 = fields[i], fields[i + 1]
        vmid = 0.5 * (v0 + v1)
        k1 = sample(v0, x)
        k2 = sample(vmid, x + 0.5 * h * k1)
        k3 = sample(vmid, x + 0.5 * h * k2)
        k4 = sample(v1, x + h * k3)
        step = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        x_new = x + step
        bad = active & (
            np.isnan(step) | (x_new < grid.x_min) | (x_new > grid.x_max)
        )
        failure_step[bad] = i
        active &= ~bad
        x = np.where(active, x_new, x)
        out[i + 1] = x
    return out, active, failure_step


def propagate_trajectory(
    history: list[Wavefunction],
    x0: float,
    mass: float,
    rho_floor: float | None = None,
    constants: PhysicalConstants = NATURAL,
) -> Trajectory:
    """Integrate dx/dt = v(x, t) through the snapshot history from x0.

    On entering a node region or leaving the grid the partial trajectory is
    returned with complete=False and a diagnostic reason.
    """
    times = _check_history(history)
    pos, active, failure_step = _propagate_positions(
        history, np.array([x0]), mass, rho_floor, constants
    )
    if active[0]:
        return Trajectory(times, pos[:, 0], mass)
    stop = failure_step[0]
    return Trajectory(
        times[: stop + 1],
        pos[: stop + 1, 0],
        mass,
        complete=False,
        failure_reason=(
            f"trajectory aborted at t={times[stop]:.6g}: "
            "node region or grid boundary reached"
        ),
    )


def _grid_cdf(wf):
    """Piecewise-linear CDF of |psi|^2 at the grid nodes."""
    rho = probability_density(wf)
    dx = wf.grid.dx
    cell_mass = 0.5 * (rho[:-1] + rho[1:]) * dx
    cdf = np.concatenate(([0.0], np.cumsum(cell_mass)))
    return cdf / cdf[-1]


def sample_equilibrium_ensemble(wf: Wavefunction, spec: EnsembleSpec) -> np.ndarray:
    """Draw initial positions i.i.d. from rho = |psi|^2 (inverse CDF)."""
    cdf = _grid_cdf(wf)
    rng = np.random.default_rng(spec.seed)
    u = rng.random(spec.n_particles)
    return np.interp(u, cdf, wf.grid.x)


def equivariance_check(
    history: list[Wavefunction],
    spec: EnsembleSpec,
    mass: float,
    rho_floor: float | None = None,
    constants: PhysicalConstants = NATURAL,
    bin_aggregate: int = 4,
    max_failure_fraction: float = 1e-3,
) -> EquivarianceResult:
    """Transport an equilibrium ensemble and compare its final histogram
    against |psi|^2 at the final time (L1 distance over dx x bin_aggregate
    bins).  More than max_failure_fraction failed trajectories invalidates
    the check.
    """
    x0 = sample_equilibrium_ensemble(history[0], spec)
    pos, active, _ = _propagate_positions(history, x0, mass, rho_floor, constants)
    final = pos[-1][active]
    n_failed = int(np.count_nonzero(~active))

    grid = history[0].grid
    edges = grid.x[::bin_aggregate]
    if edges[-1] < grid.x_max:
        edges = np.append(edges, grid.x_max)
    counts, _ = np.histogram(final, bins=edges)
    p_hist = counts / spec.n_particles

    rho = probability_density(history[-1])
    cell_mass = 0.5 * (rho[:-1] + rho[1:]) * grid.dx
    cum = np.concatenate(([0.0], np.cumsum(cell_mass)))
    node_idx = np.searchsorted(grid.x, edges)
    p_rho = np.diff(cum[node_idx])
    p_rho = p_rho / cum[-1]

    l1 = float(np.sum(np.abs(p_hist - p_rho))) + float(n_failed) / spec.n_particles
    stat_err = float(
        np.sqrt(2.0 / (np.pi * spec.n_particles)) * np.sum(np.sqrt(p_rho))
    )
    valid = n_failed <= max_failure_fraction * spec.n_particles
    return EquivarianceResult(spec.n_particles, n_failed, l1, stat_err, valid)


def write_trajectories_csv(trajectories: list[Trajectory], path) -> None:
    """CSV with columns particle_id, t, x."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["particle_id", "t", "x"])
        for pid, traj in enumerate(trajectories):
            for t, x in zip(traj.times, traj.positions):
                writer.writerow([pid, repr(float(t)), repr(float(x))])
