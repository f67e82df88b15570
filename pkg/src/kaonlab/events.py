"""Lab-frame Monte Carlo for kaon decays: flight along the beam line,
two-body pi pi kinematics in the rest frame, Lorentz boost to the lab,
and Gaussian detector smearing of the measured momenta.

Non-two-pion channels carry vertex/time/channel labels only; they enter
background counting, never track reconstruction.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import MEV_M_S, PhysicalConstants
from .kaon import (
    CHARGED_TWO_PION_CHANNELS,
    KaonParams,
    KaonState,
    is_two_pion,
    sample_decays,
)


class BelowThresholdError(ValueError):
    """Parent mass below the daughter mass sum."""


@dataclass(frozen=True)
class BeamSpec:
    """Monochromatic, pointlike kaon beam with a regenerated (a, b) state."""

    source_position: np.ndarray
    direction: np.ndarray
    kaon_momentum: float  # MeV/c
    initial_a: complex = 1.0
    initial_b: complex = 1.0

    def __post_init__(self):
        src = np.asarray(self.source_position, dtype=float)
        d = np.asarray(self.direction, dtype=float)
        if src.shape != (3,) or d.shape != (3,):
            raise ValueError("source_position and direction must be 3-vectors")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")
        if self.kaon_momentum <= 0:
            raise ValueError("kaon_momentum must be positive")
        object.__setattr__(self, "source_position", src)
        object.__setattr__(self, "direction", d)

    def initial_state(self) -> KaonState:
        return KaonState(self.initial_a, self.initial_b)


@dataclass(frozen=True)
class DetectorSpec:
    """Gaussian instrument model for the measured daughter momenta."""

    relative_momentum_resolution: float
    angular_resolution: float  # radians
    seed: int

    def __post_init__(self):
        if self.relative_momentum_resolution < 0 or self.angular_resolution < 0:
            raise ValueError("resolutions must be nonnegative")


@dataclass(frozen=True)
class DecayEvent:
    """One generated event with ground truth."""

    event_id: int
    true_vertex: np.ndarray
    true_lab_time: float
    true_proper_time: float
    component: str
    channel: str
    daughter_momenta: np.ndarray | None  # (2, 3) MeV/c, two-pion channels only


@dataclass
class EventBatch:
    """Column-oriented event sample; p_true rows are NaN off two-pion channels."""

    beam: BeamSpec
    component: np.ndarray  # (n,) '<U3'
    channel: np.ndarray  # (n,) '<U16'
    vertex: np.ndarray  # (n, 3) m
    lab_time: np.ndarray  # (n,) s
    proper_time: np.ndarray  # (n,) s
    p_true: np.ndarray  # (n, 2, 3) MeV/c
    p_meas: np.ndarray | None = None  # (n, 2, 3) MeV/c after smearing

    def __len__(self) -> int:
        return self.component.shape[0]

    @property
    def two_pion_mask(self) -> np.ndarray:
        return ~np.isnan(self.p_true[:, 0, 0])

    def event(self, i: int) -> DecayEvent:
        p = self.p_true[i]
        return DecayEvent(
            event_id=i,
            true_vertex=self.vertex[i],
            true_lab_time=float(self.lab_time[i]),
            true_proper_time=float(self.proper_time[i]),
            component=str(self.component[i]),
            channel=str(self.channel[i]),
            daughter_momenta=None if np.isnan(p[0, 0]) else p,
        )


def two_body_momentum(M: float, m1: float, m2: float) -> float:
    """Daughter momentum p* of a two-body decay M -> m1 + m2 at rest."""
    if M < m1 + m2:
        raise BelowThresholdError(f"M={M} below threshold {m1 + m2}")
    return math.sqrt((M**2 - (m1 + m2) ** 2) * (M**2 - (m1 - m2) ** 2)) / (2.0 * M)


def kaon_gamma_beta(beam: BeamSpec, params: KaonParams) -> tuple[float, float]:
    """Lorentz gamma and beta of the beam kaon."""
    p = beam.kaon_momentum
    energy = math.hypot(p, params.m_k)
    return energy / params.m_k, p / energy


def _daughter_masses(channel: str, params: KaonParams) -> tuple[float, float]:
    if channel in CHARGED_TWO_PION_CHANNELS:
        return params.m_pi_charged, params.m_pi_charged
    return params.m_pi_neutral, params.m_pi_neutral


def generate_events(
    beam: BeamSpec,
    params: KaonParams,
    n: int,
    rng: np.random.Generator,
    constants: PhysicalConstants = MEV_M_S,
) -> EventBatch:
    """Generate n decay events from the beam's initial kaon state.

    Proper times and channels come from the kaon decay model; the flight is
    a classical ray at constant beta c along the beam direction.  Two-pion
    daughters are isotropic in the rest frame and boosted along the beam,
    which conserves energy-momentum by construction.
    """
    state0 = beam.initial_state()
    proper_time, component, channel = sample_decays(state0, params, n, rng)
    gamma, beta = kaon_gamma_beta(beam, params)
    lab_time = gamma * proper_time
    flight = beta * constants.c * lab_time
    vertex = beam.source_position[None, :] + flight[:, None] * beam.direction[None, :]

    # Rest-frame isotropic direction for every event (fixed draw order keeps
    # the stream reproducible); only two-pion rows get kinematics.
    cos_theta = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    sin_theta = np.sqrt(1.0 - cos_theta**2)
    nhat = np.stack(
        (sin_theta * np.cos(phi), sin_theta * np.sin(phi), cos_theta), axis=1
    )

    p_true = np.full((n, 2, 3), np.nan)
    two_pi = np.array([is_two_pion(c) for c in channel])
    if np.any(two_pi):
        d = beam.direction
        for chan in set(channel[two_pi]):
            sel = two_pi & (channel == chan)
            m1, m2 = _daughter_masses(chan, params)
            p_star = two_body_momentum(params.m_k, m1, m2)
            e1 = math.hypot(p_star, m1)
            e2 = math.hypot(p_star, m2)
            for slot, (sign, e_star) in enumerate(((1.0, e1), (-1.0, e2))):
                p_rest = sign * p_star * nhat[sel]
                p_par = p_rest @ d
                boost = (gamma - 1.0) * p_par + gamma * beta * e_star
                p_true[sel, slot, :] = p_rest + boost[:, None] * d[None, :]

    return EventBatch(
        beam=beam,
        component=component,
        channel=channel,
        vertex=vertex,
        lab_time=lab_time,
        proper_time=proper_time,
        p_true=p_true,
    )


def generate_event(
    beam: BeamSpec,
    params: KaonParams,
    seed: int,
    constants: PhysicalConstants = MEV_M_S,
) -> DecayEvent:
    """Generate a single event from its own RNG stream."""
    rng = np.random.default_rng(seed)
    return generate_events(beam, params, 1, rng, constants).event(0)


def _transverse_basis(directions):
    """Two unit vectors orthogonal to each row of `directions`."""
    ref = np.zeros_like(directions)
    smallest = np.argmin(np.abs(directions), axis=1)
    ref[np.arange(len(directions)), smallest] = 1.0
    e1 = np.cross(directions, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(directions, e1)
    return e1, e2


def smear_batch(batch: EventBatch, det: DetectorSpec) -> EventBatch:
    """Apply momentum-magnitude and angular Gaussian smearing to the two-pion
    daughters; other rows keep NaN measured momenta.  Deterministic in
    det.seed.
    """
    rng = np.random.default_rng(det.seed)
    n = len(batch)
    # Fixed-size draws keep the stream independent of the channel mix.
    mag_pulls = rng.standard_normal((n, 2))
    tilt_pulls = rng.standard_normal((n, 2, 2))

    p_meas = np.full_like(batch.p_true, np.nan)
    mask = batch.two_pion_mask
    for slot in range(2):
        p = batch.p_true[mask, slot, :]
        mags = np.linalg.norm(p, axis=1)
        dirs = p / mags[:, None]
        new_mags = mags * (
            1.0 + det.relative_momentum_resolution * mag_pulls[mask, slot]
        )
        if det.angular_resolution > 0:
            e1, e2 = _transverse_basis(dirs)
            tilt = (
                dirs
                + det.angular_resolution * tilt_pulls[mask, slot, 0, None] * e1
                + det.angular_resolution * tilt_pulls[mask, slot, 1, None] * e2
            )
            dirs = tilt / np.linalg.norm(tilt, axis=1, keepdims=True)
        p_meas[mask, slot, :] = new_mags[:, None] * dirs
    return replace(batch, p_meas=p_meas)


def smear_measurement(event: DecayEvent, det: DetectorSpec) -> np.ndarray:
    """Smear a single two-pion event's daughter momenta; returns (2, 3)."""
    if event.daughter_momenta is None:
        raise ValueError("smearing requires a two-pion event with daughter momenta")
    rng = np.random.default_rng(det.seed)
    mag_pulls = rng.standard_normal((1, 2))
    tilt_pulls = rng.standard_normal((1, 2, 2))
    out = np.empty((2, 3))
    for slot in range(2):
        p = event.daughter_momenta[slot]
        mag = float(np.linalg.norm(p))
        d = p / mag
        new_mag = mag * (1.0 + det.relative_momentum_resolution * mag_pulls[0, slot])
        if det.angular_resolution > 0:
            e1, e2 = _transverse_basis(d[None, :])
            tilt = (
                d
                + det.angular_resolution * tilt_pulls[0, slot, 0] * e1[0]
                + det.angular_resolution * tilt_pulls[0, slot, 1] * e2[0]
            )
            d = tilt / np.linalg.norm(tilt)
        out[slot] = new_mag * d
    return out


def _event_record(batch, i):
    rec = {
        "event_id": i,
        "component": str(batch.component[i]),
        "channel": str(batch.channel[i]),
        "true_vertex": [float(v) for v in batch.vertex[i]],
        "true_proper_time": float(batch.proper_time[i]),
    }
    if not np.isnan(batch.p_true[i, 0, 0]):
        rec["p_true"] = [[float(c) for c in row] for row in batch.p_true[i]]
        if batch.p_meas is not None and not np.isnan(batch.p_meas[i, 0, 0]):
            rec["p_meas"] = [[float(c) for c in row] for row in batch.p_meas[i]]
    return rec


def write_events_jsonl(batch: EventBatch, path) -> None:
    """One JSON object per line: event_id, component, channel, true_vertex,
    true_proper_time, and (two-pion only) p_true / p_meas."""
    with open(path, "w") as fh:
        for i in range(len(batch)):
            fh.write(json.dumps(_event_record(batch, i), sort_keys=True))
            fh.write("\n")


def read_events_jsonl(path, beam: BeamSpec, params: KaonParams) -> EventBatch:
    """Rebuild an EventBatch from a JSON-lines event file.

    Lab times are recomputed from proper times with the beam's gamma, which
    the file format does not store.
    """
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    n = len(records)
    component = np.empty(n, dtype="<U3")
    channel = np.empty(n, dtype="<U16")
    vertex = np.empty((n, 3))
    proper_time = np.empty(n)
    p_true = np.full((n, 2, 3), np.nan)
    p_meas = np.full((n, 2, 3), np.nan)
    for i, rec in enumerate(records):
        component[i] = rec["component"]
        channel[i] = rec["channel"]
        vertex[i] = rec["true_vertex"]
        proper_time[i] = rec["true_proper_time"]
        if "p_true" in rec:
            p_true[i] = rec["p_true"]
        if "p_meas" in rec:
            p_meas[i] = rec["p_meas"]
    gamma, _ = kaon_gamma_beta(beam, params)
    return EventBatch(
        beam=beam,
        component=component,
        channel=channel,
        vertex=vertex,
        lab_time=gamma * proper_time,
        proper_time=proper_time,
        p_true=p_true,
        p_meas=p_meas if not np.all(np.isnan(p_meas)) else None,
    )


def write_events_csv(batch: EventBatch, path) -> None:
    """Flattened CSV export of the event file fields."""
    header = (
        ["event_id", "component", "channel"]
        + [f"true_vertex_{ax}" for ax in "xyz"]
        + ["true_proper_time"]
        + [f"p_true_{i}_{ax}" for i in (1, 2) for ax in "xyz"]
        + [f"p_meas_{i}_{ax}" for i in (1, 2) for ax in "xyz"]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(batch)):
            row = [i, str(batch.component[i]), str(batch.channel[i])]
            row += [repr(float(v)) for v in batch.vertex[i]]
            row.append(repr(float(batch.proper_time[i])))
            for source in (batch.p_true, batch.p_meas):
                if source is None or np.isnan(source[i, 0, 0]):
                    row += [""] * 6
                else:
                    row += [repr(float(c)) for c in source[i].ravel()]
            writer.writerow(row)
