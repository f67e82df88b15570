"""Run configuration: flat sectioned key=value files (INI style, diffable)
with JSON accepted as an alternative.  Unknown sections or keys are
rejected; the RNG seed is the one mandatory entry.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass
from pathlib import Path

from .constants import (
    DELTA_M_MEV,
    M_KAON_MEV,
    M_PI_CHARGED_MEV,
    M_PI_NEUTRAL_MEV,
    MEV_M_S,
    TAU_L_SEC,
    TAU_S_SEC,
    PhysicalConstants,
)
from .events import BeamSpec, DetectorSpec
from .kaon import KaonParams
from .spreading import PacketSpec


class ConfigError(ValueError):
    """Malformed, incomplete, or over-complete run configuration."""


_REQUIRED = object()


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


# section -> key -> (parser, default). _REQUIRED entries must be present.
SCHEMA = {
    "units": {
        "hbar_mev_s": (float, MEV_M_S.hbar),
        "c_m_per_s": (float, MEV_M_S.c),
    },
    "kaon": {
        "tau_s_sec": (float, TAU_S_SEC),
        "tau_l_sec": (float, TAU_L_SEC),
        "delta_m_mev": (float, DELTA_M_MEV),
        "m_k_mev": (float, M_KAON_MEV),
        "m_pi_charged_mev": (float, M_PI_CHARGED_MEV),
        "m_pi_neutral_mev": (float, M_PI_NEUTRAL_MEV),
        "br_l_pi_e_nu": (float, 0.39),
        "br_l_pi_mu_nu": (float, 0.27),
        "br_l_three_pi": (float, 0.339),
        "br_l_two_pi": (float, 0.001),
        "br_s_pi_plus_pi_minus": (float, 0.69),
        "br_s_two_pi0": (float, 0.31),
    },
    "beam": {
        "momentum_mev_c": (float, 10000.0),
        "source_m": (_floats, [0.0, 0.0, 0.0]),
        "direction": (_floats, [0.0, 0.0, 1.0]),
        "a_re": (float, 1.0),
        "a_im": (float, 0.0),
        "b_re": (float, 1.0),
        "b_im": (float, 0.0),
    },
    "detector": {
        "relative_momentum_resolution": (float, 0.01),
        "angular_resolution_rad": (float, 0.001),
        "plane_distance_m": (float, 5.0),
    },
    "reconstruction": {
        "cut_tau_s": (float, 10.0),
        "parallel_tolerance_rad": (float, 1e-9),
        "min_opening_angle_rad": (float, 0.02),
    },
    "spreading": {
        "sigma0_m": (float, 1e-10),
        "mass_mev": (float, M_PI_CHARGED_MEV),
        "momentum_mev_c": (float, 200.0),
        "distances_m": (_floats, [0.1, 0.3, 1.0, 3.0, 10.0]),
        "frame": (str, "rest_frame_longitudinal"),
    },
    "evolve": {
        "x_min": (float, -15.0),
        "x_max": (float, 15.0),
        "n_points": (int, 1501),
        "center": (float, 0.0),
        "sigma0": (float, 1.0),
        "k0": (float, 0.0),
        "mass": (float, 1.0),
        "dt": (float, 0.004),
        "n_steps": (int, 500),
        "snapshot_every": (int, 100),
    },
    "trajectories": {
        "n_particles": (int, 1000),
        "n_saved": (int, 50),
        "bin_aggregate": (int, 4),
    },
    "run": {
        "seed": (int, _REQUIRED),
        "n_events": (int, 100000),
        "workers": (int, 1),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration for one pipeline run."""

    values: dict

    def section(self, name: str) -> dict:
        return self.values[name]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    def constants(self) -> PhysicalConstants:
        u = self.values["units"]
        return PhysicalConstants(hbar=u["hbar_mev_s"], c=u["c_m_per_s"])

    def kaon_params(self) -> KaonParams:
        k = self.values["kaon"]
        return KaonParams(
            m_l=k["m_k_mev"] + 0.5 * k["delta_m_mev"],
            m_s=k["m_k_mev"] - 0.5 * k["delta_m_mev"],
            gamma_l=1.0 / k["tau_l_sec"],
            gamma_s=1.0 / k["tau_s_sec"],
            branching_l={
                "pi_e_nu": k["br_l_pi_e_nu"],
                "pi_mu_nu": k["br_l_pi_mu_nu"],
                "three_pi": k["br_l_three_pi"],
                "two_pi": k["br_l_two_pi"],
            },
            branching_s={
                "pi_plus_pi_minus": k["br_s_pi_plus_pi_minus"],
                "two_pi0": k["br_s_two_pi0"],
            },
            m_k=k["m_k_mev"],
            m_pi_charged=k["m_pi_charged_mev"],
            m_pi_neutral=k["m_pi_neutral_mev"],
        )

    def beam(self) -> BeamSpec:
        b = self.values["beam"]
        return BeamSpec(
            source_position=b["source_m"],
            direction=b["direction"],
            kaon_momentum=b["momentum_mev_c"],
            initial_a=complex(b["a_re"], b["a_im"]),
            initial_b=complex(b["b_re"], b["b_im"]),
        )

    def detector(self, seed: int) -> DetectorSpec:
        d = self.values["detector"]
        return DetectorSpec(
            relative_momentum_resolution=d["relative_momentum_resolution"],
            angular_resolution=d["angular_resolution_rad"],
            seed=seed,
        )

    def packet(self) -> PacketSpec:
        s = self.values["spreading"]
        return PacketSpec(
            sigma0=s["sigma0_m"], mass=s["mass_mev"], momentum=s["momentum_mev_c"]
        )

    def echo(self) -> dict:
        """JSON-friendly copy of the resolved values, for report embedding."""
        return json.loads(json.dumps(self.values, sort_keys=True))


def _resolve(raw: dict) -> RunConfig:
    for section in raw:
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in raw[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
    values: dict = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (parse, default) in keys.items():
            if section in raw and key in raw[section]:
                try:
                    values[section][key] = parse(raw[section][key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(
                        f"bad value for {key!r} in [{section}]: {exc}"
                    ) from exc
            elif default is _REQUIRED:
                raise ConfigError(f"missing required key {key!r} in [{section}]")
            else:
                values[section][key] = default
    return RunConfig(values)


def load_config(path) -> RunConfig:
    """Load a run config from an INI-style key=value file or a JSON file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
        if not isinstance(raw, dict) or not all(
            isinstance(v, dict) for v in raw.values()
        ):
            raise ConfigError("JSON config must map sections to key/value objects")
        return _resolve(raw)
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"invalid config file: {exc}") from exc
    raw = {s: dict(parser.items(s)) for s in parser.sections()}
    return _resolve(raw)


def config_from_dict(raw: dict) -> RunConfig:
    return _resolve(raw)
