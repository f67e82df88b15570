"""Command-line pipeline: evolve | trajectories | experiment | spreading.

All randomness flows from the single config seed through named substreams
(spawn keys), so any run is reproducible from (config file, seed) and is
independent of worker count.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bohmian import (
    EnsembleSpec,
    equivariance_check,
    propagate_trajectory,
    sample_equilibrium_ensemble,
    write_trajectories_csv,
)
from .config import ConfigError, load_config
from .constants import NATURAL
from .events import EventBatch, generate_events, smear_batch, write_events_jsonl
from .quantum import (
    Grid1D,
    Potential,
    evolve_history,
    init_gaussian_packet,
    write_wavefunction_csv,
)
from .reconstruction import analyze_run
from .spreading import error_budget

# Fixed substream labels: 0 = event chunks, 1 = detector, 2 = ensembles.
_STREAM_EVENTS = 0
_STREAM_DETECTOR = 1
_STREAM_ENSEMBLE = 2

_CHUNK_SIZE = 65536  # fixed so results never depend on scheduling


def _substream_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _substream_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=key).generate_state(1)[0])


def _concat_batches(batches: list[EventBatch]) -> EventBatch:
    first = batches[0]
    return EventBatch(
        beam=first.beam,
        component=np.concatenate([b.component for b in batches]),
        channel=np.concatenate([b.channel for b in batches]),
        vertex=np.concatenate([b.vertex for b in batches]),
        lab_time=np.concatenate([b.lab_time for b in batches]),
        proper_time=np.concatenate([b.proper_time for b in batches]),
        p_true=np.concatenate([b.p_true for b in batches]),
    )


def generate_run_events(config, n: int | None = None) -> EventBatch:
    """Chunked, substream-seeded event generation for one configured run."""
    beam = config.beam()
    params = config.kaon_params()
    constants = config.constants()
    n = config.section("run")["n_events"] if n is None else n
    batches = []
    chunk_index = 0
    remaining = n
    while remaining > 0:
        size = min(_CHUNK_SIZE, remaining)
        rng = _substream_rng(config.seed, _STREAM_EVENTS, chunk_index)
        batches.append(generate_events(beam, params, size, rng, constants))
        chunk_index += 1
        remaining -= size
    return _concat_batches(batches)


def _benchmark_history(config):
    ev = config.section("evolve")
    grid = Grid1D(ev["x_min"], ev["x_max"], ev["n_points"])
    wf = init_gaussian_packet(grid, ev["center"], ev["sigma0"], ev["k0"])
    return evolve_history(
        wf,
        Potential.free(grid),
        ev["mass"],
        ev["dt"],
        ev["n_steps"],
        constants=NATURAL,
        store_every=1,
    ), ev


def cmd_evolve(config, out: Path) -> int:
    history, ev = _benchmark_history(config)
    stride = ev["snapshot_every"]
    count = 0
    for i, wf in enumerate(history):
        if i % stride == 0 or i == len(history) - 1:
            write_wavefunction_csv(
                wf, ev["mass"], out / f"evolve_snapshot_{count:03d}.csv"
            )
            count += 1
    print(f"wrote {count} snapshots to {out}")
    return 0


def cmd_trajectories(config, out: Path) -> int:
    history, ev = _benchmark_history(config)
    tr = config.section("trajectories")
    spec = EnsembleSpec(
        n_particles=tr["n_particles"],
        seed=_substream_seed(config.seed, _STREAM_ENSEMBLE),
    )
    result = equivariance_check(
        history, spec, ev["mass"], bin_aggregate=tr["bin_aggregate"]
    )
    (out / "equivariance.json").write_text(result.to_json() + "\n")
    x0 = sample_equilibrium_ensemble(history[0], spec)[: tr["n_saved"]]
    trajectories = [propagate_trajectory(history, x, ev["mass"]) for x in x0]
    write_trajectories_csv(trajectories, out / "trajectories.csv")
    print(
        f"ensemble n={result.n_particles} failures={result.n_failed} "
        f"L1={result.l1_distance:.4f}"
    )
    return 0


def cmd_experiment(config, out: Path) -> int:
    params = config.kaon_params()
    det = config.detector(seed=_substream_seed(config.seed, _STREAM_DETECTOR))
    batch = generate_run_events(config)
    batch = smear_batch(batch, det)
    write_events_jsonl(batch, out / "events.jsonl")
    report = analyze_run(
        batch,
        params,
        det,
        cut_in_units_of_tau_s=config.section("reconstruction")["cut_tau_s"],
        plane_distance=config.section("detector")["plane_distance_m"],
        min_opening_angle=config.section("reconstruction")["min_opening_angle_rad"],
        constants=config.constants(),
        config_echo=config.echo(),
    )
    report.version = f"kaonlab {__version__}"
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "report.txt").write_text(report.to_text())
    print(
        f"n={report.n_generated} pass={report.n_pass} "
        f"contamination={report.contamination:.4g} "
        f"(expected {report.contamination_expected:.4g})"
    )
    return 0


def cmd_spreading(config, out: Path) -> int:
    sp = config.section("spreading")
    report = error_budget(
        config.packet(),
        sp["distances_m"],
        config.beam(),
        config.kaon_params(),
        constants=config.constants(),
        frame_convention=sp["frame"],
    )
    report.to_csv(out / "spreading.csv")
    (out / "spreading.txt").write_text(report.to_text())
    print(report.to_text())
    return 0


_COMMANDS = {
    "evolve": cmd_evolve,
    "trajectories": cmd_trajectories,
    "experiment": cmd_experiment,
    "spreading": cmd_spreading,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kaonlab",
        description="Bohmian kaon-decay laboratory: evolution, trajectories, "
        "decay experiment, and spreading budgets",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run config (INI or JSON)")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--workers", type=int, default=None, help="parallelism hint")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            values = config.echo()
            values["run"]["seed"] = args.seed
            from .config import config_from_dict

            config = config_from_dict(values)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](config, out)
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
