"""Acceptance gate: one test per headline requirement, each printing a
single PASS/FAIL line (run with -s to see them inline).

    python3 -m pytest tests/test_acceptance.py -v -s
"""

import json
import math
import time

import numpy as np

from kaonlab.bohmian import (
    EnsembleSpec,
    _propagate_positions,
    equivariance_check,
    propagate_trajectory,
)
from kaonlab.cli import main
from kaonlab.constants import NATURAL
from kaonlab.events import (
    BeamSpec,
    DetectorSpec,
    generate_events,
    smear_batch,
)
from kaonlab.kaon import KaonState, MixingParams, overlap, sample_decays
from kaonlab.quantum import (
    Grid1D,
    Potential,
    Wavefunction,
    evolve,
    init_gaussian_packet,
)
from kaonlab.reconstruction import analyze_run, reconstruct_batch
from kaonlab.spreading import (
    CP_SIGNAL_SCALE,
    PacketSpec,
    analytic_sigma,
    error_budget,
    numerical_sigma,
)


def report(number, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"\nacceptance {number} ({name}): {status} [{detail}]")
    assert ok, f"acceptance criterion {number} ({name}) failed: {detail}"


def test_criterion_1_unitarity():
    start = time.perf_counter()
    grid = Grid1D(-15.0, 15.0, 1201)
    wf = init_gaussian_packet(grid, 0.0, 1.0, 0.0)
    out = evolve(wf, Potential.free(grid), 1.0, 2e-3, 1000)
    elapsed = time.perf_counter() - start
    drift = abs(out.norm() - wf.norm())
    ok = drift <= 1e-8 and elapsed < 10.0
    report(1, "unitarity", ok, f"norm drift {drift:.3g} in {elapsed:.2f}s")


def test_criterion_2_plane_wave_linearity():
    k, mass = 2.0, 1.0
    grid = Grid1D(-0.5, 10.5, 1_100_001)
    history = [
        Wavefunction(grid, np.exp(1j * k * grid.x), t) for t in (0.0, 2.5, 5.0)
    ]
    traj = propagate_trajectory(history, 0.0, mass)
    deviation = np.max(np.abs(traj.positions - k * traj.times))
    rel = deviation / (grid.x_max - grid.x_min)
    ok = traj.complete and rel <= 1e-10
    report(2, "plane-wave linearity", ok, f"relative deviation {rel:.3g}")


def test_criterion_3_equivariance(benchmark_history):
    start = time.perf_counter()
    result = equivariance_check(
        benchmark_history, EnsembleSpec(100_000, seed=2026), 1.0
    )
    x0 = np.linspace(-2.5, 2.5, 1000)
    positions, active, _ = _propagate_positions(
        benchmark_history, x0, 1.0, None, NATURAL
    )
    elapsed = time.perf_counter() - start
    no_crossing = bool(np.all(active)) and bool(
        np.all(np.diff(positions, axis=1) > 0)
    )
    ok = (
        result.valid
        and result.l1_distance <= 0.05
        and no_crossing
        and elapsed < 120.0
    )
    report(
        3,
        "equivariance",
        ok,
        f"L1 {result.l1_distance:.4f}, failures {result.n_failed}, "
        f"no-crossing {no_crossing}, {elapsed:.1f}s",
    )


def test_criterion_4_overlap_properties():
    rng = np.random.default_rng(404)
    n = 10_000
    z = rng.normal(size=(n, 6)).view(complex).reshape(n, 3)
    scale = 10.0 ** rng.uniform(-2, 2, size=(n, 3))
    z *= scale
    worst_scale = 0.0
    worst_bound = 0.0
    zero_ok = True
    for p, q, lam in z:
        base = overlap(MixingParams(p, q))
        worst_bound = max(worst_bound, abs(base) - 1.0)
        worst_scale = max(
            worst_scale, abs(overlap(MixingParams(lam * p, lam * q)) - base)
        )
        if abs(base) < 1e-13 and abs(abs(p) - abs(q)) > 1e-7 * abs(p):
            zero_ok = False
    # zero when |p| = |q| by construction
    for p, _, _ in z[:100]:
        phase = complex(math.cos(0.7), math.sin(0.7))
        if abs(overlap(MixingParams(p, abs(p) * phase))) > 1e-12:
            zero_ok = False
    ok = worst_scale < 1e-9 and worst_bound <= 0.0 and zero_ok
    report(
        4,
        "overlap properties",
        ok,
        f"scale dev {worst_scale:.2g}, bound excess {worst_bound:.2g}, "
        f"zero-iff-equal-moduli {zero_ok}",
    )


def test_criterion_5_ks_lifetime(default_params):
    n = 100_000
    t, _, _ = sample_decays(
        KaonState(0.0, 1.0), default_params, n, np.random.default_rng(505)
    )
    tau = default_params.tau_s
    dev = abs(t.mean() - tau)
    limit = 3.0 * tau / math.sqrt(n)
    ok = dev < limit
    report(5, "K_S lifetime scale", ok, f"|mean - 1e-10 s| = {dev:.3g} < {limit:.3g}")


def test_criterion_6_branching_fractions(default_params):
    n = 1_000_000
    _, comps, chans = sample_decays(
        KaonState(1.0, 1.0), default_params, n, np.random.default_rng(606)
    )
    expected = {}
    for chan, br in default_params.branching_l.items():
        expected[("K_L", chan)] = 0.5 * br
    for chan, br in default_params.branching_s.items():
        expected[("K_S", chan)] = 0.5 * br
    worst = 0.0
    ok = True
    for (comp, chan), p in expected.items():
        got = np.mean((comps == comp) & (chans == chan))
        sigma = math.sqrt(p * (1.0 - p) / n)
        pulls = abs(got - p) / sigma
        worst = max(worst, pulls)
        if pulls > 3.0:
            ok = False
    report(6, "branching fractions", ok, f"worst pull {worst:.2f} sigma (limit 3)")


def test_criterion_7_reconstruction(default_beam, default_params):
    start = time.perf_counter()
    # exact round trip with zero smearing
    batch = generate_events(
        default_beam, default_params, 10_000, np.random.default_rng(707)
    )
    batch = smear_batch(batch, DetectorSpec(0.0, 0.0, seed=708))
    rec = reconstruct_batch(batch, default_params, 5.0, 10.0)
    sel = rec["usable"]
    idx = rec["index"][sel]
    scale = np.linalg.norm(batch.vertex[idx], axis=1).max() + 1.0
    v_err = np.max(np.linalg.norm(rec["vertex"][sel] - batch.vertex[idx], axis=1))
    t_err = np.max(np.abs(rec["proper_time"][sel] / batch.proper_time[idx] - 1.0))
    roundtrip_ok = v_err < 1e-9 * scale and t_err < 1e-9

    # smeared contamination vs the analytic decay-law expectation
    n = 1_000_000
    big = generate_events(default_beam, default_params, n, np.random.default_rng(709))
    run = analyze_run(
        big, default_params, DetectorSpec(0.01, 0.001, seed=710), 10.0, 5.0
    )
    expected = run.contamination_expected
    sigma = math.sqrt(expected * (1.0 - expected) / run.n_pass)
    pulls = abs(run.contamination - expected) / sigma
    elapsed = time.perf_counter() - start
    ok = roundtrip_ok and pulls < 3.0 and elapsed < 300.0
    report(
        7,
        "reconstruction round trip + contamination",
        ok,
        f"vertex err {v_err / scale:.2g}, tau err {t_err:.2g}, "
        f"contamination {run.contamination:.4f} vs {expected:.4f} "
        f"({pulls:.2f} sigma), {elapsed:.1f}s",
    )


def test_criterion_8_spreading_budget(default_beam, default_params):
    worst = 0.0
    for sigma0, t in ((1.0, 1.0), (1.0, 3.0), (0.5, 1.0)):
        packet = PacketSpec(sigma0=sigma0, mass=1.0)
        half = 8.0 * analytic_sigma(packet, t) + 6.0 * sigma0
        n = int(2 * half / (sigma0 / 12.0)) | 1
        got = numerical_sigma(packet, t, Grid1D(-half, half, n), n_steps=500)
        worst = max(worst, abs(got / analytic_sigma(packet, t) - 1.0))
    matrix_ok = worst < 0.01

    budget = error_budget(
        PacketSpec(1e-10, default_params.m_pi_charged, momentum=200.0),
        [0.1, 0.3, 1.0, 3.0, 10.0],
        default_beam,
        default_params,
    )
    has_ten_m = budget.rows[-1].flight_distance == 10.0
    comparison_ok = all(
        r.exceeds_signal_scale == (r.relative_vertex_error > CP_SIGNAL_SCALE)
        for r in budget.rows
    )
    ok = matrix_ok and has_ten_m and comparison_ok
    report(
        8,
        "spreading oracle + budget",
        ok,
        f"worst sigma mismatch {worst:.3%}, 10 m row {has_ten_m}, "
        f"1e-3 comparison column {comparison_ok}",
    )


def test_criterion_9_determinism(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[run]\nseed = 909\nn_events = 100000\n")
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    code1 = main(["experiment", "--config", str(cfg), "--out", str(out1)])
    code2 = main(["experiment", "--config", str(cfg), "--out", str(out2)])
    identical = all(
        (out1 / name).read_bytes() == (out2 / name).read_bytes()
        for name in ("events.jsonl", "report.json", "report.txt")
    )
    sane = json.loads((out1 / "report.json").read_text())["n_generated"] == 100000
    ok = code1 == 0 and code2 == 0 and identical and sane
    report(9, "determinism", ok, f"byte-identical reruns {identical}")
