#!/usr/bin/env python3
"""Scan the assumed initial packet width sigma0 and report, per frame
convention, the largest relative vertex error over the flight table and
whether it ever reaches the 1e-3 scale of the CP-violating signal.
"""

import argparse
import sys
from pathlib import Path

from kaonlab.config import load_config
from kaonlab.spreading import CP_SIGNAL_SCALE, FRAME_CONVENTIONS, PacketSpec, error_budget


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--config",
        default=str(Path(__file__).resolve().parents[1] / "configs" / "default.cfg"),
    )
    parser.add_argument(
        "--sigma0",
        default="1e-15,1e-13,1e-11,1e-10,1e-9",
        help="comma-separated packet widths in meters",
    )
    return parser.parse_args()


def main():
    args = parse_args()
    config = load_config(args.config)
    sp = config.section("spreading")
    beam = config.beam()
    params = config.kaon_params()
    widths = [float(s) for s in args.sigma0.split(",")]

    print(f"flight table: {sp['distances_m']} m, signal scale {CP_SIGNAL_SCALE}")
    print(f"{'sigma0 [m]':>12} {'frame':>26} {'max dL/L':>12} {'crossover [m]':>14} "
          f"{'>1e-3?':>7}")
    for sigma0 in widths:
        packet = PacketSpec(sigma0, sp["mass_mev"], momentum=sp["momentum_mev_c"])
        for frame in FRAME_CONVENTIONS:
            report = error_budget(
                packet,
                sp["distances_m"],
                beam,
                params,
                constants=config.constants(),
                frame_convention=frame,
            )
            worst = max(r.relative_vertex_error for r in report.rows)
            flag = "yes" if any(r.exceeds_signal_scale for r in report.rows) else "no"
            print(
                f"{sigma0:>12.3g} {frame:>26} {worst:>12.3g} "
                f"{report.crossover_distance:>14.3g} {flag:>7}"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
