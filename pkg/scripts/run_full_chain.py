#!/usr/bin/env python3
"""Run the full pipeline from one config: wave-packet evolution snapshots,
trajectory ensemble, decay experiment, and the spreading error budget.

Each stage writes into its own subdirectory of --out.
"""

import argparse
import sys
from pathlib import Path

from kaonlab.cli import main as kaonlab_main

STAGES = ("evolve", "trajectories", "experiment", "spreading")


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--config",
        default=str(Path(__file__).resolve().parents[1] / "configs" / "default.cfg"),
        help="run config (INI or JSON)",
    )
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", default="full_chain_out", help="output directory")
    return parser.parse_args()


def main():
    args = parse_args()
    for stage in STAGES:
        argv = ["--config", args.config, "--out", str(Path(args.out) / stage)]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        print(f"== {stage} ==")
        code = kaonlab_main([stage] + argv)
        if code != 0:
            return code
    print(f"all stages written under {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
