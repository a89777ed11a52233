"""Run the nonconvex-domain experiments on the three-petal star and save
reports.

Usage: python scripts/run_star.py [outdir] [--h H] [--seed N]
"""

import argparse
import json
import os
import sys
import tempfile

from fisherflow.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("outdir", nargs="?", default="runs/star")
    ap.add_argument("--h", type=float, default=0.08)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    spec = {"kind": "polar_star", "h": args.h, "r0": 1.0, "a": 0.5, "k": 3}
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
        json.dump(spec, f)
        spec_path = f.name
    try:
        rc = cli_main(["mesh", "--spec", spec_path, "--out", args.outdir])
        for exp in (
            "fisher_nonconvex",
            "wasserstein_contraction",
            "gradient_estimate",
            "porous_fisher",
        ):
            rc |= cli_main(
                ["verify", "--exp", exp, "--spec", spec_path,
                 "--out", args.outdir, "--seed", str(args.seed)]
            )
        return rc
    finally:
        os.unlink(spec_path)


if __name__ == "__main__":
    sys.exit(main())
