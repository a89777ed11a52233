"""Run every convex-domain experiment on the unit square and save reports.

Usage: python scripts/run_square.py [outdir] [--h H] [--seed N]
"""

import argparse
import sys

from fisherflow.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("outdir", nargs="?", default="runs/square")
    ap.add_argument("--h", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    import json
    import os
    import tempfile

    spec = {"kind": "rectangle", "h": args.h, "width": 1.0, "height": 1.0}
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
        json.dump(spec, f)
        spec_path = f.name
    try:
        rc = 0
        for exp in (
            "fisher_convex",
            "exact_chain_rule",
            "upper_gradient",
            "edi",
            "wasserstein_contraction",
            "gradient_estimate",
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
