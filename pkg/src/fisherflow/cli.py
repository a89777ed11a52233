"""Command-line entry point.

Exit codes: 0 success, 1 experiment verdict failure, 2 usage or validation
error, 3 internal numeric failure.  All artifacts land under one output
directory (flag `--out`, or the FISHERFLOW_OUT environment variable).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .errors import NumericsError, ValidationError
from .functionals import Density
from .heat import HeatOperator
from .jko import JkoConfig, jko_curve
from .mesh import boundary_curvature, build_mesh, load_domain_spec
from .transport import build_cost_table
from .verify import EXPERIMENTS, ExperimentConfig, initial_density, run_experiment

_EXPERIMENT_NOTES = {
    "fisher_convex": "Fisher information decay on convex domains",
    "fisher_nonconvex": "Fisher growth envelope on nonconvex domains",
    "upper_gradient": "sqrt-Fisher strong upper gradient inequality",
    "exact_chain_rule": "entropy chain rule and dissipation equality",
    "edi": "energy dissipation inequality on heat and proximal curves",
    "wasserstein_contraction": "Wasserstein contraction/expansion of the flow",
    "gradient_estimate": "pointwise semigroup gradient estimate",
    "porous_fisher": "porous-medium Fisher rate fit",
}


def _out_dir(args) -> str:
    root = args.out or os.environ.get("FISHERFLOW_OUT", "runs")
    os.makedirs(root, exist_ok=True)
    return root


def _write_manifest(out: str, args, started: float) -> None:
    manifest = {
        "command": " ".join(sys.argv[1:]),
        "config": getattr(args, "spec", None),
        "output": out,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "started": started,
        "finished": time.time(),
    }
    with open(os.path.join(out, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=1)


def cmd_mesh(args) -> int:
    spec = load_domain_spec(args.spec)
    out = _out_dir(args)
    started = time.time()
    mesh = build_mesh(spec)
    cb = boundary_curvature(spec)
    with open(os.path.join(out, "mesh.json"), "w") as f:
        json.dump(
            {
                "spec": spec.to_dict(),
                "checksum": mesh.checksum,
                "n_vertices": int(mesh.n_vertices),
                "n_triangles": int(len(mesh.triangles)),
                "area": mesh.area_total,
                "is_m_matrix": bool(mesh.is_m_matrix),
                "vertices": mesh.vertices.tolist(),
                "triangles": mesh.triangles.tolist(),
            },
            f,
        )
    with open(os.path.join(out, "curvature.json"), "w") as f:
        json.dump(
            {
                "S": cb.S,
                "K": cb.K,
                "kappa_min": cb.kappa_min,
                "theta_at_min": cb.theta_at_min,
                "mesh_checksum": mesh.checksum,
            },
            f,
            indent=1,
        )
    _write_manifest(out, args, started)
    print(f"mesh {mesh.checksum}: {mesh.n_vertices} vertices, S={cb.S:.6g}")
    return 0


def _run_one(name: str, cfg: ExperimentConfig, out: str):
    report = run_experiment(name, cfg)
    report.save(
        os.path.join(out, f"{name}.json"), os.path.join(out, f"{name}.csv")
    )
    return report


def cmd_verify(args) -> int:
    if args.list:
        for name in sorted(EXPERIMENTS):
            print(f"{name:24s} {_EXPERIMENT_NOTES[name]}")
        return 0
    if args.exp is None or args.spec is None:
        print("verify requires --exp and --spec (or --list)", file=sys.stderr)
        return 2
    names = sorted(EXPERIMENTS) if args.exp == "all" else [args.exp]
    for n in names:
        if n not in EXPERIMENTS:
            print(f"unknown experiment {n!r}; try --list", file=sys.stderr)
            return 2
    spec = load_domain_spec(args.spec)
    out = _out_dir(args)
    started = time.time()
    cfg = ExperimentConfig(domain=spec, seed=args.seed)
    # with --exp all, experiments that need the other convexity class are
    # skipped with a note instead of aborting the sweep
    skip_inapplicable = args.exp == "all"
    reports = []
    skipped = []
    if args.jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = [(n, pool.submit(_run_one, n, cfg, out)) for n in names]
            pending = [(n, fut.result) for n, fut in results]
    else:
        pending = [(n, (lambda n=n: _run_one(n, cfg, out))) for n in names]
    for n, run in pending:
        try:
            reports.append(run())
        except ValidationError as exc:
            if not skip_inapplicable:
                raise
            skipped.append((n, str(exc)))
    _write_manifest(out, args, started)
    for name, why in skipped:
        print(f"SKIP {name}: {why}")
    failed = False
    for rep in reports:
        for v in rep.verdicts:
            mark = "PASS" if v.passed else "FAIL"
            print(
                f"{mark} {rep.experiment}/{v.name}: "
                f"measured {v.measured:.6g} threshold {v.threshold:.6g}"
            )
            failed |= not v.passed
    return 1 if failed else 0


def cmd_flow(args) -> int:
    spec = load_domain_spec(args.spec)
    out = _out_dir(args)
    started = time.time()
    mesh = build_mesh(spec)
    rho0 = initial_density(mesh, args.datum, args.seed)
    if args.flow == "heat":
        if args.dt is None:
            print("heat flow requires --dt", file=sys.stderr)
            return 2
        op = HeatOperator(mesh)
        n = max(1, int(round(args.T / args.dt)))
        samples = np.arange(n + 1) * args.dt
        curve = op.evolve(rho0, args.T, args.dt, samples[samples <= args.T])
    else:
        if args.tau is None:
            print("jko flow requires --tau", file=sys.stderr)
            return 2
        if abs(round(args.T / args.tau) * args.tau - args.T) > 1e-9:
            print("T must be an integer multiple of tau", file=sys.stderr)
            return 2
        cost = build_cost_table(mesh)
        cfg = JkoConfig(tau=args.tau, epsilon=args.eps)
        curve = jko_curve(rho0, args.T, cost, cfg)
    curve.save(os.path.join(out, "curve"))
    _write_manifest(out, args, started)
    print(f"{args.flow} curve: {len(curve)} samples to T={args.T}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fisherflow",
        description="Numerical laboratory for entropy and Fisher information "
        "along the Neumann heat flow",
    )
    sub = p.add_subparsers(dest="command")

    pm = sub.add_parser("mesh", help="build a mesh and its curvature report")
    pm.add_argument("--spec", required=True)
    pm.add_argument("--out")
    pm.add_argument("--seed", type=int, default=7)
    pm.set_defaults(func=cmd_mesh)

    pv = sub.add_parser("verify", help="run theorem-checking experiments")
    pv.add_argument("--exp")
    pv.add_argument("--spec")
    pv.add_argument("--out")
    pv.add_argument("--seed", type=int, default=7)
    pv.add_argument("--jobs", type=int, default=1)
    pv.add_argument("--list", action="store_true")
    pv.set_defaults(func=cmd_verify)

    pf = sub.add_parser("flow", help="run a heat or proximal-scheme evolution")
    pf.add_argument("--spec", required=True)
    pf.add_argument("--flow", choices=["heat", "jko"], required=True)
    pf.add_argument("--T", type=float, required=True)
    pf.add_argument("--dt", type=float)
    pf.add_argument("--tau", type=float)
    pf.add_argument("--eps", type=float, default=1e-3)
    pf.add_argument("--datum", default="eigen")
    pf.add_argument("--out")
    pf.add_argument("--seed", type=int, default=7)
    pf.set_defaults(func=cmd_flow)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
