"""Command-line front end: reproducible experiment runs with manifests.

Four subcommands: ``table1`` (analytic two-feeder volumes against the
golden file), ``ccv`` (Monte Carlo volume estimates and convergence
sweeps), ``schedule`` (horizon scheduling with benefit metrics against
the hard-wired and idealised references), and ``size`` (equivalent
capacity search).  Every run writes a manifest recording the command,
parameters, seeds, input digests, and tool version; outputs themselves
carry no timestamps so identical manifests give byte-identical files.

Exit codes: 0 success, 2 argument error, 3 numerical failure, 4 golden
file mismatch.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .analytic import compute_table1
from .capability import CapabilityMode
from .design import (
    Design,
    bisection_sizing,
    fixed_sop,
    golden_sizing,
    idealised,
    uniform_sizing,
)
from .errors import InvalidDesignError, MopError
from .montecarlo import convergence_sweep, estimate_ccv, write_sweep_csv
from .network import _data_dir, bundled_cases, load_network
from .scheduler import (
    SchedulerConfig,
    equivalent_capacity_search,
    relative_metrics,
    schedule_horizon,
    write_schedule_csv,
)
from .scheduler import build_horizon_models

EXIT_OK = 0
EXIT_ARGS = 2
EXIT_NUMERIC = 3
EXIT_GOLDEN = 4

_BUNDLED = ("ieee33_style", "two_bus_fixture", "star_fixture")


def make_design(name: str, n: int | None, m: int) -> Design:
    if name == "fixed":
        return fixed_sop(m)
    if name == "idealised":
        return idealised()
    if n is None:
        raise ValueError(f"--n is required for the {name} strategy")
    return {"uniform": uniform_sizing, "bisection": bisection_sizing, "golden": golden_sizing}[
        name
    ](n)


def _design_label(name: str, n: int | None, m: int) -> str:
    if name == "fixed":
        return f"fixed({m})"
    if name == "idealised":
        return "idealised"
    return f"{name}({n})"


def resolve_network(spec: str, profiles: str | None):
    """Bundled case name, or a JSON path (relative paths also searched in
    $MOPKIT_DATA_DIR)."""
    if spec in _BUNDLED:
        return bundled_cases()[spec], f"bundled:{spec}"
    path = Path(spec)
    if not path.exists():
        data_dir = os.environ.get("MOPKIT_DATA_DIR")
        if data_dir and (Path(data_dir) / spec).exists():
            path = Path(data_dir) / spec
    if not path.exists():
        raise FileNotFoundError(f"network file {spec!r} not found")
    ppath = Path(profiles) if profiles else None
    case = load_network(path, ppath)
    return case, str(path)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(out: Path, command: str, params: dict, inputs: dict, started: float) -> None:
    manifest = {
        "command": command,
        "parameters": params,
        "inputs": inputs,
        "version": __version__,
        "wall_clock_s": time.time() - started,
    }
    write_json(out / f"{command}_manifest.json", manifest)


# ---------------------------------------------------------------------------
# table1
# ---------------------------------------------------------------------------

def load_golden_table(path) -> dict[str, dict[str, float]]:
    text = path.read_text() if hasattr(path, "read_text") else open(path).read()
    out = {}
    for rec in csv.DictReader(text.splitlines()):
        out[rec["design"]] = {k: float(rec[k]) for k in ("mpt", "upf", "statcom", "pq")}
    return out


def cmd_table1(args, out: Path) -> int:
    started = time.time()
    rows = compute_table1(panels=args.panels)
    golden_src = Path(args.golden) if args.golden else _data_dir().joinpath("table1_golden.csv")
    golden = load_golden_table(golden_src)

    with open(out / "table1.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["design", "n", "mpt", "upf", "statcom", "pq"])
        for r in rows:
            writer.writerow(
                [r["design"], r["n"]] + [repr(float(r[k])) for k in ("mpt", "upf", "statcom", "pq")]
            )
    write_json(out / "table1.json", [{k: r[k] for k in r} for r in rows])

    worst = 0.0
    failures = []
    for r in rows:
        for mode in ("mpt", "upf", "statcom", "pq"):
            want = golden[r["design"]][mode]
            got = float(r[mode])
            err = abs(got - want)
            worst = max(worst, err)
            status = "ok" if err <= args.tol else "MISMATCH"
            print(f"{r['design']:>13s} {mode:>8s}: {got:.6f} vs {want:.6f}  [{status}]")
            if err > args.tol:
                failures.append((r["design"], mode, got, want))
    write_manifest(
        out,
        "table1",
        {"panels": args.panels, "tol": args.tol, "golden": str(golden_src)},
        {"golden_sha256": _sha256(golden_src.read_bytes() if hasattr(golden_src, "read_bytes") else open(golden_src, "rb").read())},
        started,
    )
    if failures:
        print(f"{len(failures)} golden cells off by more than {args.tol}")
        return EXIT_GOLDEN
    print(f"all 20 cells within {args.tol} of the golden table (worst {worst:.2e})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ccv
# ---------------------------------------------------------------------------

def cmd_ccv(args, out: Path) -> int:
    started = time.time()
    d = make_design(args.design, args.n, args.m)
    mode = CapabilityMode(args.mode)
    est = estimate_ccv(d, args.m, mode, args.samples, args.seed, workers=args.workers)
    label = _design_label(args.design, args.n, args.m)
    payload = {"design": label, "m": args.m, "mode": args.mode, **est.to_dict()}
    write_json(out / "ccv.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.sweep:
        grid = [int(x) for x in args.sweep.split(",")]
        sweep = convergence_sweep(d, args.m, mode, grid, args.seed, workers=args.workers)
        write_sweep_csv(sweep, out / "ccv_sweep.csv")
    write_manifest(
        out,
        "ccv",
        {
            "design": args.design,
            "n": args.n,
            "m": args.m,
            "mode": args.mode,
            "samples": args.samples,
            "seed": args.seed,
            "sweep": args.sweep,
            "workers": args.workers,
        },
        {},
        started,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# schedule
# ---------------------------------------------------------------------------

def cmd_schedule(args, out: Path) -> int:
    started = time.time()
    case, src = resolve_network(args.network, args.profiles)
    m = case.n_terminals
    d = make_design(args.design, args.n, m)
    label = _design_label(args.design, args.n, m)
    cfg = SchedulerConfig(kappa=args.kappa, device_capacity_kva=args.capacity_kva)
    timesteps = list(range(args.timesteps)) if case.profiles else [None]
    models = build_horizon_models(case, cfg, timesteps)

    runs = {label: schedule_horizon(case, d, cfg, timesteps, models)}
    if label != f"fixed({m})":
        runs[f"fixed({m})"] = schedule_horizon(case, fixed_sop(m), cfg, timesteps, models)
    if label != "idealised":
        runs["idealised"] = schedule_horizon(case, idealised(), cfg, timesteps, models)

    g = {k: r.g_star for k, r in runs.items()}
    met = relative_metrics(g[label], g[f"fixed({m})"], g["idealised"])
    payload = {
        "network": src,
        "design": label,
        "kappa": args.kappa,
        "capacity_kva": args.capacity_kva,
        "g_star_kwh": g,
        "mu": met.mu,
        "eta": met.eta,
        "max_soc_residual": max(r.max_soc_residual for r in runs.values()),
        "max_dc_residual": max(r.max_dc_residual for r in runs.values()),
        "max_model_error": max(r.max_model_error() for r in runs.values()),
    }
    write_json(out / "schedule_metrics.json", payload)
    for k, r in runs.items():
        safe = k.replace("(", "_").replace(")", "")
        write_schedule_csv(r, out / f"schedule_{safe}.csv")
    print(json.dumps(payload, indent=2, sort_keys=True))
    write_manifest(
        out,
        "schedule",
        {
            "network": args.network,
            "design": args.design,
            "n": args.n,
            "kappa": args.kappa,
            "capacity_kva": args.capacity_kva,
            "timesteps": args.timesteps,
        },
        {"network_src": src},
        started,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# size
# ---------------------------------------------------------------------------

def cmd_size(args, out: Path) -> int:
    started = time.time()
    case, src = resolve_network(args.network, args.profiles)
    m = case.n_terminals
    d = make_design(args.design, args.n, m)
    cfg = SchedulerConfig(kappa=args.kappa, device_capacity_kva=args.capacity_kva)
    timesteps = list(range(args.timesteps)) if case.profiles else [None]
    res = equivalent_capacity_search(case, d, args.target_g, cfg, timesteps)
    payload = {
        "network": src,
        "design": _design_label(args.design, args.n, m),
        "target_g_kwh": args.target_g,
        "capacity_kva": res.capacity_kva,
        "g_star_kwh": res.g_star,
        "iterations": res.iterations,
        "trace": [[c, g] for c, g in res.trace],
    }
    write_json(out / "size.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    write_manifest(
        out,
        "size",
        {
            "network": args.network,
            "design": args.design,
            "n": args.n,
            "kappa": args.kappa,
            "capacity_kva": args.capacity_kva,
            "target_g": args.target_g,
            "timesteps": args.timesteps,
        },
        {"network_src": src},
        started,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mopkit", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--workers", type=int, default=1, help="parallel worker cap")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table1", parents=[common],
                       help="analytic two-feeder volumes vs the golden file")
    p.add_argument("--panels", type=int, default=1024)
    p.add_argument("--tol", type=float, default=5e-4)
    p.add_argument("--golden", default=None, help="override the bundled golden CSV")

    p = sub.add_parser("ccv", parents=[common],
                       help="Monte Carlo capability volume estimate")
    p.add_argument("--design", required=True,
                   choices=["fixed", "uniform", "bisection", "golden", "idealised"])
    p.add_argument("--n", type=int, default=None, help="converter count for sizing strategies")
    p.add_argument("--m", type=int, required=True, help="feeder count")
    p.add_argument("--mode", required=True, choices=["pq", "upf", "statcom"])
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweep", default=None, help="comma-separated sample counts for a sweep CSV")

    p = sub.add_parser("schedule", parents=[common],
                       help="loss-minimising horizon schedule and metrics")
    p.add_argument("--network", required=True,
                   help="bundled case name or network JSON path")
    p.add_argument("--profiles", default=None, help="profiles CSV for external networks")
    p.add_argument("--design", required=True,
                   choices=["fixed", "uniform", "bisection", "golden", "idealised"])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--kappa", type=float, default=0.01)
    p.add_argument("--capacity-kva", type=float, default=750.0)
    p.add_argument("--timesteps", type=int, default=24)

    p = sub.add_parser("size", parents=[common],
                       help="equivalent capacity by secant search")
    p.add_argument("--network", required=True)
    p.add_argument("--profiles", default=None)
    p.add_argument("--design", required=True,
                   choices=["fixed", "uniform", "bisection", "golden", "idealised"])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--kappa", type=float, default=0.01)
    p.add_argument("--capacity-kva", type=float, default=100.0)
    p.add_argument("--target-g", type=float, required=True, help="target benefit, kWh/day")
    p.add_argument("--timesteps", type=int, default=24)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.workers < 1:
        parser.error("--workers must be at least 1")
    if args.command == "ccv":
        if args.samples < 1:
            parser.error("--samples must be positive")
        if args.seed < 0 or args.seed >= 2**64:
            parser.error("--seed must be a 64-bit unsigned integer")
        if args.design not in ("fixed", "idealised") and args.n is None:
            parser.error(f"--n is required for the {args.design} strategy")
    if args.command in ("schedule", "size"):
        if args.design not in ("fixed", "idealised") and args.n is None:
            parser.error(f"--n is required for the {args.design} strategy")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    handlers = {"table1": cmd_table1, "ccv": cmd_ccv, "schedule": cmd_schedule, "size": cmd_size}
    try:
        return handlers[args.command](args, out)
    except InvalidDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except MopError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    raise SystemExit(main())
