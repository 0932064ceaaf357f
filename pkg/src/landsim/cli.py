"""Command line entry point.

Subcommands::

    landsim run <scenario.json> [--seed N] [--mode aware|naive] [--out DIR]
    landsim batch <dir> [--parallel] [--workers N] [--out DIR]
    landsim compare <scenario.json> [--seed N] [--out DIR]
    landsim qp-debug <problem.json> [--tol T] [--out FILE]

A bare bundled scenario name (``static_aware``) is accepted wherever a path is.
Exit codes: 0 on success, 1 on configuration errors, 2 on a simulation fault.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from landsim.errors import ConfigError
from landsim.metrics import METRIC_KEYS, write_metrics_json, write_outputs
from landsim.qpsolver import QpProblem, kkt_residuals, solve_qp
from landsim.scenario import Scenario, bundled_scenario_path, load_scenario
from landsim.sim import run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_FAULT = 0, 1, 2


def resolve_scenario(arg: str, seed: int | None = None, mode: str | None = None) -> Scenario:
    path = Path(arg)
    if not path.exists() and path.suffix == "" and bundled_scenario_path(arg).exists():
        path = bundled_scenario_path(arg)
    scn = load_scenario(path)
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if mode is not None:
        overrides["controller_mode"] = mode
    return scn.replace(**overrides) if overrides else scn


def _run_to_dir(scn: Scenario, out: Path) -> dict:
    log, metrics = run_scenario(scn)
    write_outputs(log, metrics, out)
    return metrics


def _batch_job(args) -> tuple[str, dict | None, str | None]:
    path, out = args
    try:
        scn = load_scenario(path)
    except ConfigError as exc:
        return Path(path).stem, None, str(exc)
    return Path(path).stem, _run_to_dir(scn, Path(out) / Path(path).stem), None


def cmd_run(ns) -> int:
    scn = resolve_scenario(ns.scenario, ns.seed, ns.mode)
    out = Path(ns.out) if ns.out else Path("runs") / f"{Path(ns.scenario).stem}_seed{scn.seed}"
    metrics = _run_to_dir(scn, out)
    print(json.dumps({k: metrics[k] for k in METRIC_KEYS}, indent=2))
    return EXIT_FAULT if metrics["fault"] else EXIT_OK


def cmd_batch(ns) -> int:
    files = sorted(Path(ns.dir).glob("*.json"))
    if not files:
        raise ConfigError(f"no scenario files in {ns.dir}")
    out = Path(ns.out) if ns.out else Path("runs") / "batch"
    jobs = [(str(f), str(out)) for f in files]
    if ns.parallel:
        with ProcessPoolExecutor(max_workers=ns.workers) as ex:
            results = list(ex.map(_batch_job, jobs))
    else:
        results = [_batch_job(j) for j in jobs]
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("file",) + METRIC_KEYS + ("error",))
        for stem, metrics, err in results:
            m = metrics or {}
            w.writerow([stem] + ["" if m.get(k) is None else m.get(k) for k in METRIC_KEYS] + [err or ""])
    for stem, metrics, err in results:
        status = err or ("fault" if metrics["fault"] else "success" if metrics["success"] else "no landing")
        print(f"{stem}: {status}")
    if any(err for _, _, err in results):
        return EXIT_CONFIG
    return EXIT_FAULT if any(m["fault"] for _, m, _ in results) else EXIT_OK


def _landing_time(m: dict) -> float:
    t = m["landing_time_since_detection"]
    return math.inf if t is None else t


def cmd_compare(ns) -> int:
    base = resolve_scenario(ns.scenario, ns.seed)
    out = Path(ns.out) if ns.out else Path("runs") / f"compare_{Path(ns.scenario).stem}_seed{base.seed}"
    results = {}
    for mode in ("aware", "naive"):
        results[mode] = _run_to_dir(base.replace(controller_mode=mode), out / mode)
    aware, naive = results["aware"], results["naive"]
    rw_a, rw_n = aware["tracking_rmse_wind_axis"], naive["tracking_rmse_wind_axis"]
    summary = {
        "scenario": base.name,
        "seed": base.seed,
        "aware": {k: aware[k] for k in METRIC_KEYS},
        "naive": {k: naive[k] for k in METRIC_KEYS},
        "aware_faster": _landing_time(aware) < _landing_time(naive),
        "wind_axis_rmse_ratio": (rw_a / rw_n) if rw_a is not None and rw_n else None,
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return EXIT_FAULT if aware["fault"] or naive["fault"] else EXIT_OK


def cmd_qp_debug(ns) -> int:
    try:
        problem = QpProblem.from_dict(json.loads(Path(ns.problem).read_text()))
    except OSError as exc:
        raise ConfigError(f"cannot read {ns.problem}: {exc.strerror}") from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{ns.problem}: {exc}") from None
    sol = solve_qp(problem, tol=ns.tol)
    primal, dual, comp = kkt_residuals(problem, sol)
    dump = {
        "problem": problem.to_dict(),
        "status": sol.status,
        "axis_status": list(sol.axis_status),
        "iterations": sol.iterations,
        "polished": sol.polished,
        "objective": sol.objective,
        "residuals": {"primal": primal, "dual": dual, "complementarity": comp},
        "states": np.asarray(sol.states).tolist(),
        "jerks": np.asarray(sol.jerks).tolist(),
    }
    text = json.dumps(dump, indent=2)
    if ns.out:
        Path(ns.out).write_text(text + "\n")
        print(json.dumps({k: dump[k] for k in ("status", "iterations", "residuals")}, indent=2))
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="landsim", description="Quadrotor landing-on-platform simulator")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("scenario")
    r.add_argument("--seed", type=int)
    r.add_argument("--mode", choices=("aware", "naive"))
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="run every scenario JSON in a directory")
    b.add_argument("dir")
    b.add_argument("--parallel", action="store_true")
    b.add_argument("--workers", type=int)
    b.add_argument("--out")
    b.set_defaults(func=cmd_batch)

    c = sub.add_parser("compare", help="turbulence-aware vs naive controller on one seed")
    c.add_argument("scenario")
    c.add_argument("--seed", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    q = sub.add_parser("qp-debug", help="solve a QP problem JSON and dump solution and residuals")
    q.add_argument("problem")
    q.add_argument("--tol", type=float, default=1e-6)
    q.add_argument("--out")
    q.set_defaults(func=cmd_qp_debug)
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
