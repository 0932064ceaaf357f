"""Run metrics and log serialisation."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from landsim.sim import EVENT_COLUMNS, LOG_COLUMNS, SimLog

METRIC_KEYS = (
    "scenario", "seed", "controller_mode",
    "first_detection_time", "landing_time_since_detection", "touchdown_rel_speed", "touchdown_offset",
    "tracking_rmse_xyz", "tracking_rmse_wind_axis", "max_abs_s_over_phi", "success", "fault",
)


def _parse_detail(detail: str) -> dict:
    out = {}
    for part in detail.split():
        k, _, v = part.partition("=")
        out[k] = float(v)
    return out


def compute_metrics(log: SimLog, scenario=None) -> dict:
    """Headline numbers of one run.

    Tracking quantities are taken over Landing-mode control ticks; touchdown
    quantities at the End transition. ``landing_time_since_detection`` is
    ``None`` unless the run succeeded.
    """
    radius = scenario.success_radius if scenario is not None else log.success_radius
    phi = scenario.gains.phi if scenario is not None else log.phi

    det = log.events_of("detection")
    t_d = det[0][0] if det else None
    td = log.events_of("touchdown")
    touchdown = _parse_detail(td[0][2]) if td else None
    t_end = td[0][0] if td else None

    rmse = rmse_w = max_s = None
    if log.rows:
        mode = log.column("mode")
        sel = mode == "Landing"
        if np.any(sel):
            pos = np.column_stack([log.column(f"quad_p{a}") for a in "xyz"])[sel]
            ref = np.column_stack([log.column(f"ref_p{a}") for a in "xyz"])[sel]
            wdir = np.column_stack([log.column(f"wind_dir_{a}") for a in "xyz"])[sel]
            s = np.column_stack([log.column(f"s_{a}") for a in "xyz"])[sel]
            err = pos - ref
            rmse = float(np.sqrt(np.mean(np.sum(err**2, axis=1))))
            rmse_w = float(np.sqrt(np.mean(np.sum(err * wdir, axis=1) ** 2)))
            max_s = float(np.max(np.abs(s)) / phi)

    offset = touchdown["offset"] if touchdown else None
    success = bool(touchdown is not None and offset <= radius and log.fault is None)
    landing_time = (t_end - t_d) if success and t_d is not None else None
    return {
        "scenario": log.scenario,
        "seed": log.seed,
        "controller_mode": log.controller_mode,
        "first_detection_time": t_d,
        "landing_time_since_detection": landing_time,
        "touchdown_rel_speed": touchdown["rel_speed"] if touchdown else None,
        "touchdown_offset": offset,
        "tracking_rmse_xyz": rmse,
        "tracking_rmse_wind_axis": rmse_w,
        "max_abs_s_over_phi": max_s,
        "success": success,
        "fault": log.fault,
    }


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_log_csv(log: SimLog, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for row in log.rows:
            w.writerow([_fmt(v) for v in row])


def write_events_csv(log: SimLog, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_COLUMNS)
        for t, kind, detail in log.events:
            w.writerow([_fmt(t), kind, detail])


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_metrics_json(metrics: dict, path) -> None:
    ordered = {k: _json_safe(metrics.get(k)) for k in METRIC_KEYS}
    Path(path).write_text(json.dumps(ordered, indent=2) + "\n")


def write_outputs(log: SimLog, metrics: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_log_csv(log, out / "log.csv")
    write_events_csv(log, out / "events.csv")
    write_metrics_json(metrics, out / "metrics.json")
    return out
