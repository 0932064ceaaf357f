"""Turbulence-aware vs naive controller across seeds.

    python3 scripts/compare_sweep.py static_aware --seeds 10 --out runs/sweep.csv
"""

import argparse
import csv
import math

from landsim.cli import resolve_scenario
from landsim.sim import run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("scenario")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--out")
    ns = ap.parse_args()
    rows = []
    for seed in range(ns.seeds):
        r = {"seed": seed}
        for mode in ("aware", "naive"):
            _, m = run_scenario(resolve_scenario(ns.scenario, seed, mode))
            r[f"{mode}_landing_time"] = m["landing_time_since_detection"]
            r[f"{mode}_rmse_wind_axis"] = m["tracking_rmse_wind_axis"]
        la, ln = (math.inf if r[k] is None else r[k] for k in ("aware_landing_time", "naive_landing_time"))
        ra, rn = r["aware_rmse_wind_axis"], r["naive_rmse_wind_axis"]
        r["rmse_ratio"] = ra / rn if ra is not None and rn else None
        r["ordering_holds"] = la < ln and r["rmse_ratio"] is not None and r["rmse_ratio"] <= 0.5
        rows.append(r)
        print(r)
    print(f"ordering holds on {sum(r['ordering_holds'] for r in rows)}/{len(rows)} seeds")
    if ns.out:
        with open(ns.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
