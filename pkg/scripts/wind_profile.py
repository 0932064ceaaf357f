"""Tabulate the blower jet: mean and std vs distance, plus one gust realisation.

    python3 scripts/wind_profile.py --out runs/wind.csv
"""

import argparse
import csv

import numpy as np

from landsim.scenario import DEFAULT_WIND_SAMPLES
from landsim.wind import WindProfile, WindState, step_gust, wind_params_at, wind_velocity


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--out")
    ns = ap.parse_args()
    prof = WindProfile(DEFAULT_WIND_SAMPLES, [-1.0, 0.0, 0.0])
    state = WindState(0.0, np.random.default_rng(ns.seed), prof.correlation_time_s)
    rows = []
    for d in np.arange(0.0, 4.5 + 1e-9, 0.05):
        mean, std = wind_params_at(prof, d)
        step_gust(state, std, ns.dt)
        speed = -wind_velocity(prof, state, d, prof.direction)[0]
        rows.append((round(float(d), 3), mean, std, speed))
    out = open(ns.out, "w", newline="") if ns.out else None
    w = csv.writer(out or __import__("sys").stdout, lineterminator="\n")
    w.writerow(("distance_m", "mean_mps", "std_mps", "sample_mps"))
    w.writerows(rows)
    if out:
        out.close()


if __name__ == "__main__":
    main()
