"""Monte-Carlo NEES of the platform filter on the turning-platform case.

    python3 scripts/nees_mc.py --runs 100 [--vision]
"""

import argparse

import numpy as np
from scipy.stats import chi2

from landsim.estimator import NoiseConfig
from landsim.experiments import nees_monte_carlo, noise_free_error


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--duration", type=float, default=20.0)
    ap.add_argument("--vision", action="store_true", help="30 Hz vision-grade updates instead of 2 Hz GPS")
    ns = ap.parse_args()
    kw = dict(duration=ns.duration)
    if ns.vision:
        kw.update(update_every=1, R=NoiseConfig().R_vision)
    E = nees_monte_carlo(ns.runs, **kw)
    eps = E.mean(axis=0)
    lo, hi = chi2.ppf([0.025, 0.975], 5 * ns.runs) / ns.runs
    print(f"time-averaged NEES {eps.mean():.3f}, 95% bounds [{lo:.3f}, {hi:.3f}]")
    print(f"fraction of steps inside bounds {np.mean((eps >= lo) & (eps <= hi)):.3f}")
    err = noise_free_error(2.0)
    print(f"noise-free position error at 1 s {err[29]:.2e} m, at 2 s {err[-1]:.2e} m")


if __name__ == "__main__":
    main()
