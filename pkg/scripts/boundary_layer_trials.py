"""Closed-loop boundary-layer trials in the blower jet.

    python3 scripts/boundary_layer_trials.py --trials 100 --tau-att 0.15
    python3 scripts/boundary_layer_trials.py --tau-att 0     # lag-free plant
"""

import argparse

import numpy as np

from landsim.experiments import boundary_layer_trial


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--tau-att", type=float, default=0.15)
    ns = ap.parse_args()
    res = [boundary_layer_trial(s, tau_att=ns.tau_att) for s in range(ns.trials)]
    s = np.array([r.max_s_over_phi for r in res])
    e = np.array([r.max_error_over_bound for r in res])
    print(f"tau_att {ns.tau_att}: max |s|/phi {s.max():.3f} (trial {s.argmax()}), "
          f"max error/(phi/lam) {e.max():.3f}, trials over 1.05: {int(np.sum((s > 1.05) | (e > 1.05)))}")
    for i in np.argsort(s)[::-1][:5]:
        print(f"  trial {i}: |s|/phi {s[i]:.3f}, error ratio {e[i]:.3f}")


if __name__ == "__main__":
    main()
