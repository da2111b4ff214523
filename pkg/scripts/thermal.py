"""Finite-temperature resource state against iid Z noise of the same strength.

    python3 scripts/thermal.py [--beta 2 4 6] [-R 8] [-L 1] [--trials 2000]
"""

import argparse

from artifact.experiment import wilson
from artifact.noise import NoiseSpec
from artifact.protocol import ProtocolConfig, build_c_bell, thermal_noise_strength
from artifact.sim import run_trials


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--beta", type=float, nargs="+", default=[2.0, 4.0, 6.0])
    ap.add_argument("-R", type=int, default=8)
    ap.add_argument("-L", type=int, default=1)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    art = build_c_bell(ProtocolConfig(R=args.R, L=args.L))
    print("beta,p,kind,successes,trials,wilson_lo,wilson_hi")
    for beta in args.beta:
        p = thermal_noise_strength(beta)
        for i, kind in enumerate(("thermal", "iid_z")):
            res = run_trials(art, NoiseSpec(kind, p=p), args.seed + i, 0, args.trials)
            k = sum(r.success for r in res)
            lo, hi = wilson(k, args.trials)
            print(f"{beta},{p:.6e},{kind},{k},{args.trials},{lo:.5f},{hi:.5f}")


if __name__ == "__main__":
    main()
