"""Variance of the Horvitz-Thompson estimator against sample size.

Independent designs shrink like 1/n (normalized variance flat); the global
coin does not shrink at all.

    python scripts/variance_scaling.py [--reps 400] [--sizes 100 1000 10000]
"""

import argparse

from designbench import assignment as A
from designbench.montecarlo import Design, IidN, variance_scaling_probe
from designbench.population import make_paper_population


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--reps", type=int, default=400)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10000])
    args = parser.parse_args()

    pop = make_paper_population()
    mechanisms = {
        "global coin 1/2": A.global_coin(0.5),
        "constant 0.3": A.constant_prob(0.3),
        "(3 - y1)/4": A.confounded_mechanism(pop),
    }
    print(f"{'mechanism':<18} {'n':>7} {'mean':>9} {'variance':>11} {'n*variance':>11}")
    for label, mech in mechanisms.items():
        results = variance_scaling_probe(lambda n: Design(pop, mech, IidN(n)), "ht", args.sizes, args.reps, args.seed)
        for n, r in results.items():
            print(f"{label:<18} {n:>7} {r.mean:>9.4f} {r.variance:>11.6f} {r.normalized_variance:>11.4f}")


if __name__ == "__main__":
    main()
