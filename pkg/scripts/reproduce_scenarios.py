"""Run every built-in scenario and print one line per claim.

    python scripts/reproduce_scenarios.py [--seed 42] [--quick]

``--quick`` divides replications by 10 for a fast smoke run; some Monte Carlo
claims may then fail their tolerances.
"""

import argparse
import sys

from designbench.cli import ScenarioConfig, run_scenario
from designbench.scenarios import SCENARIOS


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()

    failed = 0
    runs = [(name, "iid") for name in SCENARIOS] + [("s6_proportional_vs_constant", "fixed_counts")]
    for name, sampling in runs:
        sc = SCENARIOS[name]
        reps = max(sc.replications // 10, 20) if args.quick else sc.replications
        cfg = ScenarioConfig(name, sc.n, reps, args.seed, None, sampling=sampling)
        doc, status = run_scenario(cfg)
        print(f"== {name} ({sampling}, n={sc.n}, R={reps})")
        for c in doc["claims"]:
            print(f"  {c['status']:<9} {c['claim']}  [{c['detail']}]")
        failed += status != 0
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
