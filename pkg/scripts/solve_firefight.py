"""Solve the built-in firefighting scenario across horizons and report how
the initial-state Pareto front and its hypervolume evolve.

Usage: python scripts/solve_firefight.py [--scenario firefight]
       [--horizons 1,2,4,8,16,32,50] [--gamma 1.0]
"""

import argparse
import time

from valence.scenario_io import BUILTIN_SCENARIOS
from valence.solver import SolveConfig, default_reference, hypervolume, pmovi


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--scenario", default="firefight",
                        choices=sorted(BUILTIN_SCENARIOS))
    parser.add_argument("--horizons", default="1,2,4,8,16,32,50")
    parser.add_argument("--gamma", type=float, default=1.0)
    args = parser.parse_args()

    model = BUILTIN_SCENARIOS[args.scenario]()
    print(f"scenario {model.name}: {model.state_count()} states, "
          f"{len(model.actions)} actions, values "
          f"{', '.join(model.value_names)}")
    print(f"{'H':>4} {'sweeps':>6} {'|front|':>7} {'hypervolume':>12} "
          f"{'seconds':>8}   front at initial state")
    for horizon in (int(h) for h in args.horizons.split(",")):
        config = SolveConfig(gamma=args.gamma, horizon=horizon)
        start = time.monotonic()
        solution = pmovi(model, config)
        elapsed = time.monotonic() - start
        front = solution.front_at(model.initial_state)
        reference = default_reference(model, config)
        hv = hypervolume(front, reference)
        shown = ", ".join(
            "(" + ", ".join(f"{x:.3g}" for x in v) + ")" for v in front[:4])
        if len(front) > 4:
            shown += ", ..."
        print(f"{horizon:>4} {solution.sweeps:>6} {len(front):>7} "
              f"{hv:>12.4f} {elapsed:>8.2f}   {shown}")


if __name__ == "__main__":
    main()
