"""Compare the two shipped standard operating procedures on the built-in
firefighting scenario: how much of the unrestricted Pareto front does each
protocol preserve, and which dominates the other?

Usage: python scripts/protocol_study.py [--gamma 1.0] [--horizon 50]
"""

import argparse
from importlib import resources

from valence.protocol import compare_protocols, load_protocol
from valence.scenario_io import builtin_firefight, scenario_hash
from valence.solver import SolveConfig


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--gamma", type=float, default=1.0)
    parser.add_argument("--horizon", type=int, default=50)
    args = parser.parse_args()

    model = builtin_firefight()
    assets = resources.files("valence").joinpath("assets")
    safety = load_protocol(assets / "sop-safety-first.protocol.json", model)
    rapid = load_protocol(assets / "sop-rapid-entry.protocol.json", model)
    config = SolveConfig(gamma=args.gamma, horizon=args.horizon)
    comparison = compare_protocols(model, safety, rapid, config,
                                   scenario_hash=scenario_hash(model))

    for ev in (comparison.evaluation_a, comparison.evaluation_b):
        kept = ev.hypervolume / ev.unrestricted_hypervolume
        print(f"{ev.protocol_name}:")
        print(f"  removed transitions: {ev.removed_transitions}")
        print(f"  hypervolume kept:    {kept:.1%} "
              f"({ev.hypervolume:.2f} of {ev.unrestricted_hypervolume:.2f})")
        for value, best in ev.per_value_max.items():
            print(f"  best {value}: {best:.3g}")
        print(f"  front: " + "; ".join(
            ", ".join(f"{name}={x:.3g}" for name, x in
                      zip(model.value_names, v))
            for v in ev.restricted_front))
    a, b = safety.name, rapid.name
    print(f"{a} outcomes dominated by {b}: "
          f"{len(comparison.a_members_dominated_by_b)}")
    print(f"{b} outcomes dominated by {a}: "
          f"{len(comparison.b_members_dominated_by_a)}")


if __name__ == "__main__":
    main()
