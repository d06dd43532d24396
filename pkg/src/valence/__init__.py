"""Value-aligned decision training over multi-objective Markov decision
processes: scenario engine, Pareto front solving, trajectory debriefs, deontic
protocol evaluation, and a session service."""

from .model import (ScenarioModel, StateVector, ValueVector, TransitionOutcome,
                    enumerate_states, is_terminal, available_actions,
                    alignment, alignment_vector, step, successor_distribution)
from .scenario_io import (builtin_firefight, builtin_firefight_stochastic,
                          load_scenario, parse_scenario, serialize_scenario,
                          scenario_hash, Diagnostic)
from .solver import (SolveConfig, SolutionFront, PolicyTrace, pareto_prune,
                     pmovi, extract_policy, hypervolume)
from .assessment import (Trajectory, StepRecord, AssessmentReport,
                         score_trajectory, compare_to_front, build_report)
from .protocol import (Protocol, DeonticRule, validate_protocol,
                       allowed_actions, evaluate_protocol, compare_protocols)

__version__ = "0.1.0"

__all__ = [
    "ScenarioModel", "StateVector", "ValueVector", "TransitionOutcome",
    "enumerate_states", "is_terminal", "available_actions", "alignment",
    "alignment_vector", "step", "successor_distribution",
    "builtin_firefight", "builtin_firefight_stochastic", "load_scenario",
    "parse_scenario", "serialize_scenario", "scenario_hash", "Diagnostic",
    "SolveConfig", "SolutionFront", "PolicyTrace", "pareto_prune", "pmovi",
    "extract_policy", "hypervolume",
    "Trajectory", "StepRecord", "AssessmentReport", "score_trajectory",
    "compare_to_front", "build_report",
    "Protocol", "DeonticRule", "validate_protocol", "allowed_actions",
    "evaluate_protocol", "compare_protocols",
]
