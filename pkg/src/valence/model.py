"""MOMDP semantics: states, guarded effects, transitions, terminal conditions,
and per-organisational-value alignment scoring of transitions.

States are tuples of domain indices, one per scenario variable, immutable and
hashable.  All models are frozen after construction and safe to share.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional

from .expressions import BindingEnv, Expr, eval_expression

StateVector = tuple[int, ...]
ValueVector = tuple[float, ...]

SUCCESS = "success"
FAILURE = "failure"


class ModelError(ValueError):
    """Unknown names or malformed model pieces."""


class ContractViolation(RuntimeError):
    """An operation was called outside its stated preconditions."""


@dataclass(frozen=True)
class VariableDef:
    name: str
    levels: tuple[str, ...]

    def level_index(self, level: str) -> int:
        try:
            return self.levels.index(level)
        except ValueError:
            raise ModelError(
                f"variable {self.name!r} has no level {level!r}") from None


@dataclass(frozen=True)
class EffectAssign:
    variable: str
    position: int  # variable position in scenario order
    op: str        # "set" | "inc" | "dec"
    amount: int = 0        # for inc/dec
    level_index: int = 0   # for set
    level_name: str = ""   # for set (serialisation)


@dataclass(frozen=True)
class EffectRule:
    guard: Expr  # Bool(True) when unconditional
    assignments: tuple[EffectAssign, ...]
    guard_text: str = "true"


@dataclass(frozen=True)
class ActionOutcome:
    probability: Fraction
    effects: tuple[EffectRule, ...]


@dataclass(frozen=True)
class ActionDef:
    name: str
    applicability: Expr
    outcomes: tuple[ActionOutcome, ...]
    applicability_text: str = "true"


@dataclass(frozen=True)
class TerminalSpec:
    condition: Expr
    label: str  # SUCCESS | FAILURE
    condition_text: str = ""


@dataclass(frozen=True)
class AlignmentCase:
    guard: Expr
    score: Expr
    guard_text: str = ""
    score_text: str = ""


@dataclass(frozen=True)
class AlignmentRuleSet:
    """Ordered first-match-wins scoring rules for one (value, action) pair."""
    cases: tuple[AlignmentCase, ...]
    default: float = 0.0


@dataclass(frozen=True)
class TransitionOutcome:
    next_state: StateVector
    alignment: ValueVector
    terminal: Optional[str]  # SUCCESS | FAILURE | None


@dataclass(frozen=True)
class ScenarioModel:
    name: str
    variables: tuple[VariableDef, ...]
    initial_state: StateVector
    actions: tuple[ActionDef, ...]
    value_names: tuple[str, ...]
    # alignment[value_name][action_name] -> AlignmentRuleSet
    alignment_rules: dict[str, dict[str, AlignmentRuleSet]] = field(hash=False)
    terminals: tuple[TerminalSpec, ...] = ()

    def variable_position(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise ModelError(f"unknown variable {name!r}")

    def action(self, name: str) -> ActionDef:
        for a in self.actions:
            if a.name == name:
                return a
        raise ModelError(f"unknown action {name!r}")

    def binding_env(self) -> BindingEnv:
        return make_binding_env(self.variables)

    def state_from_levels(self, levels: dict[str, str]) -> StateVector:
        return tuple(v.level_index(levels[v.name]) for v in self.variables)

    def levels_of(self, state: StateVector) -> dict[str, str]:
        return {v.name: v.levels[state[i]]
                for i, v in enumerate(self.variables)}

    def state_count(self) -> int:
        n = 1
        for v in self.variables:
            n *= len(v.levels)
        return n


def make_binding_env(variables: tuple[VariableDef, ...]) -> BindingEnv:
    """Level names resolve unqualified when unambiguous across variables."""
    level_index: dict[str, int] = {}
    ambiguous: set[str] = set()
    for v in variables:
        for i, level in enumerate(v.levels):
            if level in level_index and level_index[level] != i:
                ambiguous.add(level)
            level_index[level] = i
    for name in ambiguous:
        del level_index[name]
    return BindingEnv([v.name for v in variables], level_index,
                      frozenset(ambiguous))


def enumerate_states(scenario: ScenarioModel) -> list[StateVector]:
    """Full Cartesian product of variable domains, lexicographic order."""
    states: list[StateVector] = [()]
    for v in scenario.variables:
        states = [s + (i,) for s in states for i in range(len(v.levels))]
    return states


def iter_states(scenario: ScenarioModel) -> Iterator[StateVector]:
    yield from enumerate_states(scenario)


def is_terminal(scenario: ScenarioModel, state: StateVector) -> Optional[str]:
    """Terminal label of a state, if any.  On a tie, failure wins."""
    matched = None
    for spec in scenario.terminals:
        if eval_expression(spec.condition, state):
            if spec.label == FAILURE:
                return FAILURE
            matched = spec.label
    return matched


def available_actions(scenario: ScenarioModel, state: StateVector) -> list[str]:
    """Names of actions whose applicability holds, in declaration order."""
    if is_terminal(scenario, state) is not None:
        raise ContractViolation(
            f"available_actions called on terminal state {state}")
    return [a.name for a in scenario.actions
            if eval_expression(a.applicability, state)]


def alignment(scenario: ScenarioModel, value: str, state: StateVector,
              action: str) -> float:
    """Alignment score of taking `action` in `state`, clamped to [-1, +1].

    Evaluated on the pre-state only; the sampled outcome never matters.
    """
    try:
        rules = scenario.alignment_rules[value]
    except KeyError:
        raise ModelError(f"unknown value {value!r}") from None
    try:
        rule_set = rules[action]
    except KeyError:
        raise ModelError(
            f"value {value!r} has no rules for action {action!r}") from None
    for case in rule_set.cases:
        if eval_expression(case.guard, state):
            score = eval_expression(case.score, state)
            break
    else:
        score = rule_set.default
    return max(-1.0, min(1.0, float(score)))


def alignment_vector(scenario: ScenarioModel, state: StateVector,
                     action: str) -> ValueVector:
    return tuple(alignment(scenario, value, state, action)
                 for value in scenario.value_names)


def apply_effects(scenario: ScenarioModel, state: StateVector,
                  effects: tuple[EffectRule, ...]) -> StateVector:
    """Apply effect rules in order; guards read the pre-state, assignments
    accumulate; increments and decrements clamp to domain bounds."""
    levels = list(state)
    for rule in effects:
        if not eval_expression(rule.guard, state):
            continue
        for a in rule.assignments:
            size = len(scenario.variables[a.position].levels)
            if a.op == "set":
                levels[a.position] = a.level_index
            elif a.op == "inc":
                levels[a.position] = min(size - 1, levels[a.position] + a.amount)
            else:
                levels[a.position] = max(0, levels[a.position] - a.amount)
    return tuple(levels)


def _check_steppable(scenario: ScenarioModel, state: StateVector,
                     action: str) -> ActionDef:
    if is_terminal(scenario, state) is not None:
        raise ContractViolation(f"cannot act in terminal state {state}")
    action_def = scenario.action(action)
    if not eval_expression(action_def.applicability, state):
        raise ContractViolation(
            f"action {action!r} is not applicable in state {state}")
    return action_def


def successor_distribution(
        scenario: ScenarioModel, state: StateVector,
        action: str) -> list[tuple[Fraction, TransitionOutcome]]:
    """All outcomes of (state, action) with exact rational probabilities."""
    action_def = _check_steppable(scenario, state, action)
    reward = alignment_vector(scenario, state, action)
    result = []
    for outcome in action_def.outcomes:
        next_state = apply_effects(scenario, state, outcome.effects)
        result.append((outcome.probability, TransitionOutcome(
            next_state, reward, is_terminal(scenario, next_state))))
    return result


def step(scenario: ScenarioModel, state: StateVector, action: str,
         random_source: random.Random) -> TransitionOutcome:
    """Sample one transition.  Deterministic given the random_source state."""
    action_def = _check_steppable(scenario, state, action)
    outcomes = action_def.outcomes
    if len(outcomes) == 1:
        chosen = outcomes[0]
    else:
        r = random_source.random()
        acc = Fraction(0)
        chosen = outcomes[-1]
        for outcome in outcomes:
            acc += outcome.probability
            if r < acc:
                chosen = outcome
                break
    next_state = apply_effects(scenario, state, chosen.effects)
    return TransitionOutcome(
        next_state,
        alignment_vector(scenario, state, action),
        is_terminal(scenario, next_state))


ActionFilter = Callable[[StateVector], list[str]]


def transition_table(scenario: ScenarioModel,
                     action_filter: Optional[ActionFilter] = None) -> dict:
    """Precomputed dynamics for solvers and oracles.

    Maps each non-terminal state to {action: (reward, [(p, next_state), ...])}
    and each terminal state to its label.
    """
    table: dict[StateVector, object] = {}
    for state in enumerate_states(scenario):
        label = is_terminal(scenario, state)
        if label is not None:
            table[state] = label
            continue
        names = (action_filter(state) if action_filter
                 else available_actions(scenario, state))
        entry = {}
        for name in names:
            dist = successor_distribution(scenario, state, name)
            entry[name] = (
                dist[0][1].alignment,
                [(float(p), out.next_state) for p, out in dist],
            )
        table[state] = entry
    return table
