"""Deontic operational protocols: permit/forbid/oblige rules over states,
action-set restriction, and value-alignment evaluation of whole protocols."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .expressions import (BOOLEAN, ExpressionError, Expr, expr_type,
                          parse_expression, render_expression)
from .model import (ContractViolation, ScenarioModel, StateVector, ValueVector,
                    available_actions, enumerate_states, is_terminal,
                    successor_distribution)
from .scenario_io import Diagnostic, ERROR, WARNING
from .solver import (SolveConfig, SolutionFront, default_reference, dominates,
                     hypervolume, pmovi)

PERMIT = "permit"
FORBID = "forbid"
OBLIGE = "oblige"

PERMISSIVE = "permissive"
RESTRICTIVE = "restrictive"

# modality clash tie-break at equal priority
_MODALITY_RANK = {FORBID: 3, OBLIGE: 2, PERMIT: 1}


@dataclass(frozen=True)
class DeonticRule:
    guard: Expr
    action: str
    modality: str  # permit | forbid | oblige
    priority: int = 0
    guard_text: str = "true"


@dataclass(frozen=True)
class Protocol:
    name: str
    stance: str  # permissive | restrictive
    rules: tuple[DeonticRule, ...]


class ProtocolError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics
                                   if d.severity == ERROR))


def parse_protocol(text: str,
                   scenario: ScenarioModel) -> tuple[Optional[Protocol],
                                                     list[Diagnostic]]:
    """Parse a protocol document against a scenario's vocabulary."""
    diagnostics: list[Diagnostic] = []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        diagnostics.append(Diagnostic(ERROR, "$", exc.msg, "syntax",
                                      line=exc.lineno, column=exc.colno))
        return None, diagnostics
    name = doc.get("name", "")
    stance = doc.get("stance", PERMISSIVE)
    if stance not in (PERMISSIVE, RESTRICTIVE):
        diagnostics.append(Diagnostic(
            ERROR, "$.stance", f"stance must be permissive or restrictive, "
            f"got {stance!r}", "bad-stance"))
    env = scenario.binding_env()
    action_names = {a.name for a in scenario.actions}
    rules = []
    for i, item in enumerate(doc.get("rules", [])):
        loc = f"$.rules[{i}]"
        modality = item.get("modality", "")
        if modality not in _MODALITY_RANK:
            diagnostics.append(Diagnostic(
                ERROR, f"{loc}.modality",
                f"modality must be permit/forbid/oblige, got {modality!r}",
                "bad-modality"))
            continue
        action = item.get("action", "")
        if action not in action_names:
            diagnostics.append(Diagnostic(
                ERROR, f"{loc}.action", f"unknown action {action!r}",
                "unknown-action"))
            continue
        guard_text = item.get("when", "true")
        try:
            guard = parse_expression(guard_text, env)
        except ExpressionError as exc:
            diagnostics.append(Diagnostic(
                ERROR, f"{loc}.when", exc.message, "bad-expression",
                column=exc.column))
            continue
        if expr_type(guard) != BOOLEAN:
            diagnostics.append(Diagnostic(
                ERROR, f"{loc}.when", "guard must be boolean",
                "type-mismatch"))
            continue
        priority = item.get("priority", 0)
        if not isinstance(priority, int):
            diagnostics.append(Diagnostic(
                ERROR, f"{loc}.priority", "priority must be an integer",
                "bad-priority"))
            continue
        rules.append(DeonticRule(guard, action, modality, priority,
                                 str(guard_text)))
    if any(d.severity == ERROR for d in diagnostics):
        return None, diagnostics
    return Protocol(name, stance, tuple(rules)), diagnostics


def load_protocol(path, scenario: ScenarioModel) -> Protocol:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    protocol, diagnostics = parse_protocol(text, scenario)
    if protocol is None:
        raise ProtocolError(diagnostics)
    return protocol


def protocol_to_document(protocol: Protocol) -> dict:
    return {
        "format_version": 1,
        "name": protocol.name,
        "stance": protocol.stance,
        "rules": [{
            "when": render_expression(r.guard),
            "action": r.action,
            "modality": r.modality,
            "priority": r.priority,
        } for r in protocol.rules],
    }


def serialize_protocol(protocol: Protocol) -> str:
    return json.dumps(protocol_to_document(protocol), indent=2) + "\n"


def _firing_rules(protocol: Protocol, state: StateVector,
                  eval_cache: Optional[dict] = None) -> list[DeonticRule]:
    from .expressions import eval_expression
    fired = []
    for rule in protocol.rules:
        if eval_cache is not None:
            key = (id(rule), state)
            hit = eval_cache.get(key)
            if hit is None:
                hit = bool(eval_expression(rule.guard, state))
                eval_cache[key] = hit
        else:
            hit = bool(eval_expression(rule.guard, state))
        if hit:
            fired.append(rule)
    return fired


def _effective_modalities(protocol: Protocol,
                          fired: list[DeonticRule]) -> dict[str, str]:
    """Per action, the winning modality: highest priority wins, ties broken
    forbid > oblige > permit."""
    winner: dict[str, DeonticRule] = {}
    for rule in fired:
        cur = winner.get(rule.action)
        if cur is None or (rule.priority, _MODALITY_RANK[rule.modality]) > \
                (cur.priority, _MODALITY_RANK[cur.modality]):
            winner[rule.action] = rule
    return {a: r.modality for a, r in winner.items()}


def allowed_actions(scenario: ScenarioModel, protocol: Protocol,
                    state: StateVector) -> list[str]:
    """Actions the protocol leaves available in a non-terminal state.

    An active obligation narrows the choice set to the obliged actions;
    otherwise the stance decides: permissive = applicable minus forbidden,
    restrictive = permitted minus forbidden.
    """
    applicable = available_actions(scenario, state)  # raises on terminal
    modality = _effective_modalities(protocol,
                                     _firing_rules(protocol, state))
    obliged = [a for a in applicable if modality.get(a) == OBLIGE]
    if obliged:
        return obliged
    if protocol.stance == PERMISSIVE:
        return [a for a in applicable if modality.get(a) != FORBID]
    return [a for a in applicable if modality.get(a) == PERMIT]


def validate_protocol(scenario: ScenarioModel,
                      protocol: Protocol) -> list[Diagnostic]:
    """Errors: equal-priority oblige+forbid conflicts with a jointly
    satisfiable guard; any reachable non-terminal state left with no allowed
    action.  Warnings: rules that never fire on a reachable state."""
    diagnostics: list[Diagnostic] = []
    rule_fired = [False] * len(protocol.rules)
    rule_pos = {id(r): i for i, r in enumerate(protocol.rules)}
    conflicts_reported = set()

    # BFS over states reachable from the initial state under the protocol
    seen = {scenario.initial_state}
    queue = [scenario.initial_state]
    while queue:
        state = queue.pop()
        if is_terminal(scenario, state) is not None:
            continue
        fired = _firing_rules(protocol, state)
        for rule in fired:
            rule_fired[rule_pos[id(rule)]] = True
        by_action: dict[str, list[DeonticRule]] = {}
        for rule in fired:
            by_action.setdefault(rule.action, []).append(rule)
        for action, rules in by_action.items():
            modalities_at = {}
            for rule in rules:
                modalities_at.setdefault(rule.priority, set()).add(
                    rule.modality)
            for priority, mods in modalities_at.items():
                if OBLIGE in mods and FORBID in mods and \
                        (action, priority) not in conflicts_reported:
                    conflicts_reported.add((action, priority))
                    diagnostics.append(Diagnostic(
                        ERROR, "$.rules",
                        f"oblige and forbid on action {action!r} at equal "
                        f"priority {priority} are jointly satisfiable, e.g. "
                        f"in state {scenario.levels_of(state)}",
                        "oblige-forbid-conflict"))
        allowed = allowed_actions(scenario, protocol, state)
        if not allowed:
            diagnostics.append(Diagnostic(
                ERROR, "$.rules",
                f"no action is allowed in reachable state "
                f"{scenario.levels_of(state)}", "empty-action-set"))
            continue
        for action in allowed:
            for _, outcome in successor_distribution(scenario, state, action):
                if outcome.next_state not in seen:
                    seen.add(outcome.next_state)
                    queue.append(outcome.next_state)
    for i, fired in enumerate(rule_fired):
        if not fired:
            diagnostics.append(Diagnostic(
                WARNING, f"$.rules[{i}]",
                f"rule never fires on any reachable state", "unreachable-rule"))
    return diagnostics


@dataclass
class ProtocolEvaluation:
    protocol_name: str
    restricted_front: list[ValueVector]
    unrestricted_front: list[ValueVector]
    hypervolume: float
    unrestricted_hypervolume: float
    reference: ValueVector
    per_value_max: dict[str, float]
    # every restricted vector dominated-or-equal by an unrestricted one
    sound: bool
    removed_transitions: int
    removed_samples: list[tuple[StateVector, str]]
    solution: SolutionFront = field(repr=False, default=None)


def _dominated_or_equal(v: ValueVector, front: list[ValueVector],
                        tol: float) -> bool:
    from .solver import _linf
    return any(dominates(w, v) or _linf(w, v) <= tol for w in front)


def evaluate_protocol(scenario: ScenarioModel, protocol: Protocol,
                      config: SolveConfig,
                      reference: Optional[ValueVector] = None,
                      unrestricted: Optional[SolutionFront] = None,
                      scenario_hash: str = "") -> ProtocolEvaluation:
    """Solve the protocol-restricted MOMDP and compare it to the baseline."""
    diagnostics = validate_protocol(scenario, protocol)
    errors = [d for d in diagnostics if d.severity == ERROR]
    if errors:
        raise ProtocolError(errors)
    restricted = pmovi(scenario, config,
                       action_filter=lambda s: allowed_actions(
                           scenario, protocol, s),
                       scenario_hash=scenario_hash)
    if unrestricted is None:
        unrestricted = pmovi(scenario, config, scenario_hash=scenario_hash)
    start = scenario.initial_state
    restricted_front = restricted.front_at(start)
    unrestricted_front = unrestricted.front_at(start)
    if reference is None:
        reference = default_reference(scenario, config)

    removed = 0
    samples: list[tuple[StateVector, str]] = []
    for state in enumerate_states(scenario):
        if is_terminal(scenario, state) is not None:
            continue
        gone = set(available_actions(scenario, state)) - set(
            allowed_actions(scenario, protocol, state))
        removed += len(gone)
        for action in sorted(gone):
            if len(samples) < 5:
                samples.append((state, action))
    sound = all(_dominated_or_equal(v, unrestricted_front, config.tau_dedup)
                for v in restricted_front)
    return ProtocolEvaluation(
        protocol_name=protocol.name,
        restricted_front=restricted_front,
        unrestricted_front=unrestricted_front,
        hypervolume=hypervolume(restricted_front, reference),
        unrestricted_hypervolume=hypervolume(unrestricted_front, reference),
        reference=reference,
        per_value_max={
            name: max(v[k] for v in restricted_front)
            for k, name in enumerate(scenario.value_names)},
        sound=sound,
        removed_transitions=removed,
        removed_samples=samples,
        solution=restricted)


@dataclass
class ProtocolComparison:
    evaluation_a: ProtocolEvaluation
    evaluation_b: ProtocolEvaluation
    # strict dominations across fronts
    a_members_dominated_by_b: list[ValueVector]
    b_members_dominated_by_a: list[ValueVector]


def compare_protocols(scenario: ScenarioModel, a: Protocol, b: Protocol,
                      config: SolveConfig,
                      reference: Optional[ValueVector] = None,
                      scenario_hash: str = "") -> ProtocolComparison:
    unrestricted = pmovi(scenario, config, scenario_hash=scenario_hash)
    eval_a = evaluate_protocol(scenario, a, config, reference, unrestricted,
                               scenario_hash)
    eval_b = evaluate_protocol(scenario, b, config, reference, unrestricted,
                               scenario_hash)
    a_dominated = [v for v in eval_a.restricted_front
                   if any(dominates(w, v) for w in eval_b.restricted_front)]
    b_dominated = [v for v in eval_b.restricted_front
                   if any(dominates(w, v) for w in eval_a.restricted_front)]
    return ProtocolComparison(eval_a, eval_b, a_dominated, b_dominated)
