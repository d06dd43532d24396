"""Scenario document parsing, validation, and serialisation.

Documents are UTF-8 JSON with ``format_version: 1``.  Guards and scores are
expression text (see :mod:`valence.expressions`); outcome probabilities are
rational strings ("1", "7/10") so that sums stay exact.  Semantic diagnostics
carry a JSON-path-style location; expression errors additionally carry the
column inside the offending expression.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Optional

from .expressions import (BindingEnv, BOOLEAN, ExpressionError, Expr, NUMBER,
                          Num, expr_type, parse_expression, render_expression)
from .model import (ActionDef, ActionOutcome, AlignmentCase, AlignmentRuleSet,
                    EffectAssign, EffectRule, ScenarioModel, TerminalSpec,
                    VariableDef, enumerate_states, is_terminal,
                    make_binding_env, FAILURE, SUCCESS)

FORMAT_VERSION = 1

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning
    location: str  # JSON-path-style, e.g. "$.actions[0].outcomes[0]"
    message: str
    code: str
    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        pos = f":{self.line}:{self.column}" if self.line else ""
        return f"{self.severity}[{self.code}] {self.location}{pos}: {self.message}"


class ScenarioParseError(ValueError):
    """Raised by load helpers when a document has error diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics
                                   if d.severity == ERROR))


class _Collector:
    def __init__(self):
        self.diagnostics: list[Diagnostic] = []

    def error(self, location: str, code: str, message: str, column: int = 0):
        self.diagnostics.append(
            Diagnostic(ERROR, location, message, code, column=column))

    def warning(self, location: str, code: str, message: str):
        self.diagnostics.append(Diagnostic(WARNING, location, message, code))

    @property
    def failed(self) -> bool:
        return any(d.severity == ERROR for d in self.diagnostics)


def _expect(doc: dict, key: str, kind, loc: str, out: _Collector,
            default=None):
    if key not in doc:
        out.error(f"{loc}.{key}", "missing-field", f"missing field {key!r}")
        return default
    value = doc[key]
    if not isinstance(value, kind):
        out.error(f"{loc}.{key}", "wrong-type",
                  f"field {key!r} must be {kind.__name__}")
        return default
    return value


def _parse_expr(text, env: BindingEnv, loc: str, out: _Collector,
                wanted: str) -> Optional[Expr]:
    if not isinstance(text, str):
        out.error(loc, "wrong-type", "expression must be a string")
        return None
    try:
        node = parse_expression(text, env)
    except ExpressionError as exc:
        out.error(loc, "bad-expression", exc.message, column=exc.column)
        return None
    if expr_type(node) != wanted:
        out.error(loc, "type-mismatch",
                  f"expression must be {wanted}, got {expr_type(node)}")
        return None
    return node


def _parse_probability(text, loc: str, out: _Collector) -> Fraction:
    try:
        if isinstance(text, str):
            p = Fraction(text)
        elif isinstance(text, int):
            p = Fraction(text)
        else:
            raise ValueError
    except (ValueError, ZeroDivisionError):
        out.error(loc, "bad-probability",
                  f"probability must be a rational string, got {text!r}")
        return Fraction(0)
    if not 0 < p <= 1:
        out.error(loc, "bad-probability",
                  f"probability must be in (0, 1], got {text}")
    return p


def parse_scenario(text: str) -> tuple[Optional[ScenarioModel],
                                       list[Diagnostic]]:
    """Parse a scenario document.

    Returns (model, diagnostics); model is None iff an error was found.
    """
    out = _Collector()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        out.error("$", "syntax", exc.msg, column=exc.colno)
        out.diagnostics[-1] = Diagnostic(ERROR, "$", exc.msg, "syntax",
                                         line=exc.lineno, column=exc.colno)
        return None, out.diagnostics
    if not isinstance(doc, dict):
        out.error("$", "wrong-type", "document must be a JSON object")
        return None, out.diagnostics

    version = _expect(doc, "format_version", int, "$", out, 0)
    if not out.failed and version != FORMAT_VERSION:
        out.error("$.format_version", "bad-version",
                  f"unsupported format_version {version}")
    name = _expect(doc, "name", str, "$", out, "")

    variables = _parse_variables(doc, out)
    if out.failed:
        return None, out.diagnostics
    env = make_binding_env(variables)

    initial_state = _parse_initial_state(doc, variables, out)
    actions = _parse_actions(doc, variables, env, out)
    terminals = _parse_terminals(doc, env, out)
    value_names, alignment_rules = _parse_values(doc, actions, env, out)

    if out.failed:
        return None, out.diagnostics
    model = ScenarioModel(
        name=name, variables=variables, initial_state=initial_state,
        actions=actions, value_names=value_names,
        alignment_rules=alignment_rules, terminals=terminals)
    return model, out.diagnostics


def _parse_variables(doc, out) -> tuple[VariableDef, ...]:
    items = _expect(doc, "variables", list, "$", out, [])
    variables = []
    seen = set()
    for i, item in enumerate(items or []):
        loc = f"$.variables[{i}]"
        if not isinstance(item, dict):
            out.error(loc, "wrong-type", "variable must be an object")
            continue
        vname = _expect(item, "name", str, loc, out, "")
        levels = _expect(item, "levels", list, loc, out, [])
        if vname in seen:
            out.error(loc, "duplicate-name", f"duplicate variable {vname!r}")
        seen.add(vname)
        if not levels:
            out.error(f"{loc}.levels", "empty-domain",
                      f"variable {vname!r} has an empty domain")
        if len(set(levels)) != len(levels):
            out.error(f"{loc}.levels", "duplicate-level",
                      f"variable {vname!r} has duplicate level names")
        variables.append(VariableDef(vname, tuple(str(x) for x in levels)))
    if not variables:
        out.error("$.variables", "empty", "at least one variable is required")
    return tuple(variables)


def _parse_initial_state(doc, variables, out):
    initial = _expect(doc, "initial_state", dict, "$", out, {})
    levels = []
    for v in variables:
        if initial is None or v.name not in initial:
            out.error("$.initial_state", "missing-variable",
                      f"initial_state is missing variable {v.name!r}")
            levels.append(0)
            continue
        level = str(initial[v.name])
        if level not in v.levels:
            out.error("$.initial_state", "unknown-level",
                      f"variable {v.name!r} has no level {level!r}")
            levels.append(0)
        else:
            levels.append(v.levels.index(level))
    if initial:
        for key in initial:
            if all(v.name != key for v in variables):
                out.error("$.initial_state", "unknown-variable",
                          f"initial_state names unknown variable {key!r}")
    return tuple(levels)


def _parse_effects(items, variables, env, loc, out) -> tuple[EffectRule, ...]:
    rules = []
    positions = {v.name: i for i, v in enumerate(variables)}
    for j, item in enumerate(items or []):
        eloc = f"{loc}[{j}]"
        if not isinstance(item, dict):
            out.error(eloc, "wrong-type", "effect must be an object")
            continue
        guard_text = item.get("when", "true")
        guard = _parse_expr(guard_text, env, f"{eloc}.when", out, BOOLEAN)
        assigns = []
        for k, a in enumerate(item.get("assign", [])):
            aloc = f"{eloc}.assign[{k}]"
            vname = _expect(a, "var", str, aloc, out, "")
            if vname not in positions:
                out.error(aloc, "unknown-variable",
                          f"unknown variable {vname!r}")
                continue
            pos = positions[vname]
            op = _expect(a, "op", str, aloc, out, "")
            if op == "set":
                level = str(a.get("level", ""))
                if level not in variables[pos].levels:
                    out.error(aloc, "unknown-level",
                              f"variable {vname!r} has no level {level!r}")
                    continue
                assigns.append(EffectAssign(
                    vname, pos, "set",
                    level_index=variables[pos].levels.index(level),
                    level_name=level))
            elif op in ("inc", "dec"):
                amount = a.get("amount", 1)
                if not isinstance(amount, int) or amount < 1:
                    out.error(aloc, "bad-amount",
                              "amount must be a positive integer")
                    continue
                assigns.append(EffectAssign(vname, pos, op, amount=amount))
            else:
                out.error(aloc, "bad-op",
                          f"op must be set/inc/dec, got {op!r}")
        if guard is not None:
            rules.append(EffectRule(guard, tuple(assigns), str(guard_text)))
    return tuple(rules)


def _parse_actions(doc, variables, env, out) -> tuple[ActionDef, ...]:
    items = _expect(doc, "actions", list, "$", out, [])
    actions = []
    seen = set()
    for i, item in enumerate(items or []):
        loc = f"$.actions[{i}]"
        if not isinstance(item, dict):
            out.error(loc, "wrong-type", "action must be an object")
            continue
        aname = _expect(item, "name", str, loc, out, "")
        if aname in seen:
            out.error(loc, "duplicate-name", f"duplicate action {aname!r}")
        seen.add(aname)
        app_text = item.get("applicability", "true")
        app = _parse_expr(app_text, env, f"{loc}.applicability", out, BOOLEAN)
        outcome_items = _expect(item, "outcomes", list, loc, out, [])
        outcomes = []
        total = Fraction(0)
        for j, oitem in enumerate(outcome_items or []):
            oloc = f"{loc}.outcomes[{j}]"
            if not isinstance(oitem, dict):
                out.error(oloc, "wrong-type", "outcome must be an object")
                continue
            p = _parse_probability(oitem.get("probability", "1"),
                                   f"{oloc}.probability", out)
            total += p
            effects = _parse_effects(oitem.get("effects", []), variables, env,
                                     f"{oloc}.effects", out)
            outcomes.append(ActionOutcome(p, effects))
        if not outcomes:
            out.error(f"{loc}.outcomes", "empty",
                      f"action {aname!r} has no outcomes")
        elif total != 1:
            out.error(f"{loc}.outcomes", "bad-probability-sum",
                      f"outcome probabilities of {aname!r} sum to {total}, "
                      f"expected 1")
        if app is not None:
            actions.append(ActionDef(aname, app, tuple(outcomes),
                                     str(app_text)))
    if not actions:
        out.error("$.actions", "empty", "at least one action is required")
    return tuple(actions)


def _parse_terminals(doc, env, out) -> tuple[TerminalSpec, ...]:
    items = _expect(doc, "terminals", list, "$", out, [])
    terminals = []
    for i, item in enumerate(items or []):
        loc = f"$.terminals[{i}]"
        if not isinstance(item, dict):
            out.error(loc, "wrong-type", "terminal must be an object")
            continue
        label = _expect(item, "label", str, loc, out, "")
        if label not in (SUCCESS, FAILURE):
            out.error(f"{loc}.label", "bad-label",
                      f"label must be success or failure, got {label!r}")
        when_text = _expect(item, "when", str, loc, out, "false")
        cond = _parse_expr(when_text, env, f"{loc}.when", out, BOOLEAN)
        if cond is not None:
            terminals.append(TerminalSpec(cond, label, str(when_text)))
    if not terminals:
        out.error("$.terminals", "empty",
                  "at least one terminal condition is required")
    return tuple(terminals)


def _parse_values(doc, actions, env, out):
    items = _expect(doc, "values", list, "$", out, [])
    value_names = []
    alignment_rules: dict[str, dict[str, AlignmentRuleSet]] = {}
    action_names = [a.name for a in actions]
    for i, item in enumerate(items or []):
        loc = f"$.values[{i}]"
        if not isinstance(item, dict):
            out.error(loc, "wrong-type", "value must be an object")
            continue
        vname = _expect(item, "name", str, loc, out, "")
        if vname in alignment_rules:
            out.error(loc, "duplicate-name", f"duplicate value {vname!r}")
        rules_doc = _expect(item, "rules", dict, loc, out, {})
        per_action: dict[str, AlignmentRuleSet] = {}
        for aname, rset in (rules_doc or {}).items():
            rloc = f"{loc}.rules.{aname}"
            if aname not in action_names:
                out.error(rloc, "unknown-action", f"unknown action {aname!r}")
                continue
            if not isinstance(rset, dict):
                out.error(rloc, "wrong-type", "rule set must be an object")
                continue
            cases = []
            for j, c in enumerate(rset.get("cases", [])):
                cloc = f"{rloc}.cases[{j}]"
                guard_text = c.get("when", "true")
                score_text = c.get("score", "0")
                guard = _parse_expr(guard_text, env, f"{cloc}.when", out,
                                    BOOLEAN)
                score = _parse_expr(score_text, env, f"{cloc}.score", out,
                                    NUMBER)
                if guard is None or score is None:
                    continue
                if isinstance(score, Num) and not -1 <= score.value <= 1:
                    out.warning(f"{cloc}.score", "score-clamped",
                                f"score {score.value} is outside [-1, 1] "
                                f"and will clamp")
                cases.append(AlignmentCase(guard, score, str(guard_text),
                                           str(score_text)))
            default = rset.get("default", 0)
            if not isinstance(default, (int, float)) or isinstance(default, bool):
                out.error(f"{rloc}.default", "wrong-type",
                          "default score must be a number")
                default = 0.0
            elif not -1 <= default <= 1:
                out.warning(f"{rloc}.default", "score-clamped",
                            f"default score {default} is outside [-1, 1] "
                            f"and will clamp")
            per_action[aname] = AlignmentRuleSet(tuple(cases), float(default))
        for aname in action_names:
            if aname not in per_action:
                out.error(f"{loc}.rules", "missing-action",
                          f"value {vname!r} has no rule set for action "
                          f"{aname!r}")
        value_names.append(vname)
        alignment_rules[vname] = per_action
    if not value_names:
        out.error("$.values", "empty", "at least one value is required")
    return tuple(value_names), alignment_rules


# --- serialisation ----------------------------------------------------------

def _render_fraction(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def scenario_to_document(model: ScenarioModel) -> dict:
    """Canonical document dict: stable key order, expressions re-rendered."""
    doc: dict = {
        "format_version": FORMAT_VERSION,
        "name": model.name,
        "variables": [{"name": v.name, "levels": list(v.levels)}
                      for v in model.variables],
        "initial_state": model.levels_of(model.initial_state),
    }
    actions = []
    for a in model.actions:
        entry: dict = {"name": a.name}
        app = render_expression(a.applicability)
        if app != "true":
            entry["applicability"] = app
        outcomes = []
        for o in a.outcomes:
            oentry: dict = {"probability": _render_fraction(o.probability)}
            effects = []
            for rule in o.effects:
                eentry: dict = {}
                guard = render_expression(rule.guard)
                if guard != "true":
                    eentry["when"] = guard
                assigns = []
                for asg in rule.assignments:
                    if asg.op == "set":
                        assigns.append({"var": asg.variable, "op": "set",
                                        "level": asg.level_name})
                    else:
                        aentry = {"var": asg.variable, "op": asg.op}
                        if asg.amount != 1:
                            aentry["amount"] = asg.amount
                        assigns.append(aentry)
                eentry["assign"] = assigns
                effects.append(eentry)
            if effects:
                oentry["effects"] = effects
            outcomes.append(oentry)
        entry["outcomes"] = outcomes
        actions.append(entry)
    doc["actions"] = actions
    values = []
    for vname in model.value_names:
        rules = {}
        for aname in (a.name for a in model.actions):
            rule_set = model.alignment_rules[vname][aname]
            rentry: dict = {}
            if rule_set.cases:
                rentry["cases"] = [
                    {"when": render_expression(c.guard),
                     "score": render_expression(c.score)}
                    for c in rule_set.cases]
            rentry["default"] = rule_set.default
            rules[aname] = rentry
        values.append({"name": vname, "rules": rules})
    doc["values"] = values
    doc["terminals"] = [{"when": render_expression(t.condition),
                         "label": t.label} for t in model.terminals]
    return doc


def serialize_scenario(model: ScenarioModel) -> str:
    return json.dumps(scenario_to_document(model), indent=2,
                      ensure_ascii=False) + "\n"


def scenario_hash(model: ScenarioModel) -> str:
    """Content hash of the canonical serialisation."""
    return hashlib.sha256(serialize_scenario(model).encode()).hexdigest()


def load_scenario(path) -> ScenarioModel:
    """Load a scenario file, raising ScenarioParseError on any error."""
    with open(path, encoding="utf-8") as f:
        text = f.read()
    model, diagnostics = parse_scenario(text)
    if model is None:
        raise ScenarioParseError(diagnostics)
    return model


def _load_asset(filename: str) -> ScenarioModel:
    text = resources.files("valence").joinpath("assets", filename).read_text(
        encoding="utf-8")
    model, diagnostics = parse_scenario(text)
    assert model is not None, diagnostics
    return model


def builtin_firefight() -> ScenarioModel:
    """The canonical residential-fire training scenario (deterministic)."""
    return _load_asset("firefight.scenario.json")


def builtin_firefight_stochastic() -> ScenarioModel:
    """Variant where fire containment can fail with probability 3/10."""
    return _load_asset("firefight-stochastic.scenario.json")


BUILTIN_SCENARIOS = {
    "firefight": builtin_firefight,
    "firefight-stochastic": builtin_firefight_stochastic,
}


def summarize(model: ScenarioModel) -> str:
    terminal_count = sum(
        1 for s in enumerate_states(model) if is_terminal(model, s))
    return (f"{len(model.variables)} variables, {model.state_count()} states "
            f"({terminal_count} terminal), {len(model.actions)} actions, "
            f"{len(model.value_names)} values")
