import json
import random
from importlib import resources

import pytest
from hypothesis import given, settings, strategies as st

from valence.model import (available_actions, enumerate_states, is_terminal)
from valence.protocol import (Protocol, ProtocolError, allowed_actions,
                              compare_protocols, evaluate_protocol,
                              load_protocol, parse_protocol,
                              serialize_protocol, validate_protocol)
from valence.scenario_io import builtin_firefight, scenario_hash
from valence.solver import (SolveConfig, dominates, hausdorff_linf, pmovi)

from generators import random_scenario, random_valid_protocol
from oracles import brute_force_front
from test_solver import reduced_firefight


@pytest.fixture(scope="module")
def firefight():
    return builtin_firefight()


@pytest.fixture(scope="module")
def reduced():
    return reduced_firefight()


def make_protocol(scenario, rules, stance="permissive", name="t"):
    doc = {"format_version": 1, "name": name, "stance": stance,
           "rules": rules}
    protocol, diagnostics = parse_protocol(json.dumps(doc), scenario)
    assert protocol is not None, diagnostics
    return protocol


def asset(name):
    return resources.files("valence").joinpath("assets", name)


class TestParsing:
    def test_shipped_protocols_parse(self, firefight):
        for name in ("sop-safety-first.protocol.json",
                     "sop-rapid-entry.protocol.json"):
            protocol = load_protocol(asset(name), firefight)
            assert protocol.rules

    def test_round_trip(self, firefight):
        protocol = load_protocol(asset("sop-safety-first.protocol.json"),
                                 firefight)
        text = serialize_protocol(protocol)
        reparsed, diagnostics = parse_protocol(text, firefight)
        assert not diagnostics
        assert reparsed == protocol
        assert serialize_protocol(reparsed) == text

    def test_unknown_action_rejected(self, firefight):
        doc = {"name": "t", "stance": "permissive", "rules": [
            {"when": "true", "action": "Retreat", "modality": "forbid"}]}
        protocol, diagnostics = parse_protocol(json.dumps(doc), firefight)
        assert protocol is None
        assert any(d.code == "unknown-action" for d in diagnostics)

    def test_bad_modality_rejected(self, firefight):
        doc = {"name": "t", "stance": "permissive", "rules": [
            {"when": "true", "action": "ContainFire", "modality": "suggest"}]}
        protocol, diagnostics = parse_protocol(json.dumps(doc), firefight)
        assert protocol is None
        assert any(d.code == "bad-modality" for d in diagnostics)

    def test_bad_stance_rejected(self, firefight):
        doc = {"name": "t", "stance": "strict", "rules": []}
        protocol, diagnostics = parse_protocol(json.dumps(doc), firefight)
        assert protocol is None
        assert any(d.code == "bad-stance" for d in diagnostics)

    def test_non_boolean_guard_rejected(self, firefight):
        doc = {"name": "t", "stance": "permissive", "rules": [
            {"when": "fire + 1", "action": "ContainFire",
             "modality": "forbid"}]}
        protocol, diagnostics = parse_protocol(json.dumps(doc), firefight)
        assert protocol is None
        assert any(d.code == "type-mismatch" for d in diagnostics)

    def test_guard_syntax_error_has_location(self, firefight):
        doc = {"name": "t", "stance": "permissive", "rules": [
            {"when": "fire >=", "action": "ContainFire",
             "modality": "forbid"}]}
        protocol, diagnostics = parse_protocol(json.dumps(doc), firefight)
        assert protocol is None
        assert diagnostics[0].location == "$.rules[0].when"


class TestAllowedActions:
    def test_empty_permissive_protocol_is_identity(self, firefight):
        protocol = make_protocol(firefight, [])
        for state in enumerate_states(firefight):
            if is_terminal(firefight, state) is None:
                assert allowed_actions(firefight, protocol, state) == \
                    available_actions(firefight, state)

    def test_forbid_removes_action(self, firefight):
        protocol = make_protocol(firefight, [
            {"when": "equipment == NotReady",
             "action": "AggressiveFireSuppression", "modality": "forbid"}])
        allowed = allowed_actions(firefight, protocol,
                                  firefight.initial_state)
        assert "AggressiveFireSuppression" not in allowed
        assert len(allowed) == 4

    def test_oblige_narrows_to_obliged(self, firefight):
        protocol = make_protocol(firefight, [
            {"when": "knowledge == Poor", "action": "UpdateKnowledge",
             "modality": "oblige"}])
        assert allowed_actions(firefight, protocol,
                               firefight.initial_state) == ["UpdateKnowledge"]

    def test_oblige_only_when_guard_fires(self, firefight):
        protocol = make_protocol(firefight, [
            {"when": "knowledge == Good", "action": "UpdateKnowledge",
             "modality": "oblige"}])
        # knowledge is Poor initially: the obligation is dormant
        assert len(allowed_actions(firefight, protocol,
                                   firefight.initial_state)) == 5

    def test_higher_priority_permit_overrides_forbid(self, firefight):
        protocol = make_protocol(firefight, [
            {"when": "true", "action": "ContainFire", "modality": "forbid",
             "priority": 1},
            {"when": "true", "action": "ContainFire", "modality": "permit",
             "priority": 5}])
        assert "ContainFire" in allowed_actions(firefight, protocol,
                                                firefight.initial_state)

    def test_equal_priority_forbid_beats_permit(self, firefight):
        protocol = make_protocol(firefight, [
            {"when": "true", "action": "ContainFire", "modality": "permit"},
            {"when": "true", "action": "ContainFire", "modality": "forbid"}])
        assert "ContainFire" not in allowed_actions(firefight, protocol,
                                                    firefight.initial_state)

    def test_restrictive_stance_requires_permit(self, firefight):
        protocol = make_protocol(firefight, [
            {"when": "true", "action": "ContainFire", "modality": "permit"},
            {"when": "true", "action": "PrepareEquipment",
             "modality": "permit"}], stance="restrictive")
        assert allowed_actions(firefight, protocol,
                               firefight.initial_state) == \
            ["ContainFire", "PrepareEquipment"]

    def test_restrictive_forbid_beats_permit(self, firefight):
        protocol = make_protocol(firefight, [
            {"when": "true", "action": "ContainFire", "modality": "permit"},
            {"when": "true", "action": "ContainFire", "modality": "forbid",
             "priority": 2}], stance="restrictive")
        assert allowed_actions(firefight, protocol,
                               firefight.initial_state) == []

    def test_multiple_obligations_keep_all_obliged(self, firefight):
        protocol = make_protocol(firefight, [
            {"when": "true", "action": "UpdateKnowledge",
             "modality": "oblige"},
            {"when": "true", "action": "PrepareEquipment",
             "modality": "oblige"}])
        assert allowed_actions(firefight, protocol,
                               firefight.initial_state) == \
            ["PrepareEquipment", "UpdateKnowledge"]

    def test_terminal_state_raises(self, firefight):
        protocol = make_protocol(firefight, [])
        levels = dict(firefight.levels_of(firefight.initial_state))
        levels["health"] = "Incapacitated"
        from valence.model import ContractViolation
        with pytest.raises(ContractViolation):
            allowed_actions(firefight, protocol,
                            firefight.state_from_levels(levels))


class TestValidation:
    def test_shipped_protocols_have_no_errors(self, firefight):
        for name in ("sop-safety-first.protocol.json",
                     "sop-rapid-entry.protocol.json"):
            protocol = load_protocol(asset(name), firefight)
            diagnostics = validate_protocol(firefight, protocol)
            assert not [d for d in diagnostics if d.severity == "error"]

    def test_forbid_everything_reports_witness_state(self, firefight):
        protocol = make_protocol(firefight, [
            {"when": "true", "action": a.name, "modality": "forbid"}
            for a in firefight.actions])
        diagnostics = validate_protocol(firefight, protocol)
        errors = [d for d in diagnostics if d.code == "empty-action-set"]
        assert errors
        # the only reachable non-terminal state is the initial one
        assert "'fire': 'Moderate'" in errors[0].message

    def test_restrictive_without_permits_is_empty(self, firefight):
        protocol = make_protocol(firefight, [], stance="restrictive")
        diagnostics = validate_protocol(firefight, protocol)
        assert any(d.code == "empty-action-set" for d in diagnostics)

    def test_oblige_forbid_conflict_at_equal_priority(self, firefight):
        protocol = make_protocol(firefight, [
            {"when": "knowledge == Poor", "action": "UpdateKnowledge",
             "modality": "oblige", "priority": 3},
            {"when": "equipment == NotReady", "action": "UpdateKnowledge",
             "modality": "forbid", "priority": 3}])
        diagnostics = validate_protocol(firefight, protocol)
        conflict = [d for d in diagnostics
                    if d.code == "oblige-forbid-conflict"]
        assert len(conflict) == 1
        assert "UpdateKnowledge" in conflict[0].message

    def test_distinct_priorities_are_not_a_conflict(self, firefight):
        protocol = make_protocol(firefight, [
            {"when": "true", "action": "UpdateKnowledge",
             "modality": "oblige", "priority": 3},
            {"when": "true", "action": "UpdateKnowledge",
             "modality": "forbid", "priority": 4}])
        diagnostics = validate_protocol(firefight, protocol)
        assert not any(d.code == "oblige-forbid-conflict"
                       for d in diagnostics)

    def test_unreachable_rule_warns(self, firefight):
        # fire never rises above the initial Moderate level
        protocol = make_protocol(firefight, [
            {"when": "fire == Severe", "action": "EvacuateOccupants",
             "modality": "forbid"}])
        diagnostics = validate_protocol(firefight, protocol)
        assert [d.code for d in diagnostics] == ["unreachable-rule"]
        assert diagnostics[0].severity == "warning"
        assert diagnostics[0].location == "$.rules[0]"

    def test_reachability_accounts_for_the_protocol_itself(self, firefight):
        # obliging UpdateKnowledge first makes `knowledge == Poor` states
        # unreachable for every other variable change
        protocol = make_protocol(firefight, [
            {"when": "knowledge == Poor", "action": "UpdateKnowledge",
             "modality": "oblige"},
            {"when": "knowledge == Poor and equipment == Ready",
             "action": "ContainFire", "modality": "forbid"}])
        diagnostics = validate_protocol(firefight, protocol)
        assert any(d.code == "unreachable-rule" and "rules[1]" in d.location
                   for d in diagnostics)


class TestEvaluation:
    CONFIG = SolveConfig(gamma=1.0, horizon=8)

    def test_empty_protocol_is_a_no_op(self, reduced):
        protocol = make_protocol(reduced, [])
        ev = evaluate_protocol(reduced, protocol, self.CONFIG)
        assert ev.restricted_front == ev.unrestricted_front
        assert ev.hypervolume == ev.unrestricted_hypervolume
        assert ev.removed_transitions == 0
        assert ev.removed_samples == []
        assert ev.sound

    def test_restriction_never_expands_the_front(self, reduced):
        protocol = make_protocol(reduced, [
            {"when": "equipment == NotReady",
             "action": "AggressiveFireSuppression", "modality": "forbid"}])
        ev = evaluate_protocol(reduced, protocol, self.CONFIG)
        assert ev.sound
        assert ev.hypervolume <= ev.unrestricted_hypervolume + 1e-12
        assert ev.removed_transitions > 0
        assert all(a == "AggressiveFireSuppression"
                   for _, a in ev.removed_samples)
        for name, best in ev.per_value_max.items():
            k = reduced.value_names.index(name)
            assert best == max(v[k] for v in ev.restricted_front)

    def test_invalid_protocol_raises(self, reduced):
        protocol = make_protocol(reduced, [
            {"when": "true", "action": a.name, "modality": "forbid"}
            for a in reduced.actions])
        with pytest.raises(ProtocolError) as exc:
            evaluate_protocol(reduced, protocol, self.CONFIG)
        assert any(d.code == "empty-action-set" for d in exc.value.diagnostics)

    def test_shipped_protocols_evaluate_on_full_scenario(self, firefight):
        config = SolveConfig(gamma=1.0, horizon=50)
        baseline = pmovi(firefight, config)
        for name in ("sop-safety-first.protocol.json",
                     "sop-rapid-entry.protocol.json"):
            protocol = load_protocol(asset(name), firefight)
            ev = evaluate_protocol(firefight, protocol, config,
                                   unrestricted=baseline)
            assert ev.sound
            assert ev.restricted_front
            assert 0 < ev.hypervolume <= ev.unrestricted_hypervolume + 1e-12

    def test_restricted_solve_matches_enumeration_oracle(self, reduced):
        protocol = make_protocol(reduced, [
            {"when": "occupancy > 0 and fire <= Moderate",
             "action": "PrepareEquipment", "modality": "forbid"}])
        ev = evaluate_protocol(reduced, protocol, self.CONFIG)
        oracle = brute_force_front(
            reduced, reduced.initial_state, 8, 1.0,
            action_filter=lambda s: allowed_actions(reduced, protocol, s))
        assert hausdorff_linf(ev.restricted_front, oracle) <= 1e-9

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_random_protocols_are_sound(self, seed):
        rng = random.Random(seed)
        scenario = random_scenario(rng)
        protocol = random_valid_protocol(rng, scenario)
        config = SolveConfig(gamma=1.0, horizon=4)
        ev = evaluate_protocol(scenario, protocol, config)
        assert ev.sound
        assert ev.hypervolume <= ev.unrestricted_hypervolume + 1e-12
        oracle = brute_force_front(
            scenario, scenario.initial_state, 4, 1.0,
            action_filter=lambda s: allowed_actions(scenario, protocol, s))
        assert hausdorff_linf(ev.restricted_front, oracle) <= 1e-9


class TestComparison:
    def test_self_comparison_has_no_cross_domination(self, reduced):
        protocol = make_protocol(reduced, [
            {"when": "equipment == NotReady",
             "action": "AggressiveFireSuppression", "modality": "forbid"}])
        comparison = compare_protocols(reduced, protocol, protocol,
                                       SolveConfig(gamma=1.0, horizon=8))
        assert comparison.a_members_dominated_by_b == []
        assert comparison.b_members_dominated_by_a == []

    def test_stricter_protocol_is_dominated(self, reduced):
        lenient = make_protocol(reduced, [], name="lenient")
        # forbid the whole-building sweep actions, crippling Proximity
        strict = make_protocol(reduced, [
            {"when": "true", "action": "EvacuateOccupants",
             "modality": "forbid"}], name="strict")
        comparison = compare_protocols(reduced, lenient, strict,
                                       SolveConfig(gamma=1.0, horizon=8))
        assert comparison.evaluation_a.hypervolume >= \
            comparison.evaluation_b.hypervolume
        assert comparison.a_members_dominated_by_b == []

    def test_cross_domination_members_really_dominate(self, reduced):
        a = make_protocol(reduced, [
            {"when": "true", "action": "UpdateKnowledge",
             "modality": "forbid"}], name="a")
        b = make_protocol(reduced, [
            {"when": "true", "action": "PrepareEquipment",
             "modality": "forbid"}], name="b")
        comparison = compare_protocols(reduced, a, b,
                                       SolveConfig(gamma=1.0, horizon=8))
        for v in comparison.a_members_dominated_by_b:
            assert any(dominates(w, v)
                       for w in comparison.evaluation_b.restricted_front)
        for v in comparison.b_members_dominated_by_a:
            assert any(dominates(w, v)
                       for w in comparison.evaluation_a.restricted_front)
