"""Trajectory scoring, front comparison, and after-action debrief reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .model import (ScenarioModel, StateVector, ValueVector, alignment_vector,
                    successor_distribution, ContractViolation)
from .solver import (FrontLookupError, PolicyTrace, SolutionFront, _linf,
                     dominates, extract_policy)

ON_FRONT = "on-front"
DOMINATED = "dominated"
INCOMPARABLE = "incomparable-after-truncation"

SUCCESS = "success"
FAILURE = "failure"
TRUNCATED = "truncated"

REMARK_THRESHOLD = -0.5


class TrajectoryIntegrityError(ValueError):
    def __init__(self, message: str, step_index: int):
        super().__init__(f"step {step_index}: {message}")
        self.step_index = step_index


@dataclass(frozen=True)
class StepRecord:
    index: int
    state: StateVector
    action: str
    alignment: ValueVector
    next_state: StateVector


@dataclass(frozen=True)
class Trajectory:
    scenario_name: str
    scenario_hash: str
    seed: int
    gamma: float
    steps: tuple[StepRecord, ...]
    outcome: str  # success | failure | truncated


def verify_trajectory(scenario: ScenarioModel, trajectory: Trajectory,
                      expected_hash: str = "") -> None:
    """Chain and recompute check; tampered logs are rejected."""
    if expected_hash and trajectory.scenario_hash != expected_hash:
        raise TrajectoryIntegrityError(
            f"scenario hash mismatch: trajectory was recorded against "
            f"{trajectory.scenario_hash[:12]}", -1)
    for i, step in enumerate(trajectory.steps):
        if step.index != i:
            raise TrajectoryIntegrityError("step indices are not contiguous", i)
        if i > 0 and trajectory.steps[i - 1].next_state != step.state:
            raise TrajectoryIntegrityError(
                "state does not chain from the previous step", i)
        recomputed = alignment_vector(scenario, step.state, step.action)
        if recomputed != step.alignment:
            raise TrajectoryIntegrityError(
                f"logged alignment {step.alignment} differs from recomputed "
                f"{recomputed}", i)
        try:
            support = {out.next_state for _, out in
                       successor_distribution(scenario, step.state,
                                              step.action)}
        except ContractViolation as exc:
            raise TrajectoryIntegrityError(str(exc), i) from None
        if step.next_state not in support:
            raise TrajectoryIntegrityError(
                f"logged successor {scenario.levels_of(step.next_state)} is "
                f"not reachable by {step.action}", i)


def score_trajectory(scenario: ScenarioModel, trajectory: Trajectory,
                     gamma: float,
                     expected_hash: str = "") -> tuple[ValueVector,
                                                       list[ValueVector]]:
    """Discounted cumulative alignment plus the per-step vectors."""
    verify_trajectory(scenario, trajectory, expected_hash)
    dim = len(scenario.value_names)
    cumulative = [0.0] * dim
    per_step = []
    discount = 1.0
    for step in trajectory.steps:
        per_step.append(step.alignment)
        for k in range(dim):
            cumulative[k] += discount * step.alignment[k]
        discount *= gamma
    return tuple(cumulative), per_step


@dataclass(frozen=True)
class FrontComparison:
    status: str  # on-front | dominated | incomparable-after-truncation
    # per dominating front member: component-wise regret (member - cumulative)
    regrets: tuple[tuple[ValueVector, ValueVector], ...]
    nearest: ValueVector


def compare_to_front(cumulative: ValueVector,
                     front: Sequence[ValueVector],
                     tau_dedup: float = 1e-9) -> FrontComparison:
    front = [tuple(v) for v in front]
    if not front:
        raise ContractViolation("front is empty")
    if any(len(v) != len(cumulative) for v in front):
        raise ContractViolation("dimension mismatch")
    nearest = min(front, key=lambda v: (_linf(v, cumulative),
                                        tuple(-x for x in v)))
    if any(_linf(v, cumulative) <= tau_dedup for v in front):
        return FrontComparison(ON_FRONT, (), nearest)
    dominating = [v for v in front if dominates(v, cumulative)]
    if dominating:
        regrets = tuple(
            (v, tuple(a - b for a, b in zip(v, cumulative)))
            for v in sorted(dominating, reverse=True))
        return FrontComparison(DOMINATED, regrets, nearest)
    return FrontComparison(INCOMPARABLE, (), nearest)


@dataclass(frozen=True)
class Recommendation:
    label: str
    trace: PolicyTrace


@dataclass
class AssessmentReport:
    scenario_name: str
    scenario_hash: str
    gamma: float
    outcome: str
    truncated: bool
    cumulative: ValueVector
    per_step: list[StepRecord]
    comparison: FrontComparison
    recommendations: list[Recommendation]
    remarks: list[str] = field(default_factory=list)


def _step_remarks(scenario: ScenarioModel,
                  steps: Sequence[StepRecord]) -> list[str]:
    remarks = []
    for step in steps:
        flagged = [(name, score)
                   for name, score in zip(scenario.value_names, step.alignment)
                   if score <= REMARK_THRESHOLD]
        if flagged:
            values = ", ".join(f"{name} ({score:+g})"
                               for name, score in flagged)
            remarks.append(
                f"Step {step.index}: choosing {step.action} here worked "
                f"against {values}.")
    return remarks


def build_report(scenario: ScenarioModel, trajectory: Trajectory,
                 solution: SolutionFront,
                 preference: Optional[ValueVector] = None,
                 expected_hash: str = "") -> AssessmentReport:
    """Full debrief: cumulative score, dominance, regrets, recommended
    alternative traces, and per-step remarks."""
    gamma = solution.config.gamma
    cumulative, _ = score_trajectory(scenario, trajectory, gamma,
                                     expected_hash)
    start = (trajectory.steps[0].state if trajectory.steps
             else scenario.initial_state)
    front = solution.front_at(start)
    comparison = compare_to_front(cumulative, front,
                                  solution.config.tau_dedup)

    recommendations: list[Recommendation] = []

    def recommend(label: str, target: ValueVector):
        if any(r.trace.target == target for r in recommendations):
            return
        try:
            recommendations.append(
                Recommendation(label, extract_policy(solution, start, target)))
        except (FrontLookupError, KeyError):
            pass

    if preference is not None:
        best = max(front, key=lambda v: (sum(w * x for w, x in
                                             zip(preference, v)), v))
        recommend("preference-optimal", best)
    else:
        for k, name in enumerate(scenario.value_names):
            best = max(front, key=lambda v: (v[k], v))
            recommend(f"max-{name}", best)
        recommend("nearest", comparison.nearest)
        recommendations = recommendations[:3]

    return AssessmentReport(
        scenario_name=trajectory.scenario_name,
        scenario_hash=trajectory.scenario_hash,
        gamma=gamma,
        outcome=trajectory.outcome,
        truncated=trajectory.outcome == TRUNCATED,
        cumulative=cumulative,
        per_step=list(trajectory.steps),
        comparison=comparison,
        recommendations=recommendations,
        remarks=_step_remarks(scenario, trajectory.steps))


# --- file formats -----------------------------------------------------------

def trajectory_to_jsonl(scenario: ScenarioModel,
                        trajectory: Trajectory) -> str:
    lines = [json.dumps({
        "kind": "header",
        "scenario": trajectory.scenario_name,
        "scenario_hash": trajectory.scenario_hash,
        "seed": trajectory.seed,
        "gamma": trajectory.gamma,
    })]
    for step in trajectory.steps:
        lines.append(json.dumps({
            "kind": "step",
            "index": step.index,
            "state": scenario.levels_of(step.state),
            "action": step.action,
            "alignment": dict(zip(scenario.value_names, step.alignment)),
            "next_state": scenario.levels_of(step.next_state),
        }))
    lines.append(json.dumps({"kind": "outcome", "label": trajectory.outcome}))
    return "\n".join(lines) + "\n"


def trajectory_from_jsonl(scenario: ScenarioModel, text: str) -> Trajectory:
    header = None
    steps = []
    outcome = TRUNCATED
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TrajectoryIntegrityError(
                f"line {lineno} is not valid JSON: {exc.msg}", -1) from None
        kind = record.get("kind")
        if kind == "header":
            header = record
        elif kind == "step":
            steps.append(StepRecord(
                index=record["index"],
                state=scenario.state_from_levels(record["state"]),
                action=record["action"],
                alignment=tuple(record["alignment"][v]
                                for v in scenario.value_names),
                next_state=scenario.state_from_levels(record["next_state"])))
        elif kind == "outcome":
            outcome = record["label"]
    if header is None:
        raise TrajectoryIntegrityError("missing header line", -1)
    return Trajectory(
        scenario_name=header["scenario"],
        scenario_hash=header["scenario_hash"],
        seed=header["seed"],
        gamma=header["gamma"],
        steps=tuple(steps),
        outcome=outcome)


def report_to_document(scenario: ScenarioModel,
                       report: AssessmentReport) -> dict:
    return {
        "format_version": 1,
        "scenario": report.scenario_name,
        "scenario_hash": report.scenario_hash,
        "gamma": report.gamma,
        "outcome": report.outcome,
        "truncated": report.truncated,
        "cumulative": dict(zip(scenario.value_names, report.cumulative)),
        "per_step": [{
            "index": s.index,
            "action": s.action,
            "state": scenario.levels_of(s.state),
            "alignment": dict(zip(scenario.value_names, s.alignment)),
        } for s in report.per_step],
        "dominance": report.comparison.status,
        "regrets": [{
            "front_vector": list(member),
            "regret": list(regret),
        } for member, regret in report.comparison.regrets],
        "nearest_front_vector": list(report.comparison.nearest),
        "recommendations": [{
            "label": r.label,
            "target": list(r.trace.target),
            "steps": [{"state": scenario.levels_of(s), "action": a}
                      for s, a in r.trace.steps],
            "decisions": [{"state": scenario.levels_of(s), "action": a}
                          for s, a in r.trace.decisions],
        } for r in report.recommendations],
        "remarks": report.remarks,
    }


def report_to_json(scenario: ScenarioModel, report: AssessmentReport) -> str:
    return json.dumps(report_to_document(scenario, report), indent=2) + "\n"
