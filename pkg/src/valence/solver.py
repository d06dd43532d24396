"""Multi-objective dynamic programming over scenario models.

Propagates sets of non-dominated cumulative-alignment vectors per state
(vector-set Bellman backups), extracts policies realising individual front
vectors via recorded provenance, and measures fronts by hypervolume.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import (ContractViolation, ScenarioModel, StateVector, ValueVector,
                    enumerate_states, transition_table, ActionFilter)

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class SolveConfig:
    gamma: float = 1.0
    horizon: Optional[int] = 50  # None = unbounded (requires gamma < 1)
    epsilon_conv: float = 1e-9
    tau_dedup: float = 1e-9
    max_vectors_per_state: int = 0  # 0 = unlimited
    max_sweeps_unbounded: int = 10_000

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if self.horizon is None and self.gamma == 1:
            raise ValueError("gamma = 1 requires a finite horizon")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be a positive integer")


def dominates(v: Sequence[float], w: Sequence[float]) -> bool:
    """v Pareto-dominates w: v >= w component-wise and v != w."""
    return all(a >= b for a, b in zip(v, w)) and tuple(v) != tuple(w)


def _linf(v: Sequence[float], w: Sequence[float]) -> float:
    return max(abs(a - b) for a, b in zip(v, w))


def pareto_prune(vectors: Sequence[ValueVector],
                 tau_dedup: float = 0.0) -> list[ValueVector]:
    """Non-dominated subset, lexicographically descending, near-duplicates
    (L-infinity distance <= tau_dedup) collapsed keeping the lexicographically
    largest."""
    vectors = list(vectors)
    if not vectors:
        return []
    dim = len(vectors[0])
    if any(len(v) != dim for v in vectors):
        raise ContractViolation("mixed vector dimensions")
    ordered = sorted(set(map(tuple, vectors)), reverse=True)
    if dim == 2:
        front = []
        best_second = -math.inf
        for v in ordered:
            if v[1] > best_second:
                front.append(v)
                best_second = v[1]
    elif len(ordered) > 64:
        arr = np.array(ordered)
        keep = np.ones(len(ordered), dtype=bool)
        for i in range(len(ordered)):
            if not keep[i]:
                continue
            dominated = np.all(arr >= arr[i], axis=1) & np.any(
                arr > arr[i], axis=1)
            if dominated.any():
                keep[i] = False
        front = [ordered[i] for i in range(len(ordered)) if keep[i]]
    else:
        front = [v for v in ordered
                 if not any(dominates(w, v) for w in ordered)]
    if tau_dedup > 0:
        kept: list[ValueVector] = []
        for v in front:
            if all(_linf(v, w) > tau_dedup for w in kept):
                kept.append(v)
        front = kept
    return front


def hausdorff_linf(a: Sequence[ValueVector], b: Sequence[ValueVector]) -> float:
    """Symmetric Hausdorff distance between vector sets under L-infinity."""
    if not a and not b:
        return 0.0
    if not a or not b:
        return math.inf
    d1 = max(min(_linf(v, w) for w in b) for v in a)
    d2 = max(min(_linf(v, w) for w in a) for v in b)
    return max(d1, d2)


def hypervolume(front: Sequence[ValueVector],
                reference: ValueVector) -> float:
    """Lebesgue measure of the union of boxes [reference, v] for v in front.

    Exact sweep for 2 objectives; recursive slicing on the last objective
    otherwise.
    """
    front = [tuple(v) for v in front]
    if not front:
        return 0.0
    for v in front:
        if any(r > c for r, c in zip(reference, v)):
            raise ContractViolation(
                f"reference {reference} is not component-wise <= {v}")
    front = pareto_prune(front)
    dim = len(reference)
    if dim == 1:
        return max(v[0] for v in front) - reference[0]
    if dim == 2:
        total = 0.0
        prev_y = reference[1]
        # descending x: each vector adds a strip above everything taller
        for x, y in front:
            if y > prev_y:
                total += (x - reference[0]) * (y - prev_y)
                prev_y = y
        return total
    # slice on the last coordinate
    cuts = sorted({v[-1] for v in front} | {reference[-1]})
    total = 0.0
    for low, high in zip(cuts, cuts[1:]):
        slab = [v[:-1] for v in front if v[-1] >= high]
        if slab:
            total += (high - low) * hypervolume(slab, reference[:-1])
    return total


def _hv_contribution_prune(front: list[ValueVector], limit: int,
                           tau_dedup: float) -> list[ValueVector]:
    """Drop vectors with the smallest hypervolume contribution until the set
    fits the limit; per-objective maximisers are never dropped."""
    while len(front) > limit:
        reference = tuple(min(v[i] for v in front) - 1.0
                          for i in range(len(front[0])))
        total = hypervolume(front, reference)
        extremes = {max(front, key=lambda v, i=i: (v[i], v))
                    for i in range(len(front[0]))}
        candidates = [v for v in front if v not in extremes]
        if not candidates:
            break
        victim = min(
            candidates,
            key=lambda v: (total - hypervolume([w for w in front if w != v],
                                               reference), v))
        front = [v for v in front if v != victim]
    return sorted(front, reverse=True)


@dataclass(frozen=True)
class FrontEntry:
    vector: ValueVector
    action: Optional[str]  # None for terminal states
    # per successor, aligned with successor_distribution order:
    # (successor state index, successor front entry index)
    successors: Optional[tuple[tuple[int, int], ...]] = None


@dataclass
class SolutionFront:
    scenario_name: str
    scenario_hash: str
    config: SolveConfig
    states: list[StateVector]
    fronts: list[list[FrontEntry]]  # aligned with states
    converged: bool
    approximate: bool
    sweeps: int
    state_index: dict[StateVector, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.state_index:
            self.state_index = {s: i for i, s in enumerate(self.states)}

    def front_at(self, state: StateVector) -> list[ValueVector]:
        return [e.vector for e in self.fronts[self.state_index[state]]]


@dataclass(frozen=True)
class PolicyTrace:
    """Realisation of one front vector.

    ``steps`` is the ordered (state, action) walk for deterministic dynamics;
    for stochastic dynamics ``decisions`` maps each reachable state to its
    action instead and ``steps`` is empty.
    """
    target: ValueVector
    steps: tuple[tuple[StateVector, str], ...] = ()
    decisions: tuple[tuple[StateVector, str], ...] = ()

    @property
    def deterministic(self) -> bool:
        return not self.decisions


class FrontLookupError(LookupError):
    def __init__(self, target: ValueVector, nearest: ValueVector):
        self.target = target
        self.nearest = nearest
        super().__init__(
            f"vector {target} is not on the front; nearest member is "
            f"{nearest}")


def _discount_bound(config: SolveConfig) -> float:
    """Upper bound on |cumulative alignment| per component."""
    if config.gamma == 1:
        return float(config.horizon)
    if config.horizon is None:
        return 1.0 / (1.0 - config.gamma)
    return (1.0 - config.gamma ** config.horizon) / (1.0 - config.gamma)


def default_reference(scenario: ScenarioModel,
                      config: SolveConfig) -> ValueVector:
    """Reference point dominated by every achievable cumulative vector."""
    bound = _discount_bound(config)
    return tuple(-bound for _ in scenario.value_names)


def pmovi(scenario: ScenarioModel, config: SolveConfig,
          action_filter: Optional[ActionFilter] = None,
          scenario_hash: str = "") -> SolutionFront:
    """Pareto multi-objective value iteration.

    Vector-set Bellman backups from V0(s) = {0}; terminal states pinned to
    the zero vector; per-state candidate sets are the cross-products of one
    selection per successor, pruned to the non-dominated subset each sweep.
    Stops when the max per-state Hausdorff distance between consecutive
    sweeps is <= epsilon_conv, or after `horizon` sweeps.
    """
    states = enumerate_states(scenario)
    index = {s: i for i, s in enumerate(states)}
    table = transition_table(scenario, action_filter)
    dim = len(scenario.value_names)
    zero = (0.0,) * dim
    gamma = config.gamma
    limit = config.max_vectors_per_state

    terminal = [isinstance(table[s], str) for s in states]
    # resolve successor state indices once
    dynamics: list[Optional[dict]] = []
    for s in states:
        if isinstance(table[s], str):
            dynamics.append(None)
        else:
            dynamics.append({
                a: (r, [(p, index[ns]) for p, ns in dist])
                for a, (r, dist) in table[s].items()})

    current: list[list[ValueVector]] = [[zero] for _ in states]
    max_sweeps = (config.horizon if config.horizon is not None
                  else config.max_sweeps_unbounded)
    converged = False
    approximate = False
    sweeps_done = 0

    for sweep in range(max_sweeps):
        nxt: list[list[ValueVector]] = []
        delta = 0.0
        for i in range(len(states)):
            if terminal[i]:
                nxt.append([zero])
                continue
            candidates: list[ValueVector] = []
            for action, (reward, dist) in dynamics[i].items():
                for choice in itertools.product(
                        *(current[j] for _, j in dist)):
                    # quantize to keep accumulation-order fp noise from
                    # manufacturing spuriously incomparable vectors
                    vec = tuple(
                        round(reward[k] + gamma * sum(
                            p * choice[m][k]
                            for m, (p, _) in enumerate(dist)), 12)
                        for k in range(dim))
                    candidates.append(vec)
            front = pareto_prune(candidates, config.tau_dedup)
            if limit and len(front) > limit:
                front = _hv_contribution_prune(front, limit, config.tau_dedup)
                approximate = True
            nxt.append(front)
            delta = max(delta, hausdorff_linf(front, current[i]))
        current = nxt
        sweeps_done = sweep + 1
        if delta <= config.epsilon_conv:
            converged = True
            break
    if not converged and config.horizon is None:
        pass  # flagged below via converged=False
    if not converged and config.horizon is not None and gamma == 1:
        # finite-horizon semantics: running exactly H sweeps is the answer
        converged = sweeps_done == config.horizon

    fronts = _attach_provenance(states, terminal, dynamics, current, zero,
                                gamma, config)
    return SolutionFront(
        scenario_name=scenario.name, scenario_hash=scenario_hash,
        config=config, states=states, fronts=fronts, converged=converged,
        approximate=approximate, sweeps=sweeps_done)


def _attach_provenance(states, terminal, dynamics, current, zero, gamma,
                       config) -> list[list[FrontEntry]]:
    """Re-derive, against the final table, the action and per-successor
    selections producing each front vector."""
    dim = len(zero)
    fronts: list[list[FrontEntry]] = []
    tol = max(config.epsilon_conv, ZERO_TOL)
    for i in range(len(states)):
        if terminal[i]:
            fronts.append([FrontEntry(zero, None, None)])
            continue
        candidates: list[tuple[ValueVector, str,
                               tuple[tuple[int, int], ...]]] = []
        for action, (reward, dist) in dynamics[i].items():
            for choice in itertools.product(
                    *(range(len(current[j])) for _, j in dist)):
                cand = tuple(
                    round(reward[k] + gamma * sum(
                        p * current[j][choice[m]][k]
                        for m, (p, j) in enumerate(dist)), 12)
                    for k in range(dim))
                candidates.append((cand, action, tuple(
                    (j, choice[m]) for m, (_, j) in enumerate(dist))))
        exact = {}
        for cand, action, succ in candidates:
            exact.setdefault(cand, (action, succ))
        entries = []
        for vec in current[i]:
            if vec in exact:
                action, succ = exact[vec]
                entries.append(FrontEntry(vec, action, succ))
                continue
            best_err, best = math.inf, None
            for cand, action, succ in candidates:
                err = _linf(cand, vec)
                if err < best_err:
                    best_err, best = err, (action, succ)
            if best is not None and best_err <= tol:
                entries.append(FrontEntry(vec, best[0], best[1]))
            else:
                entries.append(FrontEntry(vec, None, None))
        fronts.append(entries)
    return fronts


def extract_policy(solution: SolutionFront, start: StateVector,
                   target: ValueVector) -> PolicyTrace:
    """Follow provenance links from (start, target).

    Deterministic dynamics yield an ordered step list; stochastic dynamics a
    state -> action map over the states reachable under the policy.
    """
    config = solution.config
    si = solution.state_index[start]
    entries = solution.fronts[si]
    tau = max(config.tau_dedup, ZERO_TOL)
    match = None
    for idx, e in enumerate(entries):
        if _linf(e.vector, target) <= tau:
            match = idx
            break
    if match is None:
        nearest = min((e.vector for e in entries),
                      key=lambda v: (_linf(v, target), tuple(-x for x in v)))
        raise FrontLookupError(tuple(target), nearest)

    horizon = config.horizon or config.max_sweeps_unbounded
    steps: list[tuple[StateVector, str]] = []
    decisions: dict[StateVector, str] = {}
    stochastic = False
    # BFS over (state index, front entry index) pairs reachable under policy
    queue: list[tuple[int, int]] = [(si, match)]
    seen: set[tuple[int, int]] = set()
    ordered = True
    depth = 0
    while queue and depth <= horizon + 1:
        depth += 1
        nxt_queue: list[tuple[int, int]] = []
        for i, j in queue:
            if (i, j) in seen:
                continue
            seen.add((i, j))
            entry = solution.fronts[i][j]
            if entry.action is None:
                continue  # terminal (or missing provenance: stop)
            state = solution.states[i]
            if len(entry.successors) > 1:
                stochastic = True
            if state in decisions and decisions[state] != entry.action:
                ordered = False  # same state, different sweep-role: keep first
            decisions.setdefault(state, entry.action)
            if ordered and not stochastic:
                steps.append((state, entry.action))
            nxt_queue.extend(entry.successors)
        queue = nxt_queue
    if stochastic or not ordered:
        return PolicyTrace(tuple(target), (),
                           tuple(sorted(decisions.items())))
    return PolicyTrace(tuple(target), tuple(steps))


# --- front file io ----------------------------------------------------------

def solution_to_document(solution: SolutionFront,
                         scenario: ScenarioModel) -> dict:
    states_doc = []
    for i, state in enumerate(solution.states):
        entries = []
        for e in solution.fronts[i]:
            entry: dict = {"vector": list(e.vector)}
            if e.action is not None:
                entry["action"] = e.action
                entry["successors"] = [
                    {"state": j, "vector_index": k}
                    for j, k in e.successors]
            entries.append(entry)
        states_doc.append({"state": scenario.levels_of(state),
                           "front": entries})
    config = solution.config
    return {
        "format_version": 1,
        "scenario": solution.scenario_name,
        "scenario_hash": solution.scenario_hash,
        "gamma": config.gamma,
        "horizon": config.horizon,
        "epsilon_conv": config.epsilon_conv,
        "tau_dedup": config.tau_dedup,
        "converged": solution.converged,
        "approximate": solution.approximate,
        "sweeps": solution.sweeps,
        "values": list(scenario.value_names),
        "states": states_doc,
    }


def solution_to_json(solution: SolutionFront,
                     scenario: ScenarioModel) -> str:
    return json.dumps(solution_to_document(solution, scenario),
                      indent=2) + "\n"


def solution_from_document(doc: dict,
                           scenario: ScenarioModel) -> SolutionFront:
    config = SolveConfig(
        gamma=doc["gamma"], horizon=doc["horizon"],
        epsilon_conv=doc["epsilon_conv"], tau_dedup=doc["tau_dedup"])
    states = []
    fronts = []
    for item in doc["states"]:
        states.append(scenario.state_from_levels(item["state"]))
        entries = []
        for e in item["front"]:
            vector = tuple(e["vector"])
            if "action" in e:
                entries.append(FrontEntry(
                    vector, e["action"],
                    tuple((s["state"], s["vector_index"])
                          for s in e["successors"])))
            else:
                entries.append(FrontEntry(vector, None, None))
        fronts.append(entries)
    return SolutionFront(
        scenario_name=doc["scenario"], scenario_hash=doc["scenario_hash"],
        config=config, states=states, fronts=fronts,
        converged=doc["converged"], approximate=doc["approximate"],
        sweeps=doc["sweeps"])
