/** Pure view-model builders.  Every displayed value is copied from a service
 * response field; the only local work is lookup and ordering, never scenario
 * rule evaluation. */

import type {
  FrontSummary,
  Report,
  ScenarioInfo,
  SessionView,
} from "./types";

export interface Gauge {
  name: string;
  level: string;
  levelIndex: number;
  domainSize: number;
}

export interface ActionButton {
  name: string;
  enabled: boolean;
}

export interface StepLogEntry {
  index: number;
  action: string;
  alignment?: Record<string, number>;
}

export interface SessionViewModel {
  id: string;
  scenario: string;
  status: "active" | "finished";
  outcome: string | null;
  banner: string;
  gauges: Gauge[];
  actions: ActionButton[];
  stepLog: StepLogEntry[];
  revealed: boolean;
}

export interface ValueBar {
  value: string;
  score: number;
}

export interface StepTableRow {
  index: number;
  action: string;
  scores: Record<string, number>;
}

export interface ScatterModel {
  xLabel: string;
  yLabel: string;
  front: { x: number; y: number }[];
  trainee: { x: number; y: number };
  onFront: boolean;
}

export interface ReplayModel {
  label: string;
  target: number[];
  actions: string[];
}

export interface DebriefViewModel {
  outcome: string;
  truncated: boolean;
  dominance: string;
  values: string[];
  bars: ValueBar[];
  stepTable: StepTableRow[];
  scatter: ScatterModel | null;
  regrets: { frontVector: number[]; regret: number[] }[];
  replays: ReplayModel[];
  remarks: string[];
}

export function sessionViewModel(
  view: SessionView,
  scenario: ScenarioInfo,
): SessionViewModel {
  const available = new Set(view.actions);
  const gauges = scenario.variables.map((variable) => {
    const level = view.state[variable.name];
    return {
      name: variable.name,
      level,
      levelIndex: variable.levels.indexOf(level),
      domainSize: variable.levels.length,
    };
  });
  const banner = view.status === "active"
    ? `Step ${view.step_count} — choose an action`
    : `Session finished: ${view.outcome}`;
  return {
    id: view.id,
    scenario: view.scenario,
    status: view.status,
    outcome: view.outcome,
    banner,
    gauges,
    actions: scenario.actions.map((name) => ({
      name,
      enabled: view.status === "active" && available.has(name),
    })),
    stepLog: view.steps.map((step) => ({
      index: step.index,
      action: step.action,
      ...(step.alignment === undefined
        ? {}
        : { alignment: step.alignment }),
    })),
    revealed: view.reveal || view.status === "finished",
  };
}

export function debriefViewModel(
  report: Report,
  front?: FrontSummary,
): DebriefViewModel {
  const values = Object.keys(report.cumulative);
  const bars = values.map((value) => ({
    value,
    score: report.cumulative[value],
  }));
  let scatter: ScatterModel | null = null;
  if (values.length === 2 && front !== undefined) {
    scatter = {
      xLabel: values[0],
      yLabel: values[1],
      front: front.front.map((v) => ({ x: v[0], y: v[1] })),
      trainee: {
        x: report.cumulative[values[0]],
        y: report.cumulative[values[1]],
      },
      onFront: report.dominance === "on-front",
    };
  }
  return {
    outcome: report.outcome,
    truncated: report.truncated,
    dominance: report.dominance,
    values,
    bars,
    stepTable: report.per_step.map((step) => ({
      index: step.index,
      action: step.action,
      scores: step.alignment,
    })),
    scatter,
    regrets: report.regrets.map((r) => ({
      frontVector: r.front_vector,
      regret: r.regret,
    })),
    replays: report.recommendations.map((rec) => ({
      label: rec.label,
      target: rec.target,
      actions: (rec.steps.length > 0 ? rec.steps : rec.decisions)
        .map((s) => s.action),
    })),
    remarks: report.remarks,
  };
}
