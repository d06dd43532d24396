/** Wire types for the service REST API (v1).  These mirror the JSON bodies
 * exactly; the UI never derives scenario facts on its own. */

export interface ScenarioInfo {
  name: string;
  hash: string;
  variables: { name: string; levels: string[] }[];
  actions: string[];
  values: string[];
  initial_state: Record<string, string>;
}

export interface SessionStep {
  index: number;
  action: string;
  state: Record<string, string>;
  alignment?: Record<string, number>;
}

export interface SessionView {
  id: string;
  scenario: string;
  scenario_hash: string;
  seed: number;
  gamma: number;
  horizon: number;
  reveal: boolean;
  status: "active" | "finished";
  outcome: string | null;
  state: Record<string, string>;
  actions: string[];
  values: string[];
  steps: SessionStep[];
  step_count: number;
  created_at: string;
  updated_at: string;
}

export interface StepResult {
  session: string;
  index: number;
  action: string;
  state: Record<string, string>;
  status: "active" | "finished";
  outcome: string | null;
  actions: string[];
  alignment?: Record<string, number>;
}

export interface ReportStep {
  index: number;
  action: string;
  state: Record<string, string>;
  alignment: Record<string, number>;
}

export interface Recommendation {
  label: string;
  target: number[];
  steps: { state: Record<string, string>; action: string }[];
  decisions: { state: Record<string, string>; action: string }[];
}

export interface Report {
  format_version: number;
  scenario: string;
  scenario_hash: string;
  gamma: number;
  outcome: string;
  truncated: boolean;
  cumulative: Record<string, number>;
  per_step: ReportStep[];
  dominance: "on-front" | "dominated" | "incomparable-after-truncation";
  regrets: { front_vector: number[]; regret: number[] }[];
  nearest_front_vector: number[];
  recommendations: Recommendation[];
  remarks: string[];
}

export interface FrontSummary {
  scenario: string;
  hash: string;
  gamma: number;
  horizon: number;
  converged: boolean;
  approximate: boolean;
  sweeps: number;
  values: string[];
  front: number[][];
  per_value_max: Record<string, number>;
}

export interface ServiceError {
  code: string;
  message: string;
  details: Record<string, unknown>;
}
