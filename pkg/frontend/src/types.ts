/** Response shapes of the session service. Field names mirror the HTTP API
 * exactly; the UI never reshapes or recomputes what the service reports. */

export interface ScenarioAction {
  id: number;
  name: string;
  drainage_boost_mm: number;
  storage_boost_m3: number;
  capex: number;
  annual_maintenance: number;
  lifetime_years: number | null;
}

export interface ScenarioZone {
  id: number;
  name: string;
  population: number;
  polygon: [number, number][];
}

export interface HexCellInfo {
  q: number;
  r: number;
  center: [number, number];
  population: number;
  zone_id: number | null;
}

export interface RewardWeights {
  beta_I: number;
  beta_D: number;
  beta_C: number;
  beta_Q: number;
  beta_A: number;
  beta_M: number;
}

export interface ScenarioDoc {
  name: string;
  hash: string;
  horizon: { start_year: number; end_year: number };
  zones: ScenarioZone[];
  hex: { resolution_m: number; cells: HexCellInfo[] };
  actions: ScenarioAction[];
  reward_weights: RewardWeights;
}

export interface Observation {
  year_index: number;
  intensity_decile: number;
  zone_masks: number[];
  state_key: string;
}

export interface SessionCreated {
  session_id: string;
  seed: number;
  observation: Observation;
}

export interface ZoneTerms {
  I: number;
  D: number;
  C: number;
  Q: number;
  A: number;
  M: number;
  completed: number;
  delayed: number;
  cancelled: number;
}

export interface HexQol {
  q: number;
  r: number;
  qol: number;
}

export interface StepResult {
  year: number;
  action: [number, number] | null;
  duplicate_install: boolean;
  intensity_mm: number;
  reward: number;
  per_zone: Record<string, ZoneTerms>;
  hex_qol: HexQol[];
  observation: Observation;
  done: boolean;
}

export interface WhatIfResult extends StepResult {
  committed: false;
}

export interface ZoneInstallState {
  installed: [number, number][];
  live: [number, number][];
}

export interface SessionState {
  year: number;
  year_index: number;
  steps: number;
  done: boolean;
  cumulative_reward: number;
  zone_states: Record<string, ZoneInstallState>;
  last_per_zone: Record<string, ZoneTerms> | null;
  action_history: ([number, number] | null)[];
}

export interface RunSummary {
  run_id: string;
  mode: string;
  scenario_hash: string;
  steps: number;
  created_at: string;
  finished_at: string | null;
  policy_file: string | null;
}

export interface RunLogRecord {
  year: number;
  action: [number, number] | null;
  duplicate_install: boolean;
  intensity_mm: number;
  R: number;
  per_zone: Record<string, ZoneTerms>;
}

export interface RunRecord extends RunSummary {
  log: RunLogRecord[];
}

export interface TrainAccepted {
  job_id: string;
  status: string;
}

export interface TrainJob {
  status: "running" | "done" | "failed";
  params: {
    episodes: number;
    alpha: number;
    gamma: number;
    epsilon: number;
    seed: number;
  };
  curve: number[];
  policy_file: string | null;
  error: string | null;
}

export type ActionChoice = { zone_id: number; action_id: number } | null;

/** The six monetized/QoL terms of the reward breakdown. */
export const TERMS = ["I", "D", "C", "Q", "A", "M"] as const;
export type Term = (typeof TERMS)[number];
