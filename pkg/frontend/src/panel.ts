/** Action panel model: the 8 catalog actions with their costs, preview and
 * commit flows, and non-blocking notices for service-side conflicts. */

import { ApiError } from "./client";
import { trace, type TracedValue } from "./traced";
import type { SessionStore } from "./state";
import type {
  ActionChoice,
  ScenarioDoc,
  StepResult,
  WhatIfResult,
} from "./types";

export interface ActionRow {
  actionId: number;
  name: string;
  capex: TracedValue;
  maintenance: TracedValue;
}

export interface ActionPanel {
  rows: ActionRow[];
  zones: number[];
  disabled: boolean;
}

export function buildActionPanel(
  scenario: ScenarioDoc,
  done: boolean,
): ActionPanel {
  return {
    rows: scenario.actions.map((a, i) => ({
      actionId: a.id,
      name: a.name,
      capex: trace(scenario, "scenario", ["actions", i, "capex"]),
      maintenance: trace(scenario, "scenario", [
        "actions",
        i,
        "annual_maintenance",
      ]),
    })),
    zones: scenario.zones.map((z) => z.id),
    disabled: done,
  };
}

export interface PanelOutcome {
  result: StepResult | WhatIfResult | null;
  /** Non-blocking notice (finished episode, malformed action, ...). */
  notice: string | null;
}

async function guarded(
  call: () => Promise<StepResult | WhatIfResult>,
): Promise<PanelOutcome> {
  try {
    const result = await call();
    return {
      result,
      notice: result.duplicate_install
        ? "measure already installed in this zone; no capital charged"
        : null,
    };
  } catch (err) {
    if (err instanceof ApiError) {
      return { result: null, notice: err.message };
    }
    throw err;
  }
}

export function previewAction(
  store: SessionStore,
  action: ActionChoice,
): Promise<PanelOutcome> {
  return guarded(() => store.preview(action));
}

export function commitAction(
  store: SessionStore,
  action: ActionChoice,
): Promise<PanelOutcome> {
  return guarded(() => store.commit(action));
}
