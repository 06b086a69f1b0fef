/** Action panel: catalog listing with costs, preview/commit plumbing, and
 * non-blocking notices for service conflicts. */

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/client";
import { buildActionPanel, commitAction, previewAction } from "../src/panel";
import { SessionStore } from "../src/state";
import type { ScenarioDoc, SessionState } from "../src/types";
import { replayHttp } from "./replay";

import scenarioDoc from "./fixtures/scenario.json";
import stateInitial from "./fixtures/state_initial.json";
import stepY2023 from "./fixtures/step_y2023.json";
import whatifY2023 from "./fixtures/whatif_y2023.json";

const scenario = scenarioDoc as unknown as ScenarioDoc;

function makeStore(routes: Parameters<typeof replayHttp>[0]): SessionStore {
  const { http } = replayHttp(routes);
  const store = new SessionStore(scenario, "s1", new ApiClient("http://svc", http));
  store.state = JSON.parse(JSON.stringify(stateInitial)) as SessionState;
  return store;
}

describe("action panel", () => {
  it("lists all 8 catalog actions with capex and maintenance", () => {
    const panel = buildActionPanel(scenario, false);
    expect(panel.rows).toHaveLength(8);
    expect(panel.zones).toEqual(scenario.zones.map((z) => z.id));
    for (let i = 0; i < 8; i++) {
      expect(panel.rows[i]!.actionId).toBe(scenario.actions[i]!.id);
      expect(panel.rows[i]!.capex.value).toBe(scenario.actions[i]!.capex);
      expect(panel.rows[i]!.maintenance.value).toBe(
        scenario.actions[i]!.annual_maintenance,
      );
    }
    expect(panel.disabled).toBe(false);
  });

  it("is disabled once the episode is done", () => {
    expect(buildActionPanel(scenario, true).disabled).toBe(true);
  });

  it("preview returns the what-if result without committing", async () => {
    const store = makeStore({
      "POST /sessions/s1/whatif": [{ body: whatifY2023 }],
    });
    const outcome = await previewAction(store, { zone_id: 1, action_id: 0 });
    expect(outcome.notice).toBeNull();
    expect(outcome.result?.reward).toBe(
      (whatifY2023 as { reward: number }).reward,
    );
    expect(store.steps).toHaveLength(0);
  });

  it("surfaces a finished-episode conflict as a notice, not a crash", async () => {
    const store = makeStore({
      "POST /sessions/s1/step": [
        { status: 409, body: { detail: "episode finished" } },
      ],
    });
    const outcome = await commitAction(store, null);
    expect(outcome.result).toBeNull();
    expect(outcome.notice).toMatch(/409/);
    expect(outcome.notice).toMatch(/episode finished/);
  });

  it("flags duplicate installs from the service response", async () => {
    const dup = { ...(stepY2023 as Record<string, unknown>), duplicate_install: true };
    const store = makeStore({
      "POST /sessions/s1/step": [{ body: dup }],
      "GET /sessions/s1/state": [{ body: stateInitial }],
    });
    const outcome = await commitAction(store, { zone_id: 1, action_id: 0 });
    expect(outcome.notice).toMatch(/already installed/);
    expect(outcome.result).not.toBeNull();
  });
});
