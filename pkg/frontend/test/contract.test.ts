/** UI contract: what-if previews agree with committed steps field-for-field,
 * and what-ifs never change session state (hash before == hash after). All
 * data is recorded from the live service. */

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/client";
import { canonicalJson, stateHash } from "../src/hash";
import { SessionStore } from "../src/state";
import type {
  ScenarioDoc,
  SessionState,
  StepResult,
  WhatIfResult,
} from "../src/types";
import { replayHttp } from "./replay";

import scenarioDoc from "./fixtures/scenario.json";
import stateBefore from "./fixtures/state_before_whatifs.json";
import stateAfter from "./fixtures/state_after_whatifs.json";
import stateInitial from "./fixtures/state_initial.json";
import stepY2023 from "./fixtures/step_y2023.json";
import whatifY2023 from "./fixtures/whatif_y2023.json";
import whatifs100 from "./fixtures/whatifs_100.json";

const scenario = scenarioDoc as unknown as ScenarioDoc;

describe("what-if vs committed step", () => {
  it("agree field-for-field for the same (year, action, seed)", () => {
    const preview = { ...(whatifY2023 as Record<string, unknown>) };
    expect(preview.committed).toBe(false);
    delete preview.committed;
    expect(canonicalJson(preview)).toBe(canonicalJson(stepY2023));
  });
});

describe("what-if purity", () => {
  it("service session state is identical before and after 100 what-ifs", () => {
    expect(stateHash(stateBefore)).toBe(stateHash(stateAfter));
    expect(canonicalJson(stateBefore)).toBe(canonicalJson(stateAfter));
  });

  it("client-side committed state hash survives 100 previews", () => {
    const { http } = replayHttp({});
    const client = new ApiClient("http://svc", http);
    const store = new SessionStore(scenario, "s1", client);
    store.state = stateInitial as unknown as SessionState;
    const before = store.committedHash();
    for (const preview of whatifs100 as unknown as WhatIfResult[]) {
      store.acceptPreview(preview);
      expect(store.committedHash()).toBe(before);
    }
    expect(store.committedHash()).toBe(before);
  });

  it("previews flow through /whatif and never touch committed state", async () => {
    const { http, requests } = replayHttp({
      "POST /sessions/s1/whatif": [{ body: whatifY2023 }],
    });
    const client = new ApiClient("http://svc", http);
    const store = new SessionStore(scenario, "s1", client);
    store.state = stateInitial as unknown as SessionState;
    const before = store.committedHash();
    for (let i = 0; i < 100; i++) {
      await store.preview({ zone_id: 1, action_id: 0 });
    }
    expect(store.committedHash()).toBe(before);
    expect(requests).toHaveLength(100);
    expect(requests.every((r) => r.url.endsWith("/whatif"))).toBe(true);
  });
});

describe("commit flow", () => {
  it("appends the step and refreshes state from the service", async () => {
    const { http } = replayHttp({
      "POST /sessions/s1/step": [{ body: stepY2023 }],
      "GET /sessions/s1/state": [{ body: stateBefore }],
    });
    const client = new ApiClient("http://svc", http);
    const store = new SessionStore(scenario, "s1", client);
    const result = await store.commit({ zone_id: 1, action_id: 0 });
    expect(result).toEqual(stepY2023 as unknown as StepResult);
    expect(store.steps).toHaveLength(1);
    expect(store.lastPreview).toBeNull();
    expect(canonicalJson(store.state)).toBe(canonicalJson(stateBefore));
  });
});
