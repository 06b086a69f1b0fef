/** Client-side session model. It only stores service responses verbatim;
 * previews are kept outside the committed state so what-if interactions can
 * never change it (verified by hashing the committed state). */

import { stateHash } from "./hash";
import type { ApiClient } from "./client";
import type {
  ActionChoice,
  ScenarioDoc,
  SessionState,
  StepResult,
  WhatIfResult,
} from "./types";

export class SessionStore {
  /** Latest committed /state payload, exactly as served. */
  state: SessionState | null = null;
  /** Committed step responses, in order. */
  steps: StepResult[] = [];
  /** Latest preview; never merged into the committed state. */
  lastPreview: WhatIfResult | null = null;

  constructor(
    readonly scenario: ScenarioDoc,
    readonly sessionId: string,
    private readonly client: ApiClient,
  ) {}

  /** Hash of the committed session state (previews excluded by design). */
  committedHash(): string {
    return stateHash({ state: this.state, steps: this.steps });
  }

  async refresh(): Promise<SessionState> {
    this.state = await this.client.getState(this.sessionId);
    return this.state;
  }

  async preview(action: ActionChoice): Promise<WhatIfResult> {
    this.lastPreview = await this.client.whatIf(this.sessionId, action);
    return this.lastPreview;
  }

  /** Record a preview response obtained elsewhere (e.g. replayed fixtures). */
  acceptPreview(preview: WhatIfResult): void {
    this.lastPreview = preview;
  }

  async commit(action: ActionChoice): Promise<StepResult> {
    const result = await this.client.step(this.sessionId, action);
    this.steps.push(result);
    this.lastPreview = null;
    await this.refresh();
    return result;
  }

  /** Record a committed step response obtained elsewhere. */
  acceptStep(result: StepResult, state: SessionState): void {
    this.steps.push(result);
    this.lastPreview = null;
    this.state = state;
  }
}
