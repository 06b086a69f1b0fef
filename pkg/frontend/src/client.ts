/** Typed client for the session service. The transport is injectable so
 * tests can replay recorded responses without a network. */

import type {
  ActionChoice,
  RunRecord,
  RunSummary,
  ScenarioDoc,
  SessionCreated,
  SessionState,
  StepResult,
  TrainAccepted,
  TrainJob,
  WhatIfResult,
} from "./types";

export interface HttpResponse {
  status: number;
  json(): Promise<unknown>;
}

export type HttpFn = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<HttpResponse>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service responded ${status}: ${detail}`);
  }
}

function defaultHttp(): HttpFn {
  return (url, init) => fetch(url, init);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly http: HttpFn = defaultHttp(),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: Parameters<HttpFn>[1] = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.http(this.baseUrl + path, init);
    const doc = await res.json();
    if (res.status >= 400) {
      const detail =
        typeof doc === "object" && doc !== null && "detail" in doc
          ? JSON.stringify((doc as { detail: unknown }).detail)
          : JSON.stringify(doc);
      throw new ApiError(res.status, detail);
    }
    return doc as T;
  }

  getScenario(): Promise<ScenarioDoc> {
    return this.request("GET", "/scenario");
  }

  createSession(seed?: number): Promise<SessionCreated> {
    return this.request("POST", "/sessions", seed === undefined ? {} : { seed });
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${sessionId}/state`);
  }

  step(sessionId: string, action: ActionChoice): Promise<StepResult> {
    return this.request("POST", `/sessions/${sessionId}/step`, { action });
  }

  whatIf(sessionId: string, action: ActionChoice): Promise<WhatIfResult> {
    return this.request("POST", `/sessions/${sessionId}/whatif`, { action });
  }

  reset(sessionId: string, seed?: number): Promise<SessionCreated> {
    return this.request(
      "POST",
      `/sessions/${sessionId}/reset`,
      seed === undefined ? {} : { seed },
    );
  }

  startTraining(params: {
    episodes?: number;
    alpha?: number;
    gamma?: number;
    epsilon?: number;
    seed?: number;
  }): Promise<TrainAccepted> {
    return this.request("POST", "/train", params);
  }

  getTraining(jobId: string): Promise<TrainJob> {
    return this.request("GET", `/train/${jobId}`);
  }

  listRuns(): Promise<RunSummary[]> {
    return this.request("GET", "/runs");
  }

  getRun(runId: string): Promise<RunRecord> {
    return this.request("GET", `/runs/${runId}`);
  }
}
