/** Transport stub that replays recorded service responses. Each route holds
 * a queue of (status, body) pairs; the last entry repeats. */

import type { HttpFn, HttpResponse } from "../src/client";

export interface Replay {
  http: HttpFn;
  requests: { method: string; url: string; body?: string }[];
}

export function replayHttp(
  routes: Record<string, { status?: number; body: unknown }[]>,
): Replay {
  const queues = new Map(
    Object.entries(routes).map(([k, v]) => [k, [...v]]),
  );
  const requests: Replay["requests"] = [];
  const http: HttpFn = async (url, init) => {
    const method = init?.method ?? "GET";
    requests.push({ method, url, body: init?.body });
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const key = `${method} ${path}`;
    const queue = queues.get(key);
    if (!queue || queue.length === 0) {
      throw new Error(`no recorded response for ${key}`);
    }
    const entry = queue.length > 1 ? queue.shift()! : queue[0]!;
    const res: HttpResponse = {
      status: entry.status ?? 200,
      json: async () => JSON.parse(JSON.stringify(entry.body)),
    };
    return res;
  };
  return { http, requests };
}
