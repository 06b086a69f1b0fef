/** Training-job polling: 1 s interval, stops when the job leaves "running".
 * The sleep function is injectable for tests. */

import type { ApiClient } from "./client";
import type { TrainJob } from "./types";

export type SleepFn = (ms: number) => Promise<void>;

const realSleep: SleepFn = (ms) => new Promise((r) => setTimeout(r, ms));

export const POLL_INTERVAL_MS = 1000;

export async function pollTraining(
  client: ApiClient,
  jobId: string,
  onUpdate: (job: TrainJob) => void,
  sleep: SleepFn = realSleep,
  intervalMs: number = POLL_INTERVAL_MS,
): Promise<TrainJob> {
  for (;;) {
    const job = await client.getTraining(jobId);
    onUpdate(job);
    if (job.status !== "running") {
      return job;
    }
    await sleep(intervalMs);
  }
}
