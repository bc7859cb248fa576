/** Poll a synthesis job until it reaches a terminal state. */

import type { ApiClient } from "./api.js";
import type { JobState } from "./types.js";

export interface JobView {
  jobId: string;
  state: JobState;
  audioUrl?: string;
  error?: string;
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export async function pollJob(
  client: ApiClient,
  jobId: string,
  options: {
    intervalMs?: number;
    timeoutMs?: number;
    onUpdate?: (view: JobView) => void;
  } = {},
): Promise<JobView> {
  const { intervalMs = 500, timeoutMs = 300_000, onUpdate } = options;
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const job = await client.getJob(jobId);
    const view: JobView = {
      jobId,
      state: job.state,
      audioUrl: job.state === "done" ? client.audioUrl(jobId) : undefined,
      error: job.state === "failed" ? job.error : undefined,
    };
    onUpdate?.(view);
    if (view.state === "done" || view.state === "failed") return view;
    if (Date.now() >= deadline) {
      throw new Error(`job ${jobId} still ${view.state} after ${timeoutMs} ms`);
    }
    await sleep(intervalMs);
  }
}
