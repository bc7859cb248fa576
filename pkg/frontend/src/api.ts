/** Thin fetch client for the service API; errors carry the server's name. */

import type { Instrument, JobJson, SparseRoll } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    message: string,
  ) {
    super(message);
  }
}

async function raiseFor(resp: Response): Promise<never> {
  let name = `HTTP ${resp.status}`;
  let message = resp.statusText;
  try {
    const body = await resp.json();
    const detail = body.detail ?? body;
    if (typeof detail === "string") {
      message = detail;
    } else if (detail && typeof detail === "object") {
      name = detail.error ?? name;
      message = detail.message ?? JSON.stringify(detail);
    }
  } catch {
    // non-JSON body; keep the status text
  }
  throw new ApiError(resp.status, name, message);
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async uploadScore(
    name: string,
    data: Blob | Uint8Array,
  ): Promise<{ id: string; pianoroll: SparseRoll }> {
    const blob =
      data instanceof Blob ? data : new Blob([data as BlobPart]);
    const form = new FormData();
    form.append("file", blob, name);
    const resp = await fetch(this.url("/api/scores"), {
      method: "POST",
      body: form,
    });
    if (!resp.ok) await raiseFor(resp);
    return resp.json();
  }

  async getRoll(scoreId: string): Promise<SparseRoll> {
    const resp = await fetch(this.url(`/api/scores/${scoreId}/pianoroll`));
    if (!resp.ok) await raiseFor(resp);
    return resp.json();
  }

  async putRoll(scoreId: string, roll: SparseRoll): Promise<void> {
    const resp = await fetch(this.url(`/api/scores/${scoreId}/pianoroll`), {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(roll),
    });
    if (!resp.ok) await raiseFor(resp);
  }

  async listInstruments(): Promise<Instrument[]> {
    const resp = await fetch(this.url("/api/instruments"));
    if (!resp.ok) await raiseFor(resp);
    return resp.json();
  }

  async synthesize(
    scoreId: string,
    instrumentLabel: string,
  ): Promise<{ job_id: string }> {
    const resp = await fetch(this.url("/api/synthesize"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        score_id: scoreId,
        instrument_label: instrumentLabel,
      }),
    });
    if (!resp.ok) await raiseFor(resp);
    return resp.json();
  }

  async getJob(jobId: string): Promise<JobJson> {
    const resp = await fetch(this.url(`/api/jobs/${jobId}`));
    if (!resp.ok) await raiseFor(resp);
    return resp.json();
  }

  audioUrl(jobId: string): string {
    return this.url(`/api/jobs/${jobId}/audio`);
  }
}
