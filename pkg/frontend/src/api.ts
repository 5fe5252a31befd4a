import type {
  DistrictDetail,
  DistrictSummary,
  JobConfig,
  JobSummary,
  ResultPayload,
} from "./types";

/** Error carrying the HTTP status and the service's `detail` message. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function request<T>(baseUrl: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(`${baseUrl}${path}`, init);
  if (!response.ok) {
    let detail = `${response.status} ${response.statusText}`;
    try {
      const body = await response.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

/** Thin typed client for the scenario service. */
export class ServiceClient {
  constructor(readonly baseUrl: string = "") {}

  listDistricts(): Promise<DistrictSummary[]> {
    return request(this.baseUrl, "/districts");
  }

  getDistrict(id: string): Promise<DistrictDetail> {
    return request(this.baseUrl, `/districts/${encodeURIComponent(id)}`);
  }

  submitJob(districtId: string, config: JobConfig): Promise<JobSummary> {
    return request(this.baseUrl, `/districts/${encodeURIComponent(districtId)}/jobs`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
  }

  getJob(jobId: string): Promise<JobSummary> {
    return request(this.baseUrl, `/jobs/${encodeURIComponent(jobId)}`);
  }

  getResult(jobId: string): Promise<ResultPayload> {
    return request(this.baseUrl, `/jobs/${encodeURIComponent(jobId)}/result`);
  }
}

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onProgress?: (job: JobSummary) => void;
}

/**
 * Poll a job until it settles. Resolves with the final summary when the
 * state reaches "done", rejects with the recorded error on "failed".
 */
export async function pollJob(
  client: ServiceClient,
  jobId: string,
  options: PollOptions = {},
): Promise<JobSummary> {
  const interval = options.intervalMs ?? 1000;
  const deadline = Date.now() + (options.timeoutMs ?? 15 * 60 * 1000);
  for (;;) {
    const job = await client.getJob(jobId);
    options.onProgress?.(job);
    if (job.state === "done") return job;
    if (job.state === "failed") {
      throw new Error(job.error ?? `job ${jobId} failed`);
    }
    if (Date.now() >= deadline) {
      throw new Error(`job ${jobId} still ${job.state} at deadline`);
    }
    await new Promise((resolve) => setTimeout(resolve, interval));
  }
}
