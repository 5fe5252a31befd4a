import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, ServiceClient, pollJob } from "../src/api";
import { CONFIG, SUMMARIES, jobSummary } from "./fixtures";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.restoreAllMocks();
});

describe("ServiceClient", () => {
  it("lists districts from the base url", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(SUMMARIES));
    vi.stubGlobal("fetch", fetchMock);

    const rows = await new ServiceClient("http://svc:9000").listDistricts();
    expect(fetchMock).toHaveBeenCalledWith("http://svc:9000/districts", undefined);
    expect(rows).toEqual(SUMMARIES);
  });

  it("posts the config as the job body", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(jobSummary(), 202));
    vi.stubGlobal("fetch", fetchMock);

    await new ServiceClient().submitJob("fx-split", CONFIG);
    const [url, init] = fetchMock.mock.calls[0]!;
    expect(url).toBe("/districts/fx-split/jobs");
    expect(init.method).toBe("POST");
    expect(init.headers["Content-Type"]).toBe("application/json");
    expect(JSON.parse(init.body)).toEqual(CONFIG);
  });

  it("escapes ids in paths", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(jobSummary()));
    vi.stubGlobal("fetch", fetchMock);

    await new ServiceClient().getJob("job with space");
    expect(fetchMock.mock.calls[0]![0]).toBe("/jobs/job%20with%20space");
  });

  it("surfaces the service detail message on errors", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(jsonResponse({ detail: "invalid config: seed" }, 422)),
    );
    const err = await new ServiceClient().submitJob("fx-split", CONFIG).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(422);
    expect(err.message).toBe("invalid config: seed");
  });

  it("falls back to the status line when the error body is not json", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(new Response("boom", { status: 500, statusText: "Server Error" })),
    );
    const err = await new ServiceClient().listDistricts().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.message).toBe("500 Server Error");
  });
});

describe("pollJob", () => {
  it("resolves once the job reaches done and reports progress along the way", async () => {
    const states = [
      jobSummary({ state: "queued" }),
      jobSummary({ state: "running", progress: { elapsed_seconds: 1.5, objective: 0.4 } }),
      jobSummary({ state: "done", progress: { elapsed_seconds: 3.0, objective: 0.1 } }),
    ];
    let call = 0;
    vi.stubGlobal(
      "fetch",
      vi.fn().mockImplementation(() => Promise.resolve(jsonResponse(states[call++]))),
    );

    const seen: string[] = [];
    const finished = await pollJob(new ServiceClient(), "job-1", {
      intervalMs: 0,
      onProgress: (job) => seen.push(job.state),
    });
    expect(finished.state).toBe("done");
    expect(seen).toEqual(["queued", "running", "done"]);
  });

  it("rejects with the recorded error when the job failed", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(
        jsonResponse(jobSummary({ state: "failed", error: "ValueError: no schools" })),
      ),
    );
    await expect(pollJob(new ServiceClient(), "job-1", { intervalMs: 0 })).rejects.toThrow(
      "ValueError: no schools",
    );
  });

  it("gives up at the deadline while the job is still running", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(jsonResponse(jobSummary({ state: "running" }))),
    );
    await expect(
      pollJob(new ServiceClient(), "job-1", { intervalMs: 0, timeoutMs: 0 }),
    ).rejects.toThrow(/still running/);
  });
});
