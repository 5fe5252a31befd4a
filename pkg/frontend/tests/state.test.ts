import { describe, expect, it } from "vitest";

import { ScenarioStore, defaultConfig } from "../src/state";
import { jobSummary, resultPayload } from "./fixtures";

describe("defaultConfig", () => {
  it("matches the service defaults", () => {
    expect(defaultConfig()).toEqual({
      max_travel_increase_fraction: 0.5,
      max_size_increase_fraction: 0.15,
      enforce_contiguity: true,
      objective_mode: "dissimilarity",
      time_budget_seconds: 60,
      seed: 0,
    });
  });
});

describe("ScenarioStore", () => {
  it("freezes the submitted config against later edits", () => {
    const store = new ScenarioStore();
    const job = jobSummary();
    const scenario = store.add(job);

    job.config.max_travel_increase_fraction = 99;
    expect(scenario.config.max_travel_increase_fraction).toBe(0.5);
  });

  it("folds a resubmission of the same job id into one entry", () => {
    const store = new ScenarioStore();
    store.add(jobSummary({ state: "queued" }));
    store.add(jobSummary({ state: "done" }));
    expect(store.list()).toHaveLength(1);
    expect(store.list()[0]!.job.state).toBe("done");
  });

  it("orders scenarios by submission time, insertion order on ties", () => {
    const store = new ScenarioStore();
    store.add(jobSummary({ id: "job-b", created_at: "2026-08-18T12:00:05Z" }));
    store.add(jobSummary({ id: "job-a", created_at: "2026-08-18T12:00:01Z" }));
    store.add(jobSummary({ id: "job-c", created_at: "2026-08-18T12:00:05Z" }));

    expect(store.list().map((s) => s.job.id)).toEqual(["job-a", "job-b", "job-c"]);
  });

  it("keeps the ordering stable across state updates", () => {
    const store = new ScenarioStore();
    store.add(jobSummary({ id: "job-1", created_at: "2026-08-18T12:00:00Z" }));
    store.add(jobSummary({ id: "job-2", created_at: "2026-08-18T12:00:00Z" }));
    store.updateJob(jobSummary({ id: "job-1", created_at: "2026-08-18T12:00:00Z", state: "done" }));

    expect(store.list().map((s) => s.job.id)).toEqual(["job-1", "job-2"]);
  });

  it("attaches result payloads to the right scenario", () => {
    const store = new ScenarioStore();
    const job = jobSummary({ state: "done" });
    store.add(job);
    store.attachResult(job.id, resultPayload(job));
    store.attachResult("job-elsewhere", resultPayload(job));

    expect(store.get(job.id)?.payload?.result.best_objective).toBe(0.0);
    expect(store.get("job-elsewhere")).toBeUndefined();
  });
});
