import type { JobConfig, JobSummary, ResultPayload } from "./types";

/** Service defaults for a fresh scenario form. */
export function defaultConfig(): JobConfig {
  return {
    max_travel_increase_fraction: 0.5,
    max_size_increase_fraction: 0.15,
    enforce_contiguity: true,
    objective_mode: "dissimilarity",
    time_budget_seconds: 60,
    seed: 0,
  };
}

export interface Scenario {
  job: JobSummary;
  /** Frozen copy of the config as submitted; later form edits never touch it. */
  config: JobConfig;
  payload: ResultPayload | null;
  /** Local insertion ordinal, the tiebreak for equal created_at stamps. */
  ordinal: number;
}

/**
 * Submitted scenarios for the comparison list. Keyed by job id, so
 * resubmitting an identical config folds into the existing entry instead of
 * duplicating a row.
 */
export class ScenarioStore {
  private byId = new Map<string, Scenario>();
  private nextOrdinal = 0;

  add(job: JobSummary): Scenario {
    const existing = this.byId.get(job.id);
    if (existing) {
      existing.job = job;
      return existing;
    }
    const scenario: Scenario = {
      job,
      config: { ...job.config },
      payload: null,
      ordinal: this.nextOrdinal++,
    };
    this.byId.set(job.id, scenario);
    return scenario;
  }

  updateJob(job: JobSummary): void {
    const scenario = this.byId.get(job.id);
    if (scenario) scenario.job = job;
  }

  attachResult(jobId: string, payload: ResultPayload): void {
    const scenario = this.byId.get(jobId);
    if (scenario) scenario.payload = payload;
  }

  get(jobId: string): Scenario | undefined {
    return this.byId.get(jobId);
  }

  /** All scenarios, stably ordered by submission time. */
  list(): Scenario[] {
    return [...this.byId.values()].sort((a, b) => {
      if (a.job.created_at !== b.job.created_at) {
        return a.job.created_at < b.job.created_at ? -1 : 1;
      }
      return a.ordinal - b.ordinal;
    });
  }

  clear(): void {
    this.byId.clear();
  }
}
