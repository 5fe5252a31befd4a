// Hand-built payloads in the exact shapes the service serves. The split
// district here mirrors the smallest interesting case: two schools, four
// blocks, a perfect swap available.

import type {
  BlockProperties,
  DistrictDetail,
  DistrictSummary,
  Feature,
  FeatureCollection,
  GroupKey,
  JobConfig,
  JobSummary,
  OutcomeReportBody,
  ResultPayload,
  ZoneProperties,
} from "../src/types";

export const CONFIG: JobConfig = {
  max_travel_increase_fraction: 0.5,
  max_size_increase_fraction: 0.15,
  enforce_contiguity: true,
  objective_mode: "dissimilarity",
  time_budget_seconds: 60,
  seed: 0,
};

function counts(white: number, black: number): Record<GroupKey, number> {
  return { asian: 0, black, hispanic_latinx: 0, native_american: 0, white };
}

function square(lon: number, lat: number, size = 0.01): Feature<BlockProperties>["geometry"] {
  return {
    type: "Polygon",
    coordinates: [[
      [lon, lat], [lon + size, lat], [lon + size, lat + size], [lon, lat + size], [lon, lat],
    ]],
  };
}

function blockFeature(
  id: string,
  lon: number,
  school: string,
  white: number,
  black: number,
  baseline?: string,
): Feature<BlockProperties> {
  const total = white + black;
  return {
    type: "Feature",
    geometry: square(lon, 0),
    properties: {
      block_id: id,
      school_id: school,
      students_total: total,
      students: total ? { white, black } : {},
      white_share: total ? white / total : null,
      ...(baseline !== undefined ? { baseline_school_id: baseline } : {}),
    },
  };
}

export const SUMMARIES: DistrictSummary[] = [
  {
    id: "fx-split",
    block_count: 4,
    school_count: 2,
    total_students: 8,
    baseline_dissimilarity: 0.5,
  },
];

export const DETAIL: DistrictDetail = {
  id: "fx-split",
  block_count: 4,
  school_count: 2,
  total_students: 8,
  baseline_metrics: {
    dissimilarity: 0.5,
    interaction_exposure: 0.375,
    max_term: { school_id: "s0", value: 0.5 },
  },
  schools: [
    { id: "s0", lat: 0.005, lon: 0.005, enrollment_total: 4, baseline_students: counts(3, 1) },
    { id: "s1", lat: 0.005, lon: 0.025, enrollment_total: 4, baseline_students: counts(1, 3) },
  ],
  blocks: {
    type: "FeatureCollection",
    features: [
      blockFeature("b0", 0.0, "s0", 3, 0),
      blockFeature("b1", 0.01, "s0", 0, 1),
      blockFeature("b2", 0.02, "s1", 1, 0),
      blockFeature("b3", 0.03, "s1", 0, 3),
    ],
  },
};

function zoneFc(members: [string, string[]][]): FeatureCollection<ZoneProperties> {
  return {
    type: "FeatureCollection",
    features: members.map(([school, blocks], index) => ({
      type: "Feature",
      geometry: square(index * 0.02, 0, 0.02),
      properties: { school_id: school, block_count: blocks.length },
    })),
  };
}

export function jobSummary(overrides: Partial<JobSummary> = {}): JobSummary {
  return {
    id: "job-0123456789abcdef",
    district_id: "fx-split",
    config: { ...CONFIG },
    state: "queued",
    progress: null,
    error: null,
    created_at: "2026-08-18T12:00:00Z",
    ...overrides,
  };
}

export const REPORT: OutcomeReportBody = {
  district_id: "fx-split",
  total_students: 8,
  total_switchers: 4,
  switcher_fraction: 0.5,
  mean_travel_delta_minutes: 0.4,
  groups: [
    {
      group: "asian", total_students: 0, switcher_count: 0, switcher_fraction: 0,
      mean_travel_delta_minutes: 0, segregation_before: null, segregation_after: null,
      segregation_change: null, segregation_relative_change: null,
    },
    {
      group: "black", total_students: 4, switcher_count: 1, switcher_fraction: 0.25,
      mean_travel_delta_minutes: 0.8, segregation_before: 0.5, segregation_after: 0.0,
      segregation_change: -0.5, segregation_relative_change: -1.0,
    },
    {
      group: "hispanic_latinx", total_students: 0, switcher_count: 0, switcher_fraction: 0,
      mean_travel_delta_minutes: 0, segregation_before: null, segregation_after: null,
      segregation_change: null, segregation_relative_change: null,
    },
    {
      group: "native_american", total_students: 0, switcher_count: 0, switcher_fraction: 0,
      mean_travel_delta_minutes: 0, segregation_before: null, segregation_after: null,
      segregation_change: null, segregation_relative_change: null,
    },
    {
      group: "white", total_students: 4, switcher_count: 3, switcher_fraction: 0.75,
      mean_travel_delta_minutes: 0.27, segregation_before: 0.5, segregation_after: 0.0,
      segregation_change: -0.5, segregation_relative_change: -1.0,
    },
  ],
  schools: [
    {
      school_id: "s0", students_before: 4, students_after: 4,
      share_before: counts(0.75, 0.25), share_after: counts(0.5, 0.5),
    },
    {
      school_id: "s1", students_before: 4, students_after: 4,
      share_before: counts(0.25, 0.75), share_after: counts(0.5, 0.5),
    },
  ],
};

export function resultPayload(job: JobSummary): ResultPayload {
  return {
    job,
    result: {
      objective_mode: job.config.objective_mode,
      seed: job.config.seed,
      baseline_objective: 0.5,
      best_objective: 0.0,
      termination: "proved_optimal",
      trace: [[0.0, 0.5], [0.4, 0.0]],
      best_plan: [
        { block_id: "b0", school_id: "s0" },
        { block_id: "b1", school_id: "s1" },
        { block_id: "b2", school_id: "s0" },
        { block_id: "b3", school_id: "s1" },
      ],
    },
    report: REPORT,
    zones: zoneFc([["s0", ["b0", "b2"]], ["s1", ["b1", "b3"]]]),
    baseline_zones: zoneFc([["s0", ["b0", "b1"]], ["s1", ["b2", "b3"]]]),
    blocks: {
      type: "FeatureCollection",
      features: [
        blockFeature("b0", 0.0, "s0", 3, 0, "s0"),
        blockFeature("b1", 0.01, "s1", 0, 1, "s0"),
        blockFeature("b2", 0.02, "s0", 1, 0, "s1"),
        blockFeature("b3", 0.03, "s1", 0, 3, "s1"),
      ],
    },
  };
}
