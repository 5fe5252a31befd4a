// Shapes mirrored from the scenario service's JSON responses. The UI treats
// every numeric field as opaque display data; nothing here is recomputed.

export type GroupKey =
  | "asian"
  | "black"
  | "hispanic_latinx"
  | "native_american"
  | "white";

export type ObjectiveMode = "dissimilarity" | "interaction_exposure" | "leximin";

export interface JobConfig {
  max_travel_increase_fraction: number;
  max_size_increase_fraction: number;
  enforce_contiguity: boolean;
  objective_mode: ObjectiveMode;
  time_budget_seconds: number;
  seed: number;
}

export interface DistrictSummary {
  id: string;
  block_count: number;
  school_count: number;
  total_students: number;
  baseline_dissimilarity: number | null;
}

export interface SchoolRow {
  id: string;
  lat: number;
  lon: number;
  enrollment_total: number;
  baseline_students: Record<GroupKey, number>;
}

export interface BaselineMetrics {
  dissimilarity: number | null;
  interaction_exposure: number | null;
  max_term: { school_id: string; value: number } | null;
}

export interface DistrictDetail {
  id: string;
  block_count: number;
  school_count: number;
  total_students: number;
  baseline_metrics: BaselineMetrics;
  schools: SchoolRow[];
  blocks: FeatureCollection<BlockProperties>;
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface JobSummary {
  id: string;
  district_id: string;
  config: JobConfig;
  state: JobState;
  progress: { elapsed_seconds: number; objective: number } | null;
  error: string | null;
  created_at: string;
}

export interface SolveResultBody {
  objective_mode: ObjectiveMode;
  seed: number;
  baseline_objective: number;
  best_objective: number;
  termination: string;
  trace: [number, number][];
  best_plan: { block_id: string; school_id: string }[];
}

export interface GroupOutcomeRow {
  group: GroupKey;
  total_students: number;
  switcher_count: number;
  switcher_fraction: number;
  mean_travel_delta_minutes: number;
  segregation_before: number | null;
  segregation_after: number | null;
  segregation_change: number | null;
  segregation_relative_change: number | null;
}

export interface SchoolOutcomeRow {
  school_id: string;
  students_before: number;
  students_after: number;
  share_before: Record<GroupKey, number>;
  share_after: Record<GroupKey, number>;
}

export interface OutcomeReportBody {
  district_id: string;
  total_students: number;
  total_switchers: number;
  switcher_fraction: number;
  mean_travel_delta_minutes: number;
  groups: GroupOutcomeRow[];
  schools: SchoolOutcomeRow[];
}

export interface BlockProperties {
  block_id: string;
  school_id: string;
  students_total: number;
  students: Partial<Record<GroupKey, number>>;
  white_share: number | null;
  baseline_school_id?: string;
}

export interface ZoneProperties {
  school_id: string;
  block_count: number;
}

export interface Feature<P> {
  type: "Feature";
  properties: P;
  geometry: Geometry;
}

export interface FeatureCollection<P> {
  type: "FeatureCollection";
  features: Feature<P>[];
}

export type Geometry =
  | { type: "Polygon"; coordinates: number[][][] }
  | { type: "MultiPolygon"; coordinates: number[][][][] };

export interface ResultPayload {
  job: JobSummary;
  result: SolveResultBody;
  report: OutcomeReportBody;
  zones: FeatureCollection<ZoneProperties>;
  baseline_zones: FeatureCollection<ZoneProperties>;
  blocks: FeatureCollection<BlockProperties>;
}
