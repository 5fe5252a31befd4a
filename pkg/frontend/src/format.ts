import type { GroupKey, ObjectiveMode } from "./types";

export const GROUP_LABELS: Record<GroupKey, string> = {
  asian: "Asian",
  black: "Black",
  hispanic_latinx: "Hispanic/Latinx",
  native_american: "Native American",
  white: "White",
};

export const OBJECTIVE_LABELS: Record<ObjectiveMode, string> = {
  dissimilarity: "Dissimilarity",
  interaction_exposure: "Interaction exposure",
  leximin: "Worst school first",
};

/** "0.4213" style score, or a dash when the service reports null. */
export function score(value: number | null | undefined): string {
  if (value === null || value === undefined || !Number.isFinite(value)) return "–";
  return value.toFixed(4);
}

/** Signed percentage with one decimal: -0.123 -> "-12.3%". */
export function signedPercent(fraction: number | null | undefined): string {
  if (fraction === null || fraction === undefined || !Number.isFinite(fraction)) return "–";
  const pct = fraction * 100;
  const sign = pct > 0 ? "+" : "";
  return `${sign}${pct.toFixed(1)}%`;
}

/** Unsigned percentage with one decimal: 0.148 -> "14.8%". */
export function percent(fraction: number | null | undefined): string {
  if (fraction === null || fraction === undefined || !Number.isFinite(fraction)) return "–";
  return `${(fraction * 100).toFixed(1)}%`;
}

/** Signed minutes with one decimal: 1.75 -> "+1.8 min". */
export function minutes(value: number | null | undefined): string {
  if (value === null || value === undefined || !Number.isFinite(value)) return "–";
  const sign = value > 0 ? "+" : "";
  return `${sign}${value.toFixed(1)} min`;
}

export function count(value: number): string {
  return value.toLocaleString("en-US");
}

/** Clock text for elapsed solver seconds: 83.2 -> "1:23". */
export function elapsed(seconds: number): string {
  const whole = Math.floor(seconds);
  const m = Math.floor(whole / 60);
  const s = whole % 60;
  return `${m}:${String(s).padStart(2, "0")}`;
}
