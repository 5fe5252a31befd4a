import { GROUP_LABELS, OBJECTIVE_LABELS, elapsed, minutes, percent, score, signedPercent } from "./format";
import type { Scenario } from "./state";
import type { BaselineMetrics, JobSummary, OutcomeReportBody } from "./types";

// Every cell below copies a field out of a service payload through a pure
// formatter. Keep it that way: the UI never derives its own metrics.

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  text?: string,
  className?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (text !== undefined) node.textContent = text;
  if (className) node.className = className;
  return node;
}

function headerRow(doc: Document, labels: string[]): HTMLTableRowElement {
  const row = doc.createElement("tr");
  for (const label of labels) row.appendChild(el(doc, "th", label));
  return row;
}

export function baselinePanel(doc: Document, metrics: BaselineMetrics): HTMLElement {
  const panel = el(doc, "div", undefined, "panel");
  panel.appendChild(el(doc, "h3", "Baseline segregation"));
  const list = doc.createElement("dl");
  const pairs: [string, string][] = [
    ["Dissimilarity", score(metrics.dissimilarity)],
    ["Interaction exposure", score(metrics.interaction_exposure)],
    [
      "Most imbalanced school",
      metrics.max_term ? `${metrics.max_term.school_id} (${score(metrics.max_term.value)})` : "–",
    ],
  ];
  for (const [label, value] of pairs) {
    list.appendChild(el(doc, "dt", label));
    list.appendChild(el(doc, "dd", value));
  }
  panel.appendChild(list);
  return panel;
}

/** Per-group outcomes of one finished scenario: the before/after panel. */
export function outcomePanel(doc: Document, report: OutcomeReportBody): HTMLElement {
  const panel = el(doc, "div", undefined, "panel");
  panel.appendChild(el(doc, "h3", "Outcomes by group"));

  const headline = el(
    doc,
    "p",
    `${report.total_switchers} of ${report.total_students} students switch ` +
      `(${percent(report.switcher_fraction)}), travel ${minutes(report.mean_travel_delta_minutes)} on average`,
    "headline",
  );
  panel.appendChild(headline);

  const table = doc.createElement("table");
  table.className = "outcomes";
  table.appendChild(
    headerRow(doc, ["Group", "Before", "After", "Change", "Switchers", "Travel"]),
  );
  for (const group of report.groups) {
    const row = doc.createElement("tr");
    row.setAttribute("data-group", group.group);
    row.appendChild(el(doc, "td", GROUP_LABELS[group.group]));
    row.appendChild(el(doc, "td", score(group.segregation_before)));
    row.appendChild(el(doc, "td", score(group.segregation_after)));
    row.appendChild(el(doc, "td", signedPercent(group.segregation_relative_change)));
    row.appendChild(el(doc, "td", percent(group.switcher_fraction)));
    row.appendChild(el(doc, "td", minutes(group.mean_travel_delta_minutes)));
    table.appendChild(row);
  }
  panel.appendChild(table);
  return panel;
}

/** White share per school before and after, the map legend's companion. */
export function schoolSharePanel(doc: Document, report: OutcomeReportBody): HTMLElement {
  const panel = el(doc, "div", undefined, "panel");
  panel.appendChild(el(doc, "h3", "White share by school"));
  const table = doc.createElement("table");
  table.appendChild(headerRow(doc, ["School", "Students", "Before", "After"]));
  for (const school of report.schools) {
    const row = doc.createElement("tr");
    row.setAttribute("data-school", school.school_id);
    row.appendChild(el(doc, "td", school.school_id));
    row.appendChild(el(doc, "td", `${school.students_before} → ${school.students_after}`));
    row.appendChild(el(doc, "td", percent(school.share_before.white)));
    row.appendChild(el(doc, "td", percent(school.share_after.white)));
    table.appendChild(row);
  }
  panel.appendChild(table);
  return panel;
}

export function progressLine(doc: Document, job: JobSummary): HTMLElement {
  const line = el(doc, "p", undefined, `progress state-${job.state}`);
  if (job.state === "failed") {
    line.textContent = `failed: ${job.error ?? "unknown error"}`;
  } else if (job.progress) {
    line.textContent =
      `${job.state} · ${elapsed(job.progress.elapsed_seconds)} · ` +
      `objective ${score(job.progress.objective)}`;
  } else {
    line.textContent = job.state;
  }
  return line;
}

function configLabel(scenario: Scenario): string {
  const c = scenario.config;
  return (
    `travel +${Math.round(c.max_travel_increase_fraction * 100)}%, ` +
    `size +${Math.round(c.max_size_increase_fraction * 100)}%, ` +
    `${c.enforce_contiguity ? "contiguous" : "free"}, ` +
    `${OBJECTIVE_LABELS[c.objective_mode]}`
  );
}

/** One row per submitted scenario, ordered by the store (submission time). */
export function comparisonTable(doc: Document, scenarios: Scenario[]): HTMLElement {
  const table = doc.createElement("table");
  table.className = "comparison";
  table.appendChild(
    headerRow(doc, ["#", "Configuration", "State", "Baseline", "Best", "Switchers"]),
  );
  scenarios.forEach((scenario, index) => {
    const row = doc.createElement("tr");
    row.setAttribute("data-job", scenario.job.id);
    row.appendChild(el(doc, "td", String(index + 1)));
    row.appendChild(el(doc, "td", configLabel(scenario)));
    row.appendChild(el(doc, "td", scenario.job.state));
    const result = scenario.payload?.result;
    const report = scenario.payload?.report;
    row.appendChild(el(doc, "td", score(result?.baseline_objective ?? null)));
    row.appendChild(el(doc, "td", score(result?.best_objective ?? null)));
    row.appendChild(el(doc, "td", report ? percent(report.switcher_fraction) : "–"));
    table.appendChild(row);
  });
  return table;
}
