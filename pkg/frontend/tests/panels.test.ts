import { describe, expect, it } from "vitest";

import { minutes, percent, score, signedPercent } from "../src/format";
import { comparisonTable, outcomePanel, progressLine, schoolSharePanel } from "../src/panels";
import { ScenarioStore } from "../src/state";
import { REPORT, jobSummary, resultPayload } from "./fixtures";

describe("outcomePanel", () => {
  it("copies every group field through its formatter, nothing recomputed", () => {
    const panel = outcomePanel(document, REPORT);
    for (const group of REPORT.groups) {
      const row = panel.querySelector(`tr[data-group="${group.group}"]`)!;
      const cells = [...row.querySelectorAll("td")].map((td) => td.textContent);
      expect(cells.slice(1)).toEqual([
        score(group.segregation_before),
        score(group.segregation_after),
        signedPercent(group.segregation_relative_change),
        percent(group.switcher_fraction),
        minutes(group.mean_travel_delta_minutes),
      ]);
    }
  });

  it("shows the switcher headline from the report totals", () => {
    const text = outcomePanel(document, REPORT).querySelector("p.headline")!.textContent!;
    expect(text).toContain("4 of 8 students switch");
    expect(text).toContain("(50.0%)");
    expect(text).toContain("+0.4 min");
  });

  it("dashes out groups the service reports as null", () => {
    const row = outcomePanel(document, REPORT).querySelector('tr[data-group="asian"]')!;
    const cells = [...row.querySelectorAll("td")].map((td) => td.textContent);
    expect(cells[1]).toBe("–");
    expect(cells[3]).toBe("–");
  });
});

describe("schoolSharePanel", () => {
  it("lists before and after white shares per school", () => {
    const panel = schoolSharePanel(document, REPORT);
    const s0 = panel.querySelector('tr[data-school="s0"]')!;
    const cells = [...s0.querySelectorAll("td")].map((td) => td.textContent);
    expect(cells).toEqual(["s0", "4 → 4", "75.0%", "50.0%"]);
  });
});

describe("progressLine", () => {
  it("shows state, clock, and objective while running", () => {
    const line = progressLine(
      document,
      jobSummary({ state: "running", progress: { elapsed_seconds: 83.2, objective: 0.41 } }),
    );
    expect(line.textContent).toBe("running · 1:23 · objective 0.4100");
  });

  it("shows the recorded error when failed", () => {
    const line = progressLine(
      document,
      jobSummary({ state: "failed", error: "ValueError: no movable blocks" }),
    );
    expect(line.textContent).toBe("failed: ValueError: no movable blocks");
    expect(line.className).toContain("state-failed");
  });

  it("falls back to the bare state before any trace arrives", () => {
    expect(progressLine(document, jobSummary()).textContent).toBe("queued");
  });
});

describe("comparisonTable", () => {
  it("renders one row per scenario in store order with result fields", () => {
    const store = new ScenarioStore();
    const first = jobSummary({ id: "job-1", created_at: "2026-08-18T12:00:00Z", state: "done" });
    const second = jobSummary({ id: "job-2", created_at: "2026-08-18T12:00:30Z" });
    store.add(first);
    store.add(second);
    store.attachResult("job-1", resultPayload(first));

    const table = comparisonTable(document, store.list());
    const rows = [...table.querySelectorAll("tr[data-job]")];
    expect(rows.map((r) => r.getAttribute("data-job"))).toEqual(["job-1", "job-2"]);

    const firstCells = [...rows[0]!.querySelectorAll("td")].map((td) => td.textContent);
    expect(firstCells[2]).toBe("done");
    expect(firstCells[3]).toBe(score(0.5));
    expect(firstCells[4]).toBe(score(0.0));
    expect(firstCells[5]).toBe(percent(0.5));

    const secondCells = [...rows[1]!.querySelectorAll("td")].map((td) => td.textContent);
    expect(secondCells[4]).toBe("–");
  });

  it("describes the frozen config, not the live form", () => {
    const store = new ScenarioStore();
    const job = jobSummary({
      config: {
        max_travel_increase_fraction: 1.0,
        max_size_increase_fraction: 0.15,
        enforce_contiguity: false,
        objective_mode: "leximin",
        time_budget_seconds: 60,
        seed: 3,
      },
    });
    store.add(job);
    const label = comparisonTable(document, store.list())
      .querySelector("tr[data-job] td:nth-child(2)")!.textContent!;
    expect(label).toBe("travel +100%, size +15%, free, Worst school first");
  });
});
