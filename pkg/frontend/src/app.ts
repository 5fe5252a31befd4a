import { ApiError, ServiceClient, pollJob } from "./api";
import { OBJECTIVE_LABELS, score } from "./format";
import { renderMap, type ShadeMode } from "./map";
import {
  baselinePanel,
  comparisonTable,
  outcomePanel,
  progressLine,
  schoolSharePanel,
} from "./panels";
import { ScenarioStore, defaultConfig, type Scenario } from "./state";
import type { DistrictDetail, JobConfig, ObjectiveMode } from "./types";

export interface AppOptions {
  pollIntervalMs?: number;
}

interface Mounts {
  districtSelect: HTMLSelectElement;
  baselineInfo: HTMLElement;
  form: HTMLFormElement;
  formError: HTMLElement;
  progress: HTMLElement;
  mapBaseline: HTMLElement;
  mapCandidate: HTMLElement;
  panels: HTMLElement;
  comparison: HTMLElement;
}

function mount(doc: Document): Mounts {
  const grab = <T extends HTMLElement>(id: string): T => {
    const node = doc.getElementById(id);
    if (!node) throw new Error(`missing #${id} in page`);
    return node as T;
  };
  return {
    districtSelect: grab<HTMLSelectElement>("district-select"),
    baselineInfo: grab("baseline-info"),
    form: grab<HTMLFormElement>("config-form"),
    formError: grab("form-error"),
    progress: grab("progress"),
    mapBaseline: grab("map-baseline"),
    mapCandidate: grab("map-candidate"),
    panels: grab("panels"),
    comparison: grab("comparison"),
  };
}

/**
 * Wire the scenario explorer into an existing page skeleton. Returns the
 * handles the entry point (and the tests) drive.
 */
export function createApp(doc: Document, client: ServiceClient, options: AppOptions = {}) {
  const ui = mount(doc);
  const store = new ScenarioStore();
  let district: DistrictDetail | null = null;
  let activeJobId: string | null = null;
  let shade: ShadeMode = "white_share";

  const formConfig: JobConfig = defaultConfig();

  function readForm(): JobConfig {
    const data = new FormData(ui.form);
    return {
      max_travel_increase_fraction: Number(data.get("travel")) / 100,
      max_size_increase_fraction: Number(data.get("size")) / 100,
      enforce_contiguity: data.get("contiguity") === "on",
      objective_mode: String(data.get("objective")) as ObjectiveMode,
      time_budget_seconds: Number(data.get("budget")),
      seed: Number(data.get("seed")),
    };
  }

  function writeForm(config: JobConfig): void {
    const set = (name: string, value: string) => {
      const field = ui.form.elements.namedItem(name) as HTMLInputElement | HTMLSelectElement | null;
      if (field) field.value = value;
    };
    set("travel", String(config.max_travel_increase_fraction * 100));
    set("size", String(config.max_size_increase_fraction * 100));
    set("objective", config.objective_mode);
    set("budget", String(config.time_budget_seconds));
    set("seed", String(config.seed));
    const contiguity = ui.form.elements.namedItem("contiguity") as HTMLInputElement | null;
    if (contiguity) contiguity.checked = config.enforce_contiguity;
  }

  function renderComparison(): void {
    ui.comparison.replaceChildren(comparisonTable(doc, store.list()));
    for (const row of ui.comparison.querySelectorAll("tr[data-job]")) {
      row.addEventListener("click", () => {
        const id = row.getAttribute("data-job");
        if (id) showScenario(id);
      });
    }
  }

  function renderMaps(scenario: Scenario | null): void {
    if (!district) return;
    const schoolIds = district.schools.map((s) => s.id);
    if (scenario?.payload) {
      const { blocks, zones, baseline_zones } = scenario.payload;
      ui.mapBaseline.replaceChildren(
        renderMap(doc, {
          blocks: district.blocks,
          zones: baseline_zones,
          schoolIds,
          shade,
          title: "baseline zones",
        }),
      );
      ui.mapCandidate.replaceChildren(
        renderMap(doc, {
          blocks,
          zones,
          schoolIds,
          shade,
          title: "candidate zones",
        }),
      );
    } else {
      ui.mapBaseline.replaceChildren(
        renderMap(doc, {
          blocks: district.blocks,
          zones: { type: "FeatureCollection", features: [] },
          schoolIds,
          shade,
          title: "baseline blocks",
        }),
      );
      ui.mapCandidate.replaceChildren();
    }
  }

  function renderPanels(scenario: Scenario | null): void {
    const parts: HTMLElement[] = [];
    if (district) parts.push(baselinePanel(doc, district.baseline_metrics));
    if (scenario?.payload) {
      parts.push(outcomePanel(doc, scenario.payload.report));
      parts.push(schoolSharePanel(doc, scenario.payload.report));
    }
    ui.panels.replaceChildren(...parts);
  }

  function showScenario(jobId: string): void {
    const scenario = store.get(jobId);
    if (!scenario) return;
    activeJobId = jobId;
    ui.progress.replaceChildren(progressLine(doc, scenario.job));
    renderMaps(scenario.payload ? scenario : null);
    renderPanels(scenario);
  }

  async function selectDistrict(id: string): Promise<void> {
    district = await client.getDistrict(id);
    store.clear();
    activeJobId = null;
    ui.baselineInfo.textContent =
      `${district.block_count} blocks, ${district.school_count} schools, ` +
      `${district.total_students} students, baseline ${score(district.baseline_metrics.dissimilarity)}`;
    renderMaps(null);
    renderPanels(null);
    renderComparison();
    ui.progress.replaceChildren();
  }

  async function submit(): Promise<string> {
    if (!district) throw new Error("pick a district first");
    ui.formError.textContent = "";
    const config = readForm();
    let job;
    try {
      job = await client.submitJob(district.id, config);
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        ui.formError.textContent = err.message;
        throw err;
      }
      ui.formError.textContent = err instanceof Error ? err.message : String(err);
      throw err;
    }
    store.add(job);
    renderComparison();
    showScenario(job.id);

    const finished = await pollJob(client, job.id, {
      intervalMs: options.pollIntervalMs ?? 1000,
      onProgress: (update) => {
        store.updateJob(update);
        if (activeJobId === update.id) {
          ui.progress.replaceChildren(progressLine(doc, update));
        }
        renderComparison();
      },
    });
    store.updateJob(finished);

    const payload = await client.getResult(job.id);
    store.attachResult(job.id, payload);
    renderComparison();
    if (activeJobId === job.id) showScenario(job.id);
    return job.id;
  }

  async function start(): Promise<void> {
    const districts = await client.listDistricts();
    ui.districtSelect.replaceChildren(
      ...districts.map((d) => {
        const option = doc.createElement("option");
        option.value = d.id;
        option.textContent = `${d.id} (${d.block_count} blocks, baseline ${score(d.baseline_dissimilarity)})`;
        return option;
      }),
    );
    ui.districtSelect.addEventListener("change", () => {
      void selectDistrict(ui.districtSelect.value).catch((err) => {
        ui.formError.textContent = err instanceof Error ? err.message : String(err);
      });
    });
    ui.form.addEventListener("submit", (event) => {
      event.preventDefault();
      void submit().catch(() => {
        // the error is already on screen; keep the form editable
      });
    });
    const shadeToggle = doc.getElementById("shade-toggle") as HTMLSelectElement | null;
    shadeToggle?.addEventListener("change", () => {
      shade = shadeToggle.value as ShadeMode;
      showScenario(activeJobId ?? "");
      if (!activeJobId) renderMaps(null);
    });
    writeForm(formConfig);
    const first = districts[0];
    if (first) {
      ui.districtSelect.value = first.id;
      await selectDistrict(first.id);
    }
  }

  return {
    start,
    submit,
    selectDistrict,
    showScenario,
    store,
    objectives: OBJECTIVE_LABELS,
    get district() {
      return district;
    },
  };
}
