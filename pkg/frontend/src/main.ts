import { ApiClient } from "./api.js";
import { AnalystConsole } from "./controller.js";
import { buildHistogramView, seriesColor } from "./histogram.js";
import { annotateParseError, queryMatchesPreset } from "./state.js";
import type { UiState } from "./state.js";
import { buildTableView, columnsFor, renderTableHtml } from "./table.js";
import { escapeHtml } from "./fmt.js";

const client = new ApiClient();
const app = new AnalystConsole(client);

const presetSelect = document.getElementById("preset") as HTMLSelectElement;
const queryInput = document.getElementById("query") as HTMLInputElement;
const runButton = document.getElementById("run") as HTMLButtonElement;
const fromInput = document.getElementById("from") as HTMLInputElement;
const toInput = document.getElementById("to") as HTMLInputElement;
const limitInput = document.getElementById("limit") as HTMLInputElement;
const bucketInput = document.getElementById("bucket") as HTMLInputElement;
const kindSelect = document.getElementById("kind") as HTMLSelectElement;
const refreshInput = document.getElementById("refresh") as HTMLInputElement;
const refreshState = document.getElementById("refresh-state") as HTMLSpanElement;
const parseErrorPre = document.getElementById("parse-error") as HTMLPreElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const legendDiv = document.getElementById("legend") as HTMLDivElement;
const histogramDiv = document.getElementById("histogram") as HTMLDivElement;
const histogramTitle = document.getElementById("histogram-title") as HTMLHeadingElement;
const tableDiv = document.getElementById("table") as HTMLDivElement;
const tableTitle = document.getElementById("table-title") as HTMLHeadingElement;
const statsSpan = document.getElementById("stats") as HTMLSpanElement;

let timer: number | undefined;

function armTimer(seconds: number): void {
  if (timer !== undefined) window.clearInterval(timer);
  timer = undefined;
  if (seconds >= 1) {
    timer = window.setInterval(() => {
      void app.tick().then(refreshStats);
    }, seconds * 1000);
  }
}

function refreshStats(): void {
  client
    .stats()
    .then((s) => {
      statsSpan.textContent =
        `${s.docs} docs · ${s.kinds["event"] ?? 0} events · ${s.kinds["alert"] ?? 0} alerts`;
    })
    .catch(() => {
      statsSpan.textContent = "";
    });
}

function render(state: UiState): void {
  if (document.activeElement !== queryInput) queryInput.value = state.query;
  presetSelect.value = queryMatchesPreset(state, app.presets) ? (state.presetId ?? "") : "";
  kindSelect.value = state.kind ?? "";
  bucketInput.value = String(state.bucketS);

  if (state.parseError !== null) {
    parseErrorPre.textContent = annotateParseError(state.query, state.parseError);
    parseErrorPre.hidden = false;
  } else {
    parseErrorPre.hidden = true;
  }
  if (state.error !== null && state.parseError === null) {
    banner.textContent = state.error;
    banner.hidden = false;
  } else {
    banner.hidden = true;
  }

  if (state.refreshS >= 1) {
    refreshState.textContent = state.editing ? "refresh paused while editing" : `every ${state.refreshS}s`;
  } else {
    refreshState.textContent = "";
  }

  renderHistogram(state);
  renderTable(state);
}

function renderHistogram(state: UiState): void {
  if (state.histogram === null) {
    histogramTitle.textContent = "Histogram";
    legendDiv.innerHTML = "";
    histogramDiv.innerHTML = "";
    return;
  }
  const width = Math.max(320, histogramDiv.clientWidth || 720);
  const view = buildHistogramView(state.histogram, width, 180);
  histogramTitle.textContent = `Histogram — ${view.total} docs, ${view.bucketWidthS}s buckets`;
  histogramDiv.innerHTML = view.svg;
  legendDiv.innerHTML = view.seriesNames
    .map(
      (name, i) =>
        `<span class="swatch" style="background:${seriesColor(i)}"></span>` +
        `<span class="series-name">${escapeHtml(name)}</span>`,
    )
    .join(" ");
}

function renderTable(state: UiState): void {
  if (state.search === null) {
    tableTitle.textContent = "Results";
    tableDiv.innerHTML = "";
    return;
  }
  const preset =
    state.presetId !== null && queryMatchesPreset(state, app.presets)
      ? app.preset(state.presetId)
      : undefined;
  const columns = columnsFor(state.search.docs, preset);
  tableTitle.textContent = `Results — ${state.search.docs.length} of ${state.search.total}`;
  tableDiv.innerHTML = renderTableHtml(buildTableView(state.search.docs, columns));
}

function fillPresetOptions(): void {
  presetSelect.innerHTML = '<option value="">custom query</option>';
  for (const preset of app.presets) {
    const option = document.createElement("option");
    option.value = preset.id;
    option.textContent = preset.title;
    presetSelect.appendChild(option);
  }
}

presetSelect.addEventListener("change", () => {
  if (presetSelect.value !== "") {
    app.selectPreset(presetSelect.value);
    void app.run().then(refreshStats);
  }
});
runButton.addEventListener("click", () => {
  void app.run().then(refreshStats);
});
queryInput.addEventListener("input", () => app.setQuery(queryInput.value));
queryInput.addEventListener("focus", () => app.beginEdit());
queryInput.addEventListener("blur", () => app.endEdit());
queryInput.addEventListener("keydown", (e: KeyboardEvent) => {
  if (e.key === "Enter") {
    queryInput.blur();
    void app.run().then(refreshStats);
  }
});
fromInput.addEventListener("change", () => app.setRange(fromInput.value, toInput.value));
toInput.addEventListener("change", () => app.setRange(fromInput.value, toInput.value));
limitInput.addEventListener("change", () => app.setLimit(Number(limitInput.value)));
bucketInput.addEventListener("change", () => app.setBucket(Number(bucketInput.value)));
kindSelect.addEventListener("change", () => app.setKind(kindSelect.value));
refreshInput.addEventListener("change", () => {
  const seconds = Number(refreshInput.value);
  const ok = app.setRefresh(seconds);
  refreshInput.classList.toggle("invalid", !ok);
  if (ok) armTimer(seconds);
});

app.onChange(render);
void app.init().then(() => {
  fillPresetOptions();
  refreshStats();
  void app.run();
});
