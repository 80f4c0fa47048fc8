import type { DashboardPreset, EventDoc } from "./api.js";
import { escapeHtml, formatTimestamp } from "./fmt.js";

// Column blocks by event.module, used when no preset table panel applies.
const CONN_COLUMNS = [
  "source.ip",
  "source.port",
  "destination.ip",
  "destination.port",
  "network.transport",
  "network.direction",
  "zeek.connection.history",
];
const HTTP_COLUMNS = [
  "source.ip",
  "destination.ip",
  "http.request.method",
  "url.domain",
  "url.original",
  "user_agent.original",
];
const SURICATA_COLUMNS = [
  "alert.signature",
  "alert.category",
  "alert.severity",
  "source.ip",
  "destination.ip",
  "destination.port",
];
const SLIPS_COLUMNS = [
  "alert.signature",
  "alert.category",
  "slips.detector",
  "slips.confidence",
  "source.ip",
];

/**
 * Preset table columns win; otherwise pick blocks for the modules present
 * in the result set, deduplicated in first-seen order.
 */
export function columnsFor(docs: EventDoc[], preset?: DashboardPreset): string[] {
  const panel = preset?.panels.find((p) => p.type === "table");
  if (panel?.columns !== undefined) return panel.columns;

  const modules = new Set(docs.map((d) => d["event.module"]));
  const columns = ["@timestamp"];
  if (modules.has("zeek")) {
    const httpish = docs.some((d) => d["event.module"] === "zeek" && "url.original" in d);
    columns.push(...(httpish ? HTTP_COLUMNS : CONN_COLUMNS));
  }
  if (modules.has("suricata")) columns.push(...SURICATA_COLUMNS);
  if (modules.has("slips")) columns.push(...SLIPS_COLUMNS);
  if (columns.length === 1) columns.push("event.kind", "event.module");
  return [...new Set(columns)];
}

/** Missing fields render empty; timestamps get a readable UTC form. */
export function cellText(doc: EventDoc, column: string): string {
  const value = doc[column];
  if (value === undefined) return "";
  if (column === "@timestamp" && typeof value === "number") return formatTimestamp(value);
  return String(value);
}

export interface TableView {
  columns: string[];
  rows: string[][];
}

export function buildTableView(docs: EventDoc[], columns: string[]): TableView {
  return {
    columns,
    rows: docs.map((doc) => columns.map((column) => cellText(doc, column))),
  };
}

export function renderTableHtml(view: TableView): string {
  if (view.rows.length === 0) return '<p class="empty">No matching documents.</p>';
  const head = view.columns.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
  const body = view.rows
    .map((row) => `<tr>${row.map((cell) => `<td>${escapeHtml(cell)}</td>`).join("")}</tr>`)
    .join("");
  return `<table><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}
