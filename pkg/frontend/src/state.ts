import type { DashboardPreset, HistogramResponse, SearchResponse } from "./api.js";
import type { QueryParseError } from "./api.js";

export interface UiState {
  query: string;
  fromText: string; // raw range inputs; blank means unbounded
  toText: string;
  limit: number;
  bucketS: number;
  splitBy?: string;
  kind?: string;
  presetId: string | null;
  editing: boolean; // true while the analyst types; pauses auto refresh
  refreshS: number; // 0 = auto refresh off
  search: SearchResponse | null;
  histogram: HistogramResponse | null;
  error: string | null;
  parseError: QueryParseError | null;
}

export function initialState(): UiState {
  return {
    query: "",
    fromText: "",
    toText: "",
    limit: 100,
    bucketS: 5,
    presetId: null,
    editing: false,
    refreshS: 0,
    search: null,
    histogram: null,
    error: null,
    parseError: null,
  };
}

/** Put the preset's exact query string in the bar and adopt its settings. */
export function applyPreset(state: UiState, preset: DashboardPreset): UiState {
  return {
    ...state,
    query: preset.query_string,
    presetId: preset.id,
    bucketS: preset.default_bucket_s,
    splitBy: preset.split_by,
    kind: preset.kind,
    editing: false,
  };
}

export function editQuery(state: UiState, text: string): UiState {
  return { ...state, query: text, editing: true };
}

/** False once the analyst has pivoted away from the selected preset's string. */
export function queryMatchesPreset(state: UiState, presets: DashboardPreset[]): boolean {
  const preset = presets.find((p) => p.id === state.presetId);
  return preset !== undefined && preset.query_string === state.query;
}

export function validRefreshInterval(seconds: number): boolean {
  return Number.isFinite(seconds) && seconds >= 1;
}

export function shouldAutoRefresh(state: UiState): boolean {
  return state.refreshS >= 1 && !state.editing;
}

/** Accepts an ISO-8601 datetime or raw epoch seconds; blank means open. */
export function parseTimeInput(text: string): { us?: number; bad?: true } {
  const trimmed = text.trim();
  if (trimmed === "") return {};
  if (/^\d+(\.\d+)?$/.test(trimmed)) return { us: Math.round(Number(trimmed) * 1_000_000) };
  const ms = Date.parse(trimmed);
  if (Number.isNaN(ms)) return { bad: true };
  return { us: ms * 1000 };
}

/** Two lines for a <pre>: the query, then a caret under the failure offset. */
export function annotateParseError(query: string, err: QueryParseError): string {
  const col = Math.max(0, Math.min(err.position, query.length));
  return `${query}\n${" ".repeat(col)}^ expected ${err.expected}`;
}

/** Tags requests so each panel keeps only its newest response. */
export class RequestGate {
  private seq = 0;

  issue(): number {
    return ++this.seq;
  }

  isCurrent(token: number): boolean {
    return token === this.seq;
  }
}
