import type { DashboardPreset, HistogramParams, QueryParams, SearchParams } from "./api.js";
import { ApiClient, ApiError, QueryParseError } from "./api.js";
import { BUILTIN_PRESETS, loadPresets } from "./presets.js";
import {
  applyPreset,
  editQuery,
  initialState,
  parseTimeInput,
  RequestGate,
  shouldAutoRefresh,
  validRefreshInterval,
} from "./state.js";
import type { UiState } from "./state.js";

export type Listener = (state: UiState) => void;

/**
 * Owns UiState and talks to the API; the DOM layer only forwards input
 * events here and re-renders on change. One in-flight request per panel:
 * a response that arrives after a newer request was issued is discarded.
 */
export class AnalystConsole {
  state: UiState = initialState();
  presets: DashboardPreset[] = BUILTIN_PRESETS;

  private searchGate = new RequestGate();
  private histogramGate = new RequestGate();
  private listeners: Listener[] = [];

  constructor(private client: ApiClient) {}

  onChange(fn: Listener): void {
    this.listeners.push(fn);
  }

  private update(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  async init(): Promise<void> {
    this.presets = await loadPresets(this.client);
    this.update({});
  }

  preset(id: string): DashboardPreset | undefined {
    return this.presets.find((p) => p.id === id);
  }

  selectPreset(id: string): void {
    const preset = this.preset(id);
    if (preset !== undefined) this.update(applyPreset(this.state, preset));
  }

  setQuery(text: string): void {
    this.update(editQuery(this.state, text));
  }

  beginEdit(): void {
    this.update({ editing: true });
  }

  endEdit(): void {
    this.update({ editing: false });
  }

  setRange(fromText: string, toText: string): void {
    this.update({ fromText, toText });
  }

  setLimit(limit: number): void {
    if (Number.isInteger(limit) && limit >= 0) this.update({ limit });
  }

  setBucket(seconds: number): void {
    if (Number.isFinite(seconds) && seconds > 0) this.update({ bucketS: seconds });
  }

  setSplit(field: string): void {
    this.update({ splitBy: field === "" ? undefined : field });
  }

  setKind(kind: string): void {
    this.update({ kind: kind === "" ? undefined : kind });
  }

  /** Intervals under one second are rejected; zero switches refresh off. */
  setRefresh(seconds: number): boolean {
    if (seconds !== 0 && !validRefreshInterval(seconds)) return false;
    this.update({ refreshS: seconds });
    return true;
  }

  async run(): Promise<void> {
    const from = parseTimeInput(this.state.fromText);
    const to = parseTimeInput(this.state.toText);
    if (from.bad !== undefined || to.bad !== undefined) {
      this.update({ error: "time range not understood", parseError: null });
      return;
    }
    this.update({ editing: false, error: null, parseError: null });
    const params: QueryParams = {
      q: this.state.query,
      from: from.us,
      to: to.us,
      kind: this.state.kind,
    };
    await Promise.all([
      this.runSearch({ ...params, limit: this.state.limit }),
      this.runHistogram({ ...params, bucket: this.state.bucketS, split: this.state.splitBy }),
    ]);
  }

  /** Re-issue the active query, unless the analyst is mid-edit. */
  async tick(): Promise<void> {
    if (shouldAutoRefresh(this.state)) await this.run();
  }

  private async runSearch(params: SearchParams): Promise<void> {
    const token = this.searchGate.issue();
    try {
      const res = await this.client.search(params);
      if (this.searchGate.isCurrent(token)) this.update({ search: res });
    } catch (err) {
      if (this.searchGate.isCurrent(token)) this.update({ search: null, ...describeError(err) });
    }
  }

  private async runHistogram(params: HistogramParams): Promise<void> {
    const token = this.histogramGate.issue();
    try {
      const res = await this.client.histogram(params);
      if (this.histogramGate.isCurrent(token)) this.update({ histogram: res });
    } catch (err) {
      if (this.histogramGate.isCurrent(token)) {
        this.update({ histogram: null, ...describeError(err) });
      }
    }
  }
}

function describeError(err: unknown): Pick<UiState, "error" | "parseError"> {
  if (err instanceof QueryParseError) return { error: err.message, parseError: err };
  if (err instanceof ApiError) return { error: err.message, parseError: null };
  return { error: String(err), parseError: null };
}
