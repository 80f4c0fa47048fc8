// Typed client for the eds-service JSON API. Every number the console
// displays comes out of these response payloads untouched.

export interface EventDoc {
  [field: string]: string | number | boolean;
}

export interface SearchResponse {
  total: number;
  docs: EventDoc[];
}

export interface HistogramBucket {
  start: number; // bucket start, epoch microseconds
  count: number;
}

export interface HistogramResponse {
  bucket_width_s: number;
  buckets: HistogramBucket[];
  total: number;
  series?: Record<string, number[]>;
}

export interface PanelSpec {
  type: "histogram" | "table";
  columns?: string[];
}

export interface DashboardPreset {
  id: string;
  title: string;
  query_string: string;
  kind: string;
  default_bucket_s: number;
  split_by?: string;
  panels: PanelSpec[];
}

export interface StatsResponse {
  docs: number;
  kinds: Record<string, number>;
  modules: Record<string, number>;
}

export interface QueryParams {
  q: string;
  from?: number; // epoch microseconds, inclusive
  to?: number; // epoch microseconds, inclusive
  kind?: string; // restrict to "event" or "alert" without editing q
}

export interface SearchParams extends QueryParams {
  limit?: number;
}

export interface HistogramParams extends QueryParams {
  bucket?: number; // bucket width in seconds
  split?: string; // field path for per-value series
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

/** A 400 from the query parser; position is a character offset into q. */
export class QueryParseError extends ApiError {
  constructor(
    message: string,
    readonly position: number,
    readonly expected: string,
  ) {
    super(message, 400);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

function withParams(path: string, entries: [string, string | number | undefined][]): string {
  const qs = new URLSearchParams();
  for (const [key, value] of entries) {
    if (value !== undefined) qs.set(key, String(value));
  }
  const tail = qs.toString();
  return tail === "" ? path : `${path}?${tail}`;
}

export function searchUrl(params: SearchParams): string {
  return withParams("/api/search", [
    ["q", params.q],
    ["from", params.from],
    ["to", params.to],
    ["limit", params.limit],
    ["kind", params.kind],
  ]);
}

export function histogramUrl(params: HistogramParams): string {
  return withParams("/api/histogram", [
    ["q", params.q],
    ["from", params.from],
    ["to", params.to],
    ["bucket", params.bucket],
    ["split", params.split],
    ["kind", params.kind],
  ]);
}

async function errorDetail(res: Response): Promise<Record<string, unknown>> {
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (typeof body?.detail === "string") return { error: body.detail };
    if (typeof body?.detail === "object" && body.detail !== null) {
      return body.detail as Record<string, unknown>;
    }
  } catch {
    // non-JSON error body; fall through
  }
  return {};
}

export class ApiClient {
  private fetchFn: FetchLike;

  constructor(
    private base = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async getJson<T>(url: string): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchFn(this.base + url);
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`, 0);
    }
    if (!res.ok) {
      const detail = await errorDetail(res);
      if (res.status === 400 && typeof detail.position === "number") {
        throw new QueryParseError(
          String(detail.error ?? "bad query"),
          detail.position,
          String(detail.expected ?? ""),
        );
      }
      const message =
        typeof detail.error === "string" ? detail.error : `request failed with status ${res.status}`;
      throw new ApiError(message, res.status);
    }
    return (await res.json()) as T;
  }

  search(params: SearchParams): Promise<SearchResponse> {
    return this.getJson(searchUrl(params));
  }

  histogram(params: HistogramParams): Promise<HistogramResponse> {
    return this.getJson(histogramUrl(params));
  }

  presets(): Promise<{ presets: DashboardPreset[] }> {
    return this.getJson("/api/presets");
  }

  stats(): Promise<StatsResponse> {
    return this.getJson("/api/stats");
  }
}
