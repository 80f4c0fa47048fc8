import type { ApiClient, DashboardPreset } from "./api.js";

// Fallback copies of the server-side presets, used when /api/presets is
// unreachable or returns nothing. Query strings must stay byte-identical
// to the service's own; the pivot loop starts from these exact strings.
export const BUILTIN_PRESETS: DashboardPreset[] = [
  {
    id: "port-scan",
    title: "Port scans and ping sweeps",
    query_string:
      'not (network.direction: "outbound") and ' +
      '((not (network.transport: "icmp") and not(zeek.connection.history:/Sh*|F*|D*/)) ' +
      'or (network.transport: "icmp" and zeek.connection.icmp.type: "8"))',
    kind: "event",
    default_bucket_s: 5,
    panels: [
      { type: "histogram" },
      {
        type: "table",
        columns: [
          "@timestamp",
          "source.ip",
          "destination.ip",
          "destination.port",
          "zeek.connection.history",
          "network.transport",
        ],
      },
    ],
  },
  {
    id: "dos",
    title: "Inbound traffic by destination port",
    query_string: 'not (network.direction: "outbound")',
    kind: "event",
    default_bucket_s: 1,
    split_by: "destination.port",
    panels: [
      { type: "histogram" },
      {
        type: "table",
        columns: [
          "@timestamp",
          "source.ip",
          "destination.ip",
          "destination.port",
          "network.transport",
        ],
      },
    ],
  },
  {
    id: "sqli",
    title: "SQL injection user agents",
    query_string: "user_agent.original: sqlmap*",
    kind: "event",
    default_bucket_s: 5,
    panels: [
      { type: "histogram" },
      {
        type: "table",
        columns: ["@timestamp", "source.ip", "url.domain", "url.original", "user_agent.original"],
      },
    ],
  },
  {
    id: "alerts",
    title: "Alerts by category",
    query_string: 'event.kind: "alert"',
    kind: "alert",
    default_bucket_s: 5,
    split_by: "alert.category",
    panels: [
      { type: "histogram" },
      {
        type: "table",
        columns: [
          "@timestamp",
          "alert.category",
          "alert.signature",
          "alert.severity",
          "source.ip",
          "destination.ip",
        ],
      },
    ],
  },
];

/** Fetch the server's presets, falling back to the built-in copies. */
export async function loadPresets(client: ApiClient): Promise<DashboardPreset[]> {
  try {
    const res = await client.presets();
    if (res.presets.length > 0) return res.presets;
  } catch {
    // service down or auth failure; the console still works offline
  }
  return BUILTIN_PRESETS;
}
