import type { EventDoc, FetchLike, HistogramResponse, SearchResponse } from "../src/api.js";

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/** Fetch stub keyed by path; records every URL it is asked for. */
export class FakeApi {
  urls: string[] = [];
  private handlers = new Map<string, (params: URLSearchParams) => Response>();

  route(path: string, body: unknown, status = 200): void {
    this.handlers.set(path, () => jsonResponse(body, status));
  }

  routeFn(path: string, fn: (params: URLSearchParams) => Response): void {
    this.handlers.set(path, fn);
  }

  fetch: FetchLike = (url) => {
    this.urls.push(url);
    const parsed = new URL(url, "http://local");
    const handler = this.handlers.get(parsed.pathname);
    if (handler === undefined) {
      return Promise.resolve(jsonResponse({ detail: "not found" }, 404));
    }
    return Promise.resolve(handler(parsed.searchParams));
  };

  requestsTo(path: string): number {
    return this.urls.filter((u) => u.startsWith(path)).length;
  }

  lastParams(path: string): URLSearchParams {
    const hit = [...this.urls].reverse().find((u) => u.startsWith(path));
    if (hit === undefined) throw new Error(`no request to ${path}`);
    return new URL(hit, "http://local").searchParams;
  }
}

export function emptySearch(): SearchResponse {
  return { total: 0, docs: [] };
}

export function emptyHistogram(): HistogramResponse {
  return { bucket_width_s: 5, buckets: [], total: 0 };
}

const T0 = 1_685_577_600_000_000; // 2023-06-01T00:00:00Z in microseconds

export function connDoc(i: number): EventDoc {
  return {
    "@timestamp": T0 + i * 1_000_000,
    "event.kind": "event",
    "event.module": "zeek",
    "source.ip": "203.0.113.66",
    "source.port": 40_000 + i,
    "destination.ip": "192.168.1.10",
    "destination.port": 80,
    "network.transport": "tcp",
    "network.direction": "inbound",
    "zeek.connection.state": "REJ",
    "zeek.connection.history": "Sr",
  };
}

export function httpDoc(i: number): EventDoc {
  return {
    "@timestamp": T0 + i * 1_000_000,
    "event.kind": "event",
    "event.module": "zeek",
    "source.ip": "203.0.113.66",
    "source.port": 40_000 + i,
    "destination.ip": "192.168.1.20",
    "destination.port": 80,
    "network.transport": "tcp",
    "network.direction": "inbound",
    "http.request.method": "GET",
    "url.domain": "shop.example.test",
    "url.original": "http://shop.example.test/item.php?id=1%20OR%201=1",
    "user_agent.original": "sqlmap/1.7.2#stable (http://sqlmap.org)",
  };
}

export function suricataDoc(i: number): EventDoc {
  return {
    "@timestamp": T0 + i * 1_000_000,
    "event.kind": "alert",
    "event.module": "suricata",
    "alert.signature": "ET SCAN suspected SYN scan",
    "alert.category": "Attempted Information Leak",
    "alert.severity": 2,
    "alert.sid": 1_000_001,
    "source.ip": "203.0.113.66",
    "source.port": 40_000 + i,
    "destination.ip": "192.168.1.10",
    "destination.port": 80,
    "network.transport": "tcp",
  };
}

export function slipsDoc(i: number): EventDoc {
  return {
    "@timestamp": T0 + i * 1_000_000,
    "event.kind": "alert",
    "event.module": "slips",
    "alert.signature": "port scan: 1000 closed ports probed on 192.168.1.10",
    "alert.category": "reconnaissance scanning",
    "alert.severity": 3,
    "slips.detector": "port_scan",
    "slips.confidence": 1.0,
    "source.ip": "203.0.113.66",
  };
}
