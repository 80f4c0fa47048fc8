import { describe, expect, it } from "vitest";

import type { FetchLike } from "../src/api.js";
import { ApiClient } from "../src/api.js";
import { AnalystConsole } from "../src/controller.js";
import { BUILTIN_PRESETS } from "../src/presets.js";
import { emptyHistogram, emptySearch, FakeApi, jsonResponse } from "./helpers.js";

function makeApp(api: FakeApi): AnalystConsole {
  return new AnalystConsole(new ApiClient("", api.fetch));
}

function routeDefaults(api: FakeApi): void {
  api.route("/api/search", emptySearch());
  api.route("/api/histogram", emptyHistogram());
}

describe("preset loading", () => {
  it("prefers the server's presets", async () => {
    const api = new FakeApi();
    const served = [{ ...BUILTIN_PRESETS[0]!, title: "from the server" }];
    api.route("/api/presets", { presets: served });
    const app = makeApp(api);
    await app.init();
    expect(app.presets.map((p) => p.title)).toEqual(["from the server"]);
  });

  it("falls back to builtins when the service is down", async () => {
    const app = new AnalystConsole(new ApiClient("", () => Promise.reject(new TypeError("down"))));
    await app.init();
    expect(app.presets).toBe(BUILTIN_PRESETS);
  });

  it("falls back to builtins on an empty preset response", async () => {
    const api = new FakeApi();
    api.route("/api/presets", { presets: [] });
    const app = makeApp(api);
    await app.init();
    expect(app.presets).toBe(BUILTIN_PRESETS);
  });
});

describe("running queries", () => {
  it("issues search and histogram with the active query", async () => {
    const api = new FakeApi();
    api.route("/api/search", { total: 3, docs: [] });
    api.route("/api/histogram", { ...emptyHistogram(), total: 3 });
    const app = makeApp(api);
    app.setQuery("destination.port: 80");
    await app.run();
    expect(api.lastParams("/api/search").get("q")).toBe("destination.port: 80");
    expect(api.lastParams("/api/histogram").get("q")).toBe("destination.port: 80");
    expect(app.state.search?.total).toBe(3);
    expect(app.state.histogram?.total).toBe(3);
    expect(app.state.editing).toBe(false);
  });

  it("passes preset bucket, split and kind through untouched", async () => {
    const api = new FakeApi();
    routeDefaults(api);
    api.route("/api/presets", { presets: BUILTIN_PRESETS });
    const app = makeApp(api);
    await app.init();
    app.selectPreset("dos");
    await app.run();
    const params = api.lastParams("/api/histogram");
    expect(params.get("bucket")).toBe("1");
    expect(params.get("split")).toBe("destination.port");
    expect(params.get("kind")).toBe("event");
    expect(api.lastParams("/api/search").get("kind")).toBe("event");
  });

  it("reruns an edited query and updates results", async () => {
    const api = new FakeApi();
    api.routeFn("/api/search", (params) =>
      jsonResponse({ total: params.get("q")?.includes("80") === true ? 11 : 2, docs: [] }),
    );
    api.route("/api/histogram", emptyHistogram());
    const app = makeApp(api);
    app.selectPreset("dos");
    await app.run();
    expect(app.state.search?.total).toBe(2);
    app.setQuery('not (network.direction: "outbound") and destination.port: 80');
    await app.run();
    expect(api.lastParams("/api/search").get("q")).toBe(
      'not (network.direction: "outbound") and destination.port: 80',
    );
    expect(app.state.search?.total).toBe(11);
  });

  it("forwards the parsed time range in microseconds", async () => {
    const api = new FakeApi();
    routeDefaults(api);
    const app = makeApp(api);
    app.setRange("2023-06-01T00:00:00Z", "1685577660");
    await app.run();
    const params = api.lastParams("/api/search");
    expect(params.get("from")).toBe("1685577600000000");
    expect(params.get("to")).toBe("1685577660000000");
  });

  it("refuses to run on an unparseable range", async () => {
    const api = new FakeApi();
    routeDefaults(api);
    const app = makeApp(api);
    app.setRange("not a time", "");
    await app.run();
    expect(api.urls).toHaveLength(0);
    expect(app.state.error).toContain("time range");
  });

  it("surfaces parse errors with their offset", async () => {
    const api = new FakeApi();
    api.route(
      "/api/search",
      { detail: { error: "syntax error at 4", position: 4, expected: "term" } },
      400,
    );
    api.route(
      "/api/histogram",
      { detail: { error: "syntax error at 4", position: 4, expected: "term" } },
      400,
    );
    const app = makeApp(api);
    app.setQuery("and and");
    await app.run();
    expect(app.state.parseError?.position).toBe(4);
    expect(app.state.error).toContain("syntax error");
    expect(app.state.search).toBeNull();
  });

  it("raises a banner when the service is unreachable", async () => {
    const app = new AnalystConsole(new ApiClient("", () => Promise.reject(new TypeError("down"))));
    await app.run();
    expect(app.state.error).toContain("unreachable");
  });

  it("clears a previous error on the next successful run", async () => {
    const api = new FakeApi();
    routeDefaults(api);
    const app = makeApp(api);
    app.setRange("garbage", "");
    await app.run();
    expect(app.state.error).not.toBeNull();
    app.setRange("", "");
    await app.run();
    expect(app.state.error).toBeNull();
  });
});

describe("stale responses", () => {
  it("discards an older response that lands after a newer one", async () => {
    const pending: { url: string; resolve: (r: Response) => void }[] = [];
    const fetchFn: FetchLike = (url) =>
      new Promise((resolve) => {
        pending.push({ url, resolve });
      });
    const app = new AnalystConsole(new ApiClient("", fetchFn));

    app.setQuery("first");
    const run1 = app.run();
    app.setQuery("second");
    const run2 = app.run();
    expect(pending.map((p) => new URL(p.url, "http://x").pathname)).toEqual([
      "/api/search",
      "/api/histogram",
      "/api/search",
      "/api/histogram",
    ]);

    pending[2]!.resolve(jsonResponse({ total: 22, docs: [] }));
    pending[3]!.resolve(jsonResponse({ ...emptyHistogram(), total: 22 }));
    await run2;
    expect(app.state.search?.total).toBe(22);

    pending[0]!.resolve(jsonResponse({ total: 11, docs: [] }));
    pending[1]!.resolve(jsonResponse({ ...emptyHistogram(), total: 11 }));
    await run1;
    expect(app.state.search?.total).toBe(22);
    expect(app.state.histogram?.total).toBe(22);
  });
});

describe("auto refresh", () => {
  it("rejects sub-second intervals and keeps zero as off", () => {
    const app = makeApp(new FakeApi());
    expect(app.setRefresh(0.5)).toBe(false);
    expect(app.state.refreshS).toBe(0);
    expect(app.setRefresh(0)).toBe(true);
    expect(app.setRefresh(2)).toBe(true);
    expect(app.state.refreshS).toBe(2);
  });

  it("does nothing on tick while off", async () => {
    const api = new FakeApi();
    routeDefaults(api);
    const app = makeApp(api);
    await app.tick();
    expect(api.urls).toHaveLength(0);
  });

  it("re-issues the active query on tick and sees new ingests", async () => {
    const api = new FakeApi();
    const totals = [5, 7];
    api.routeFn("/api/search", () => jsonResponse({ total: totals.shift() ?? 7, docs: [] }));
    api.route("/api/histogram", emptyHistogram());
    const app = makeApp(api);
    app.setRefresh(2);
    await app.run();
    expect(app.state.search?.total).toBe(5);
    await app.tick();
    expect(app.state.search?.total).toBe(7);
  });

  it("pauses while the analyst edits", async () => {
    const api = new FakeApi();
    routeDefaults(api);
    const app = makeApp(api);
    app.setRefresh(2);
    app.setQuery("half-typed quer");
    const before = api.urls.length;
    await app.tick();
    expect(api.urls).toHaveLength(before);
    app.endEdit();
    await app.tick();
    expect(api.urls.length).toBeGreaterThan(before);
  });
});
