import { describe, expect, it } from "vitest";

import { BUILTIN_PRESETS } from "../src/presets.js";

describe("builtin presets", () => {
  it("ships the four dashboards", () => {
    expect(BUILTIN_PRESETS.map((p) => p.id)).toEqual(["port-scan", "dos", "sqli", "alerts"]);
  });

  it("gives every preset a histogram and a table panel", () => {
    for (const preset of BUILTIN_PRESETS) {
      expect(preset.panels.map((p) => p.type)).toEqual(["histogram", "table"]);
      const table = preset.panels[1];
      expect(table?.columns?.[0]).toBe("@timestamp");
    }
  });

  it("splits the dos and alert dashboards", () => {
    const byId = new Map(BUILTIN_PRESETS.map((p) => [p.id, p]));
    expect(byId.get("dos")?.split_by).toBe("destination.port");
    expect(byId.get("alerts")?.split_by).toBe("alert.category");
    expect(byId.get("port-scan")?.split_by).toBeUndefined();
    expect(byId.get("sqli")?.split_by).toBeUndefined();
  });

  it("restricts detection presets to events and the alert preset to alerts", () => {
    for (const preset of BUILTIN_PRESETS) {
      expect(preset.kind).toBe(preset.id === "alerts" ? "alert" : "event");
    }
  });

  it("shows the attack url columns on the sqli dashboard", () => {
    const sqli = BUILTIN_PRESETS.find((p) => p.id === "sqli");
    expect(sqli?.panels[1]?.columns).toContain("url.domain");
    expect(sqli?.panels[1]?.columns).toContain("url.original");
  });
});
