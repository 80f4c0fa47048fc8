import { describe, expect, it } from "vitest";

import { BUILTIN_PRESETS } from "../src/presets.js";
import { buildTableView, cellText, columnsFor, renderTableHtml } from "../src/table.js";
import { connDoc, httpDoc, slipsDoc, suricataDoc } from "./helpers.js";

const SQLI = BUILTIN_PRESETS.find((p) => p.id === "sqli");
if (SQLI === undefined) throw new Error("sqli preset missing");

describe("columnsFor", () => {
  it("uses the preset's table panel columns when one is selected", () => {
    expect(columnsFor([httpDoc(0)], SQLI)).toEqual([
      "@timestamp",
      "source.ip",
      "url.domain",
      "url.original",
      "user_agent.original",
    ]);
  });

  it("shows connection columns for conn results", () => {
    const columns = columnsFor([connDoc(0), connDoc(1)]);
    expect(columns[0]).toBe("@timestamp");
    expect(columns).toContain("zeek.connection.history");
    expect(columns).toContain("network.direction");
    expect(columns).not.toContain("url.original");
  });

  it("switches to url columns when zeek results carry requests", () => {
    const columns = columnsFor([httpDoc(0), connDoc(1)]);
    expect(columns).toContain("url.domain");
    expect(columns).toContain("user_agent.original");
  });

  it("adds alert columns per module, deduplicated", () => {
    const columns = columnsFor([suricataDoc(0), slipsDoc(1)]);
    expect(columns.filter((c) => c === "alert.signature")).toHaveLength(1);
    expect(columns).toContain("alert.category");
    expect(columns).toContain("slips.confidence");
  });

  it("falls back to kind and module for unknown shapes", () => {
    expect(columnsFor([{ "event.module": "custom", "event.kind": "event" }])).toEqual([
      "@timestamp",
      "event.kind",
      "event.module",
    ]);
  });
});

describe("cellText", () => {
  it("renders missing fields as empty strings", () => {
    expect(cellText(connDoc(0), "url.original")).toBe("");
  });

  it("formats timestamps as readable utc", () => {
    expect(cellText(connDoc(0), "@timestamp")).toBe("2023-06-01 00:00:00.000");
  });

  it("stringifies numbers and booleans", () => {
    expect(cellText({ "destination.port": 80 }, "destination.port")).toBe("80");
    expect(cellText({ "slips.spoofed_source": true }, "slips.spoofed_source")).toBe("true");
  });
});

describe("renderTableHtml", () => {
  it("renders one row per doc with the given columns", () => {
    const view = buildTableView([connDoc(0), connDoc(1)], ["@timestamp", "source.port"]);
    const html = renderTableHtml(view);
    expect(html.match(/<tr>/g)).toHaveLength(3); // header + 2 rows
    expect(html).toContain("<td>40000</td>");
    expect(html).toContain("<td>40001</td>");
  });

  it("escapes doc values", () => {
    const view = buildTableView(
      [{ "event.module": "zeek", note: '<script>alert("x")</script>' }],
      ["note"],
    );
    const html = renderTableHtml(view);
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });

  it("shows an empty message for no rows", () => {
    expect(renderTableHtml(buildTableView([], ["a"]))).toContain("No matching documents");
  });
});
