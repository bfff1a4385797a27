import { describe, expect, it } from "vitest";

import { parseRosterLines, parseVectorText } from "../src/records.js";

describe("parseRosterLines", () => {
  it("parses record lines, defaulting a missing label to null", () => {
    const text = [
      '{"id": "r0", "vector": [1.0, 2.0], "label": "a"}',
      '{"id": "r1", "vector": [0.5, -1.5]}',
    ].join("\n");
    expect(parseRosterLines(text)).toEqual([
      { id: "r0", vector: [1, 2], label: "a" },
      { id: "r1", vector: [0.5, -1.5], label: null },
    ]);
  });

  it("skips blank lines and snapshot headers", () => {
    const text = [
      '{"dimension": 2, "name": "db", "count": 1, "checksum": "abc123"}',
      "",
      '{"id": "r0", "vector": [1, 2], "label": "a"}',
      "   ",
    ].join("\n");
    expect(parseRosterLines(text).map((r) => r.id)).toEqual(["r0"]);
  });

  it("reports the failing line number", () => {
    const text = ['{"id": "r0", "vector": [1]}', "{broken"].join("\n");
    expect(() => parseRosterLines(text)).toThrow("line 2");
  });

  it("rejects records without id or vector", () => {
    expect(() => parseRosterLines('{"vector": [1]}')).toThrow('"id" and "vector"');
    expect(() => parseRosterLines('{"id": "x"}')).toThrow('"id" and "vector"');
  });

  it("rejects non-finite vector entries", () => {
    expect(() => parseRosterLines('{"id": "x", "vector": [1, "oops"]}')).toThrow("entry 1");
    expect(() => parseRosterLines('{"id": "x", "vector": [1e999]}')).toThrow("entry 0");
  });
});

describe("parseVectorText", () => {
  it("accepts commas, spaces, and mixes", () => {
    expect(parseVectorText("1, 2.5 -3")).toEqual([1, 2.5, -3]);
    expect(parseVectorText("  0.1,0.2,\n0.3 ")).toEqual([0.1, 0.2, 0.3]);
  });

  it("rejects empty and non-numeric input", () => {
    expect(() => parseVectorText("   ")).toThrow("empty query vector");
    expect(() => parseVectorText("1, two, 3")).toThrow('not a number: "two"');
  });
});
