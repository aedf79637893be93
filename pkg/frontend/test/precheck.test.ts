import { describe, expect, it } from "vitest";

import { parseEditedReport, precheckEdit } from "../src/precheck";
import type { CrewReport } from "../src/types";
import { screeningReport, timingReport } from "./mockGateway";

function analysisReport(count: number): CrewReport {
  const base = screeningReport(count);
  return {
    ...base,
    crew_name: "analysis",
    candidates: base.candidates.map((c) => ({
      symbol: c.symbol,
      thesis: "holds the trend",
      cited_metrics: { sortino_21: 1.0 },
      cohort_delta: { sortino_21: 0.25 },
      cited_headlines: [],
    })),
  };
}

describe("precheckEdit", () => {
  it("accepts reports inside every bound", () => {
    expect(precheckEdit(2, screeningReport(50))).toBeNull();
    expect(precheckEdit(2, screeningReport(100))).toBeNull();
    expect(precheckEdit(3, analysisReport(35))).toBeNull();
    expect(precheckEdit(3, analysisReport(50))).toBeNull();
    expect(precheckEdit(4, timingReport(20, 10))).toBeNull();
    expect(precheckEdit(4, timingReport(30, 0))).toBeNull();
  });

  it("rejects screening outside 50 to 100 with the server's wording", () => {
    expect(precheckEdit(2, screeningReport(49))).toBe(
      "screening kept 49 tickers, requires 50 to 100",
    );
    expect(precheckEdit(2, screeningReport(101))).toBe(
      "screening kept 101 tickers, requires 50 to 100",
    );
  });

  it("rejects analysis outside 35 to 50", () => {
    expect(precheckEdit(3, analysisReport(34))).toBe(
      "analysis kept 34 entries, requires 35 to 50",
    );
    expect(precheckEdit(3, analysisReport(51))).toBe(
      "analysis kept 51 entries, requires 35 to 50",
    );
  });

  it("counts only buy actions against the timing bound", () => {
    expect(precheckEdit(4, timingReport(19, 40))).toBe(
      "timing issued 19 buys, requires 20 to 30",
    );
    expect(precheckEdit(4, timingReport(31, 0))).toBe(
      "timing issued 31 buys, requires 20 to 30",
    );
    // Plenty of holds around a valid buy count changes nothing.
    expect(precheckEdit(4, timingReport(25, 60))).toBeNull();
  });

  it("rejects structural damage before counting anything", () => {
    const report = screeningReport(60);
    expect(precheckEdit(2, { ...report, candidates: [] })).toContain(
      "non-empty candidates",
    );
    expect(precheckEdit(2, { ...report, rationale: "" })).toContain("rationale");
    const broken = screeningReport(60);
    delete (broken.candidates[0] as Record<string, unknown>)["symbol"];
    expect(precheckEdit(2, broken)).toContain("needs a symbol");
  });

  it("flags duplicated symbols", () => {
    const report = screeningReport(60);
    report.candidates[1] = { ...report.candidates[0] } as never;
    expect(precheckEdit(2, report)).toContain("duplicate symbol");
  });

  it("leaves stage 1 free of ticker bounds", () => {
    const report = screeningReport(60);
    const postmortem: CrewReport = {
      ...report,
      candidates: [
        {
          symbol: "",
          name: "leverage spiral",
          evidence_tickers: ["ZZZA"],
          warning_signs: ["debt"],
        } as never,
      ],
    };
    expect(precheckEdit(1, postmortem)).toBeNull();
  });
});

describe("parseEditedReport", () => {
  it("round-trips valid JSON", () => {
    const report = screeningReport(55);
    expect(parseEditedReport(JSON.stringify(report))).toEqual(report);
  });

  it("explains parse failures", () => {
    expect(() => parseEditedReport("{nope")).toThrow(/does not parse/);
    expect(() => parseEditedReport("[1, 2]")).toThrow(/JSON object/);
    expect(() => parseEditedReport("null")).toThrow(/JSON object/);
  });
});
