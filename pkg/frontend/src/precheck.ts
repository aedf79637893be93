// Client-side mirror of the server's report shape and cardinality checks.
// Catching a bad edit here saves a round trip; the gateway re-validates
// everything regardless, so this list only has to match, never extend.

import type { Candidate, CrewReport } from "./types";

export interface StageBounds {
  screenMin: number;
  screenMax: number;
  analysisMin: number;
  analysisMax: number;
  buyMin: number;
  buyMax: number;
  positionsMin: number;
  positionsMax: number;
}

export const DEFAULT_BOUNDS: StageBounds = {
  screenMin: 50,
  screenMax: 100,
  analysisMin: 35,
  analysisMax: 50,
  buyMin: 20,
  buyMax: 30,
  positionsMin: 15,
  positionsMax: 30,
};

/** Null when the edited report would pass, else the violation to display. */
export function precheckEdit(
  stage: number,
  report: CrewReport,
  bounds: StageBounds = DEFAULT_BOUNDS,
): string | null {
  const shape = checkShape(stage, report);
  if (shape !== null) return shape;
  const candidates = report.candidates;
  if (stage === 2) {
    const n = candidates.length;
    if (n < bounds.screenMin || n > bounds.screenMax) {
      return (
        `screening kept ${n} tickers, requires ` +
        `${bounds.screenMin} to ${bounds.screenMax}`
      );
    }
  }
  if (stage === 3) {
    const n = candidates.length;
    if (n < bounds.analysisMin || n > bounds.analysisMax) {
      return (
        `analysis kept ${n} entries, requires ` +
        `${bounds.analysisMin} to ${bounds.analysisMax}`
      );
    }
  }
  if (stage === 4) {
    const buys = candidates.filter((c) => c["action"] === "buy").length;
    if (buys < bounds.buyMin || buys > bounds.buyMax) {
      return (
        `timing issued ${buys} buys, requires ` +
        `${bounds.buyMin} to ${bounds.buyMax}`
      );
    }
  }
  const dupe = firstDuplicate(candidates);
  if (dupe !== null && stage >= 2) {
    return `duplicate symbol in edited report: ${dupe}`;
  }
  return null;
}

function checkShape(stage: number, report: CrewReport): string | null {
  if (!Array.isArray(report.candidates) || report.candidates.length === 0) {
    return "edited report must keep a non-empty candidates list";
  }
  if (typeof report.rationale !== "string" || report.rationale.length === 0) {
    return "edited report must keep a rationale";
  }
  if (stage >= 2) {
    for (const candidate of report.candidates) {
      if (typeof candidate !== "object" || candidate === null) {
        return "every candidate must be an object";
      }
      if (typeof candidate.symbol !== "string" || candidate.symbol === "") {
        return "every candidate needs a symbol";
      }
    }
  }
  return null;
}

function firstDuplicate(candidates: Candidate[]): string | null {
  const seen = new Set<string>();
  for (const candidate of candidates) {
    const symbol = candidate.symbol;
    if (typeof symbol !== "string") continue;
    if (seen.has(symbol)) return symbol;
    seen.add(symbol);
  }
  return null;
}

/** Parse the raw-text fallback; throws with a displayable message. */
export function parseEditedReport(text: string): CrewReport {
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch (error) {
    throw new Error(`edited JSON does not parse: ${(error as Error).message}`);
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    throw new Error("edited report must be a JSON object");
  }
  return parsed as CrewReport;
}
