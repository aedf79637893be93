// Display helpers. Rounding happens here and only here; the state the app
// holds is always the raw API payload.

export const STAGE_LABELS: readonly string[] = [
  "Postmortem",
  "Screening",
  "Analysis",
  "Timing",
  "Portfolio",
];

export function stageLabel(stage: number): string {
  const label = STAGE_LABELS[stage - 1];
  return label === undefined ? `Stage ${stage}` : label;
}

/** Weights display at 4 decimals; exports keep full precision. */
export function formatWeight(weight: number): string {
  return weight.toFixed(4);
}

export function formatMetric(value: unknown): string {
  if (typeof value === "number") {
    if (Number.isInteger(value)) return String(value);
    return value.toFixed(4);
  }
  if (value === null || value === undefined) return "";
  return String(value);
}

export function formatPercent(value: number): string {
  return `${(100 * value).toFixed(1)}%`;
}

export function shortTime(iso: string): string {
  const t = iso.indexOf("T");
  return t === -1 ? iso : `${iso.slice(0, t)} ${iso.slice(t + 1, t + 6)}`;
}
