import type { GatewayClient } from "../api";
import { ApiError } from "../api";
import { clear, h } from "../dom";
import { STAGE_LABELS, shortTime, stageLabel } from "../format";
import type { CheckpointSummary, RunDetail, RunSummary } from "../types";

export interface BoardHandlers {
  onOpenRun(runId: string): void;
}

type ChipState = "done" | "awaiting-review" | "failed" | "pending";

function chipState(run: RunSummary, stage: number, done: boolean): ChipState {
  if (done) return "done";
  if (stage === run.current_stage) {
    if (run.status === "failed") return "failed";
    if (run.status === "awaiting-review") return "awaiting-review";
  }
  return "pending";
}

function stageChips(run: RunSummary, stagesDone: Set<number>): HTMLElement {
  const chips = h("div", { class: "chips", data: { testid: "stage-chips" } });
  STAGE_LABELS.forEach((label, i) => {
    const stage = i + 1;
    const state = chipState(run, stage, stagesDone.has(stage));
    chips.append(
      h("span", {
        class: `chip chip-${state}`,
        text: label,
        title: state,
        data: { stage: String(stage), state },
      }),
    );
  });
  return chips;
}

/** Run list with per-stage progress chips, newest first. */
export function renderBoard(
  runs: RunSummary[],
  doneByRun: Map<string, Set<number>>,
  handlers: BoardHandlers,
): HTMLElement {
  const root = h("section", { class: "board", data: { testid: "board" } });
  root.append(h("h2", { text: "Runs" }));
  if (runs.length === 0) {
    root.append(h("p", { class: "empty-state", text: "No runs yet." }));
    return root;
  }
  for (const run of runs) {
    const done = doneByRun.get(run.run_id) ?? new Set<number>();
    root.append(
      h(
        "article",
        { class: "card run-card", data: { testid: "run-card" } },
        h("h3", { text: run.run_id }),
        h("p", { class: "meta", text: `as of ${run.as_of} - ${run.status}` }),
        stageChips(run, done),
        h("button", {
          class: "link",
          text: "Details",
          data: { testid: "open-run" },
          onClick: () => handlers.onOpenRun(run.run_id),
        }),
      ),
    );
  }
  return root;
}

export interface RunViewHandlers {
  onBack(): void;
  onOpenAllocation(runId: string): void;
  onAuthFailure(): void;
}

export interface RunView {
  el: HTMLElement;
  ready: Promise<void>;
}

/** One run: status, stage chips, decision audit, allocation link. */
export function renderRun(
  client: GatewayClient,
  runId: string,
  handlers: RunViewHandlers,
): RunView {
  const root = h("section", { class: "run-detail", data: { testid: "run-detail" } });
  root.append(h("p", { class: "loading", text: "Loading run..." }));
  const ready = (async () => {
    let detail: RunDetail;
    let checkpoints: CheckpointSummary[];
    try {
      detail = await client.run(runId);
      checkpoints = (await client.checkpoints()).filter(
        (cp) => cp.run_id === runId,
      );
    } catch (error) {
      clear(root);
      if (error instanceof ApiError && error.status === 401) {
        handlers.onAuthFailure();
        return;
      }
      root.append(
        h("p", { class: "error-box", text: `Could not load: ${String(error)}` }),
      );
      return;
    }
    clear(root);
    const stagesDone = new Set(
      Object.keys(detail.stages_done).map((k) => Number(k)),
    );
    root.append(
      h("button", { class: "link", text: "Back to runs", onClick: handlers.onBack }),
      h("h2", { text: detail.run_id }),
      h("p", {
        class: "meta",
        text:
          `as of ${detail.as_of} - ${detail.status} - ` +
          `${detail.backend} backend - seed ${detail.seed}`,
      }),
      stageChips(detail, stagesDone),
    );
    if (detail.error) {
      root.append(
        h("p", { class: "error-box", data: { testid: "run-error" }, text: detail.error }),
      );
    }
    if (detail.status === "published") {
      root.append(
        h("button", {
          class: "primary",
          text: "View allocation",
          data: { testid: "open-allocation" },
          onClick: () => handlers.onOpenAllocation(runId),
        }),
      );
    }
    const audit = h("div", { class: "audit", data: { testid: "audit" } });
    audit.append(h("h4", { text: "Review history" }));
    const ordered = [...checkpoints].sort((a, b) =>
      a.created_at.localeCompare(b.created_at),
    );
    if (ordered.length === 0) {
      audit.append(h("p", { class: "meta", text: "No checkpoints yet." }));
    }
    for (const cp of ordered) {
      const parts = [
        `${stageLabel(cp.stage)} attempt ${cp.attempt}`,
        cp.state,
        cp.reviewer ? `by ${cp.reviewer}` : "",
        cp.decided_at ? `at ${shortTime(cp.decided_at)}` : "",
      ].filter((p) => p !== "");
      const entry = h(
        "div",
        { class: "audit-entry", data: { testid: "audit-entry" } },
        h("span", { text: parts.join(" - ") }),
      );
      if (cp.note) {
        entry.append(h("blockquote", { class: "note", text: cp.note }));
      }
      audit.append(entry);
    }
    root.append(audit);
  })();
  return { el: root, ready };
}
