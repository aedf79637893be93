import { h } from "../dom";
import { shortTime, stageLabel } from "../format";
import type { CheckpointSummary } from "../types";

export interface QueueHandlers {
  onOpen(checkpointId: string): void;
}

/** Pending checkpoints, newest first. */
export function renderQueue(
  pending: CheckpointSummary[],
  handlers: QueueHandlers,
): HTMLElement {
  const root = h("section", { class: "queue", data: { testid: "queue" } });
  root.append(h("h2", { text: "Pending review" }));
  if (pending.length === 0) {
    root.append(
      h("p", {
        class: "empty-state",
        text: "Nothing awaiting review. Runs advance on their own until the next checkpoint.",
      }),
    );
    return root;
  }
  const ordered = [...pending].sort((a, b) =>
    b.created_at.localeCompare(a.created_at),
  );
  for (const cp of ordered) {
    const card = h(
      "article",
      { class: "card checkpoint-card", data: { testid: "checkpoint-card" } },
      h("h3", { text: `${stageLabel(cp.stage)} report` }),
      h("p", { class: "meta", text: `run ${cp.run_id}` }),
      h("p", {
        class: "meta",
        text: `attempt ${cp.attempt} - created ${shortTime(cp.created_at)}`,
      }),
      h("button", {
        class: "primary",
        text: "Review",
        data: { testid: "open-review" },
        onClick: () => handlers.onOpen(cp.checkpoint_id),
      }),
    );
    root.append(card);
  }
  return root;
}
