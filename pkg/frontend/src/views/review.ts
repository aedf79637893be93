import type { GatewayClient } from "../api";
import { ApiError } from "../api";
import { clear, h } from "../dom";
import { formatMetric, stageLabel } from "../format";
import { parseEditedReport, precheckEdit } from "../precheck";
import type {
  Candidate,
  CheckpointDetail,
  CrewReport,
  Verdict,
} from "../types";

export interface ReviewHandlers {
  onDecided(verdict: Verdict): void;
  onBack(): void;
  onAuthFailure(): void;
}

export interface ReviewView {
  el: HTMLElement;
  ready: Promise<void>;
}

interface EditorState {
  mode: "form" | "raw";
  kept: Candidate[];
  rawText: string;
}

export function renderReview(
  client: GatewayClient,
  checkpointId: string,
  handlers: ReviewHandlers,
): ReviewView {
  const root = h("section", { class: "review", data: { testid: "review" } });
  root.append(h("p", { class: "loading", text: "Loading checkpoint..." }));
  const ready = (async () => {
    let detail: CheckpointDetail;
    try {
      detail = await client.checkpoint(checkpointId);
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
    buildReview(root, client, detail, handlers);
  })();
  return { el: root, ready };
}

function buildReview(
  root: HTMLElement,
  client: GatewayClient,
  detail: CheckpointDetail,
  handlers: ReviewHandlers,
): void {
  root.append(
    h("button", { class: "link", text: "Back to queue", onClick: handlers.onBack }),
    h("h2", { text: `${stageLabel(detail.stage)} report` }),
    h("p", {
      class: "meta",
      text: `run ${detail.run_id} - attempt ${detail.attempt} - ${detail.state}`,
    }),
  );
  if (detail.state !== "pending") {
    root.append(
      h("p", {
        class: "error-box",
        data: { testid: "not-pending" },
        text: "This checkpoint is no longer pending. Refresh the queue.",
      }),
    );
    return;
  }
  const report = detail.report;
  const sections = h("div", { class: "sections" });
  for (const [name, text] of Object.entries(report.sections)) {
    sections.append(h("h4", { text: name }), h("p", { text }));
  }
  root.append(
    sections,
    h("h4", { text: "Rationale" }),
    h("p", { text: report.rationale }),
    candidateTable(report.candidates),
  );

  const editor: EditorState = {
    mode: "form",
    kept: report.candidates.map((c) => ({ ...c })),
    rawText: JSON.stringify(report, null, 2),
  };
  root.append(decisionControls(client, detail, editor, handlers));
}

// ---------------------------------------------------------------- table

function columnsOf(candidates: Candidate[]): string[] {
  const first = candidates[0];
  if (!first) return ["symbol"];
  const keys = Object.keys(first);
  return ["symbol", ...keys.filter((k) => k !== "symbol")];
}

function cellText(candidate: Candidate, column: string): string {
  const value = candidate[column];
  if (Array.isArray(value)) return value.map(String).join(", ");
  if (value !== null && typeof value === "object") {
    return Object.entries(value as Record<string, unknown>)
      .map(([k, v]) => `${k}=${formatMetric(v)}`)
      .join("; ");
  }
  return formatMetric(value);
}

function candidateTable(candidates: Candidate[]): HTMLElement {
  const columns = columnsOf(candidates);
  let sortBy = columns[0] ?? "symbol";
  let ascending = true;
  const wrapper = h("div", { class: "table-wrap" });
  const table = h("table", { class: "candidates", data: { testid: "candidates-table" } });
  wrapper.append(table);

  const draw = (): void => {
    clear(table);
    const head = h("tr");
    for (const column of columns) {
      head.append(
        h("th", {
          text: column,
          title: "Click to sort",
          onClick: () => {
            ascending = sortBy === column ? !ascending : true;
            sortBy = column;
            draw();
          },
        }),
      );
    }
    table.append(head);
    const rows = [...candidates].sort((a, b) => {
      const va = a[sortBy];
      const vb = b[sortBy];
      let order: number;
      if (typeof va === "number" && typeof vb === "number") {
        order = va - vb;
      } else {
        order = String(va).localeCompare(String(vb));
      }
      return ascending ? order : -order;
    });
    for (const candidate of rows) {
      const tr = h("tr", { data: { testid: "candidate-row" } });
      for (const column of columns) {
        tr.append(h("td", { text: cellText(candidate, column) }));
      }
      table.append(tr);
    }
  };
  draw();
  return wrapper;
}

// -------------------------------------------------------------- decision

function decisionControls(
  client: GatewayClient,
  detail: CheckpointDetail,
  editor: EditorState,
  handlers: ReviewHandlers,
): HTMLElement {
  const box = h("div", { class: "decision", data: { testid: "decision-controls" } });
  const feedback = h("p", { class: "error-box hidden", data: { testid: "precheck-error" } });
  const note = h("textarea", {
    class: "note",
    placeholder: "Reviewer note (required for reject)",
    data: { testid: "decision-note" },
  }) as unknown as HTMLTextAreaElement;

  const editPanel = h("div", { class: "edit-panel hidden", data: { testid: "edit-panel" } });
  let editOpen = false;

  const drawEditPanel = (): void => {
    clear(editPanel);
    editPanel.append(
      h("p", {
        class: "meta",
        text:
          "Remove rows below, or switch to raw JSON to change anything else. " +
          "The edited report replaces the crew's version after validation.",
      }),
    );
    const modeToggle = h("button", {
      class: "link",
      text: editor.mode === "form" ? "Switch to raw JSON" : "Switch to row editor",
      data: { testid: "edit-mode-toggle" },
      onClick: () => {
        if (editor.mode === "form") {
          editor.mode = "raw";
          editor.rawText = JSON.stringify(
            { ...detail.report, candidates: editor.kept },
            null,
            2,
          );
        } else {
          editor.mode = "form";
        }
        drawEditPanel();
      },
    });
    editPanel.append(modeToggle);
    if (editor.mode === "form") {
      const list = h("ul", { class: "edit-rows", data: { testid: "edit-rows" } });
      editor.kept.forEach((candidate, index) => {
        list.append(
          h(
            "li",
            { data: { testid: "edit-row" } },
            h("span", { text: candidate.symbol }),
            h("button", {
              class: "link danger",
              text: "remove",
              data: { testid: "remove-candidate" },
              onClick: () => {
                editor.kept.splice(index, 1);
                drawEditPanel();
              },
            }),
          ),
        );
      });
      editPanel.append(
        list,
        h("p", { class: "meta", text: `${editor.kept.length} candidates kept` }),
      );
    } else {
      const area = h("textarea", {
        class: "raw-json",
        data: { testid: "raw-json" },
      }) as unknown as HTMLTextAreaElement;
      area.value = editor.rawText;
      area.addEventListener("input", () => {
        editor.rawText = area.value;
      });
      editPanel.append(area);
    }
  };
  drawEditPanel();

  const showError = (message: string): void => {
    feedback.textContent = message;
    feedback.classList.remove("hidden");
  };

  const buttons: HTMLButtonElement[] = [];
  const submit = async (verdict: Verdict): Promise<void> => {
    feedback.classList.add("hidden");
    let edited: CrewReport | undefined;
    if (verdict === "edit") {
      try {
        edited =
          editor.mode === "raw"
            ? parseEditedReport(editor.rawText)
            : { ...detail.report, candidates: editor.kept };
      } catch (error) {
        showError((error as Error).message);
        return;
      }
      const violation = precheckEdit(detail.stage, edited);
      if (violation !== null) {
        showError(violation);
        return;
      }
    }
    if (verdict === "reject" && note.value.trim() === "") {
      showError("a reject needs a note for the next attempt");
      return;
    }
    for (const b of buttons) b.disabled = true;
    try {
      await client.decide(detail.checkpoint_id, {
        verdict,
        reviewer: "console",
        note: note.value,
        ...(edited === undefined ? {} : { edited_report: edited }),
      });
      handlers.onDecided(verdict);
    } catch (error) {
      for (const b of buttons) b.disabled = false;
      if (error instanceof ApiError) {
        if (error.status === 401) {
          handlers.onAuthFailure();
          return;
        }
        if (error.status === 409) {
          showError("Checkpoint is no longer pending. Refresh the queue.");
          return;
        }
        showError(error.message);
        return;
      }
      showError(String(error));
    }
  };

  const approveBtn = h("button", {
    class: "primary",
    text: "Approve",
    data: { testid: "approve" },
    onClick: () => void submit("approve"),
  }) as HTMLButtonElement;
  const editBtn = h("button", {
    text: "Submit edit",
    data: { testid: "submit-edit" },
    onClick: () => void submit("edit"),
  }) as HTMLButtonElement;
  const rejectBtn = h("button", {
    class: "danger",
    text: "Reject",
    data: { testid: "reject" },
    onClick: () => void submit("reject"),
  }) as HTMLButtonElement;
  buttons.push(approveBtn, editBtn, rejectBtn);

  const editToggle = h("button", {
    class: "link",
    text: "Edit before deciding",
    data: { testid: "toggle-edit" },
    onClick: () => {
      editOpen = !editOpen;
      editPanel.classList.toggle("hidden", !editOpen);
      editBtn.classList.toggle("hidden", !editOpen);
    },
  });

  editBtn.classList.add("hidden");
  box.append(feedback, note, editToggle, editPanel, approveBtn, editBtn, rejectBtn);
  return box;
}
