import type { GatewayClient } from "../api";
import { ApiError } from "../api";
import { clear, h } from "../dom";
import { formatPercent, formatWeight } from "../format";
import type { AllocationResponse } from "../types";

export interface AllocationHandlers {
  onBack(): void;
  onAuthFailure(): void;
}

export interface AllocationView {
  el: HTMLElement;
  ready: Promise<void>;
}

export function renderAllocation(
  client: GatewayClient,
  runId: string,
  handlers: AllocationHandlers,
): AllocationView {
  const root = h("section", { class: "allocation", data: { testid: "allocation" } });
  root.append(h("p", { class: "loading", text: "Loading allocation..." }));
  const ready = (async () => {
    let allocation: AllocationResponse;
    try {
      allocation = await client.allocation(runId);
    } catch (error) {
      clear(root);
      if (error instanceof ApiError && error.status === 401) {
        handlers.onAuthFailure();
        return;
      }
      if (error instanceof ApiError && error.status === 404) {
        root.append(
          h("button", { class: "link", text: "Back", onClick: handlers.onBack }),
          h("p", {
            class: "empty-state",
            data: { testid: "not-published" },
            text: "Not yet published. The allocation appears here once the run is published.",
          }),
        );
        return;
      }
      root.append(
        h("p", { class: "error-box", text: `Could not load: ${String(error)}` }),
      );
      return;
    }
    clear(root);
    build(root, client, allocation, handlers);
  })();
  return { el: root, ready };
}

function build(
  root: HTMLElement,
  client: GatewayClient,
  allocation: AllocationResponse,
  handlers: AllocationHandlers,
): void {
  root.append(
    h("button", { class: "link", text: "Back", onClick: handlers.onBack }),
    h("h2", { text: `Allocation for ${allocation.as_of}` }),
    h(
      "p",
      { class: "badges" },
      h("span", {
        class: "badge",
        data: { testid: "weight-sum" },
        // The sum arrives from the API; the console never adds weights up.
        text: `weight sum ${formatWeight(allocation.weight_sum)}`,
      }),
      h("span", {
        class: "badge",
        data: { testid: "position-count" },
        text: `${allocation.positions.length} positions`,
      }),
    ),
  );

  const table = h("table", { class: "positions", data: { testid: "positions-table" } });
  const head = h("tr");
  for (const column of ["symbol", "weight", "sector", "rationale"]) {
    head.append(h("th", { text: column }));
  }
  table.append(head);
  for (const position of allocation.positions) {
    table.append(
      h(
        "tr",
        { data: { testid: "position-row" } },
        h("td", { text: position.symbol }),
        h("td", { text: formatWeight(position.weight) }),
        h("td", { text: position.sector }),
        h("td", { text: position.rationale }),
      ),
    );
  }
  root.append(h("div", { class: "table-wrap" }, table));

  const sectors = h("div", { class: "sectors", data: { testid: "sector-shares" } });
  sectors.append(h("h4", { text: "Sector shares" }));
  const shares = Object.entries(allocation.sector_shares).sort(
    (a, b) => b[1] - a[1],
  );
  for (const [sector, share] of shares) {
    const bar = h("div", { class: "bar" });
    bar.style.width = `${Math.round(300 * share)}px`;
    sectors.append(
      h(
        "div",
        { class: "sector-row" },
        h("span", { class: "sector-name", text: sector }),
        bar,
        h("span", { class: "sector-share", text: formatPercent(share) }),
      ),
    );
  }
  root.append(sectors);

  const exportStatus = h("span", { class: "meta", data: { testid: "export-status" } });
  root.append(
    h("button", {
      text: "Export CSV",
      data: { testid: "export-csv" },
      onClick: () => {
        void (async () => {
          try {
            const csv = await client.allocationCsv(allocation.run_id);
            downloadCsv(csv, `allocation-${allocation.as_of}.csv`);
            exportStatus.textContent = "exported";
          } catch (error) {
            exportStatus.textContent = `export failed: ${String(error)}`;
          }
        })();
      },
    }),
    exportStatus,
  );
}

function downloadCsv(text: string, filename: string): void {
  const blob = new Blob([text], { type: "text/csv" });
  const url = URL.createObjectURL(blob);
  const link = document.createElement("a");
  link.href = url;
  link.download = filename;
  link.click();
  URL.revokeObjectURL(url);
}
