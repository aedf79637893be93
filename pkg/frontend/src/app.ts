import { ApiError, GatewayClient } from "./api";
import { clear, h } from "./dom";
import { renderAllocation } from "./views/allocation";
import { renderBoard, renderRun } from "./views/board";
import { renderQueue } from "./views/queue";
import { renderReview } from "./views/review";
import type { CheckpointSummary, RunSummary, Verdict } from "./types";

export type Route =
  | { view: "queue" }
  | { view: "review"; checkpointId: string }
  | { view: "runs" }
  | { view: "run"; runId: string }
  | { view: "allocation"; runId: string };

export interface ConsoleOptions {
  pollMs?: number;
  onRouteChange?: (route: Route) => void;
}

const DEFAULT_POLL_MS = 3000;

export class ReviewConsole {
  readonly client: GatewayClient;
  private readonly root: HTMLElement;
  private readonly main: HTMLElement;
  private readonly banner: HTMLElement;
  private readonly staleNote: HTMLElement;
  private readonly toastBox: HTMLElement;
  private readonly queueBadge: HTMLElement;
  private readonly tokenForm: HTMLElement;
  private readonly pollMs: number;
  private readonly onRouteChange?: (route: Route) => void;

  private route: Route = { view: "queue" };
  private pending: CheckpointSummary[] = [];
  private runs: RunSummary[] = [];
  private connected = true;
  private lastSync: Date | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(root: HTMLElement, client: GatewayClient, options: ConsoleOptions = {}) {
    this.root = root;
    this.client = client;
    this.pollMs = options.pollMs ?? DEFAULT_POLL_MS;
    this.onRouteChange = options.onRouteChange;

    this.banner = h("div", {
      class: "banner hidden",
      data: { testid: "connection-banner" },
      text: "Gateway unreachable. Retrying...",
    });
    this.staleNote = h("span", { class: "stale hidden", data: { testid: "stale-note" } });
    this.toastBox = h("div", { class: "toast hidden", data: { testid: "toast" } });
    this.queueBadge = h("span", { class: "badge", data: { testid: "queue-badge" }, text: "0" });
    this.tokenForm = this.buildTokenForm();
    this.main = h("main", { data: { testid: "main" } });

    const nav = h(
      "nav",
      {},
      h("strong", { text: "masfin review console" }),
      h("button", {
        class: "link",
        text: "Queue",
        data: { testid: "nav-queue" },
        onClick: () => void this.navigate({ view: "queue" }),
      }),
      this.queueBadge,
      h("button", {
        class: "link",
        text: "Runs",
        data: { testid: "nav-runs" },
        onClick: () => void this.navigate({ view: "runs" }),
      }),
      this.staleNote,
    );
    clear(root);
    root.append(this.banner, this.toastBox, this.tokenForm, nav, this.main);
  }

  // ------------------------------------------------------------- polling

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => {
      void this.refresh();
    }, this.pollMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** One poll tick: pull queue and runs, then re-render list views. */
  async refresh(): Promise<void> {
    try {
      const [pending, runs] = await Promise.all([
        this.client.pendingCheckpoints(),
        this.client.runs(),
      ]);
      this.pending = pending;
      this.runs = runs;
      this.connected = true;
      this.lastSync = new Date();
    } catch (error) {
      if (error instanceof ApiError && error.status === 401) {
        this.showTokenPrompt();
        return;
      }
      this.connected = false;
    }
    this.renderChrome();
    if (this.route.view === "queue" || this.route.view === "runs") {
      await this.renderMain();
    }
  }

  // ---------------------------------------------------------- navigation

  async navigate(route: Route): Promise<void> {
    this.route = route;
    this.onRouteChange?.(route);
    await this.renderMain();
  }

  currentRoute(): Route {
    return this.route;
  }

  private async renderMain(): Promise<void> {
    clear(this.main);
    const route = this.route;
    if (route.view === "queue") {
      this.main.append(
        renderQueue(this.pending, {
          onOpen: (checkpointId) =>
            void this.navigate({ view: "review", checkpointId }),
        }),
      );
      return;
    }
    if (route.view === "review") {
      const view = renderReview(this.client, route.checkpointId, {
        onDecided: (verdict) => void this.afterDecision(verdict),
        onBack: () => void this.navigate({ view: "queue" }),
        onAuthFailure: () => this.showTokenPrompt(),
      });
      this.main.append(view.el);
      await view.ready;
      return;
    }
    if (route.view === "runs") {
      const doneByRun = new Map<string, Set<number>>();
      for (const run of this.runs) {
        // Summary rows do not carry stages_done; infer from progress.
        const done = new Set<number>();
        for (let stage = 1; stage < run.current_stage; stage += 1) done.add(stage);
        if (run.status === "published" || run.status === "awaiting-publish") {
          for (let stage = 1; stage <= 5; stage += 1) done.add(stage);
        }
        doneByRun.set(run.run_id, done);
      }
      this.main.append(
        renderBoard(this.runs, doneByRun, {
          onOpenRun: (runId) => void this.navigate({ view: "run", runId }),
        }),
      );
      return;
    }
    if (route.view === "run") {
      const view = renderRun(this.client, route.runId, {
        onBack: () => void this.navigate({ view: "runs" }),
        onOpenAllocation: (runId) =>
          void this.navigate({ view: "allocation", runId }),
        onAuthFailure: () => this.showTokenPrompt(),
      });
      this.main.append(view.el);
      await view.ready;
      return;
    }
    const view = renderAllocation(this.client, route.runId, {
      onBack: () => void this.navigate({ view: "run", runId: route.runId }),
      onAuthFailure: () => this.showTokenPrompt(),
    });
    this.main.append(view.el);
    await view.ready;
  }

  private async afterDecision(verdict: Verdict): Promise<void> {
    this.toast(`Decision recorded: ${verdict}`);
    await this.navigate({ view: "queue" });
    await this.refresh();
  }

  // ------------------------------------------------------------- chrome

  private renderChrome(): void {
    this.banner.classList.toggle("hidden", this.connected);
    this.queueBadge.textContent = String(this.pending.length);
    if (this.lastSync === null) {
      this.staleNote.classList.remove("hidden");
      this.staleNote.textContent = "no data yet";
    } else if (!this.connected) {
      this.staleNote.classList.remove("hidden");
      this.staleNote.textContent = `stale since ${this.lastSync.toISOString().slice(11, 19)}`;
    } else {
      this.staleNote.classList.add("hidden");
    }
  }

  private toast(message: string): void {
    this.toastBox.textContent = message;
    this.toastBox.classList.remove("hidden");
    setTimeout(() => this.toastBox.classList.add("hidden"), 4000);
  }

  // -------------------------------------------------------------- token

  private buildTokenForm(): HTMLElement {
    const input = h("input", {
      type: "password",
      placeholder: "Gateway token",
      data: { testid: "token-input" },
    }) as HTMLInputElement;
    const form = h(
      "div",
      { class: "token-form hidden", data: { testid: "token-form" } },
      h("p", { text: "Enter the gateway bearer token to continue." }),
      input,
      h("button", {
        class: "primary",
        text: "Save token",
        data: { testid: "token-save" },
        onClick: () => {
          this.client.tokens.set(input.value);
          form.classList.add("hidden");
          void this.refresh();
        },
      }),
    );
    return form;
  }

  private showTokenPrompt(): void {
    this.tokenForm.classList.remove("hidden");
  }
}

export function createConsole(
  root: HTMLElement,
  client: GatewayClient,
  options: ConsoleOptions = {},
): ReviewConsole {
  return new ReviewConsole(root, client, options);
}
