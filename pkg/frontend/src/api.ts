import type {
  AllocationResponse,
  CheckpointDetail,
  CheckpointSummary,
  DecisionRequest,
  DecisionResponse,
  HealthResponse,
  RunDetail,
  RunSummary,
} from "./types";

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.status = status;
  }
}

export interface TokenStore {
  get(): string | null;
  set(token: string): void;
  clear(): void;
}

const TOKEN_KEY = "masfin-gateway-token";

/** Bearer token held for the tab's lifetime, entered once. */
export function sessionTokenStore(storage: Storage): TokenStore {
  return {
    get: () => storage.getItem(TOKEN_KEY),
    set: (token) => storage.setItem(TOKEN_KEY, token),
    clear: () => storage.removeItem(TOKEN_KEY),
  };
}

export function memoryTokenStore(initial: string | null = null): TokenStore {
  let token = initial;
  return {
    get: () => token,
    set: (value) => {
      token = value;
    },
    clear: () => {
      token = null;
    },
  };
}

// Structural subset of Response so tests can hand in a plain object.
export interface ResponseLike {
  ok: boolean;
  status: number;
  statusText: string;
  json(): Promise<unknown>;
  text(): Promise<string>;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<ResponseLike>;

export interface ClientOptions {
  base?: string;
  fetchFn?: FetchLike;
}

async function detailOf(response: ResponseLike): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown } | null;
    if (body && typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return response.statusText || `HTTP ${response.status}`;
  }
}

export class GatewayClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;
  readonly tokens: TokenStore;

  constructor(tokens: TokenStore, options: ClientOptions = {}) {
    this.tokens = tokens;
    this.base = options.base ?? "";
    this.fetchFn = options.fetchFn ?? fetch.bind(globalThis);
  }

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const headers: Record<string, string> = {
      ...(init.headers as Record<string, string> | undefined),
    };
    const token = this.tokens.get();
    if (token) headers["Authorization"] = `Bearer ${token}`;
    if (init.body !== undefined) headers["Content-Type"] = "application/json";
    const response = await this.fetchFn(this.base + path, { ...init, headers });
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as T;
  }

  health(): Promise<HealthResponse> {
    return this.request("/api/health");
  }

  runs(): Promise<RunSummary[]> {
    return this.request("/api/runs");
  }

  run(runId: string): Promise<RunDetail> {
    return this.request(`/api/runs/${runId}`);
  }

  publish(runId: string): Promise<RunSummary> {
    return this.request(`/api/runs/${runId}/publish`, { method: "POST" });
  }

  allocation(runId: string): Promise<AllocationResponse> {
    return this.request(`/api/runs/${runId}/allocation`);
  }

  async allocationCsv(runId: string): Promise<string> {
    const token = this.tokens.get();
    const headers: Record<string, string> = {};
    if (token) headers["Authorization"] = `Bearer ${token}`;
    const response = await this.fetchFn(
      `${this.base}/api/runs/${runId}/allocation.csv`,
      { headers },
    );
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return response.text();
  }

  pendingCheckpoints(): Promise<CheckpointSummary[]> {
    return this.request("/api/checkpoints?state=pending");
  }

  checkpoints(): Promise<CheckpointSummary[]> {
    return this.request("/api/checkpoints");
  }

  checkpoint(checkpointId: string): Promise<CheckpointDetail> {
    return this.request(`/api/checkpoints/${checkpointId}`);
  }

  decide(checkpointId: string, body: DecisionRequest): Promise<DecisionResponse> {
    return this.request(`/api/checkpoints/${checkpointId}/decision`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }
}
