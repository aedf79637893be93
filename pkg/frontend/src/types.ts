// Wire types for the review gateway. Field names match the server payloads
// exactly; nothing here is computed locally.

export type RunStatus =
  | "running"
  | "awaiting-review"
  | "awaiting-publish"
  | "published"
  | "failed";

export type Verdict = "approve" | "edit" | "reject";

export interface RunSummary {
  run_id: string;
  status: RunStatus;
  as_of: string;
  current_stage: number;
  backend: string;
  auto_approve: boolean;
  created_at: string;
  updated_at: string;
}

export interface RunDetail extends RunSummary {
  seed: number;
  attempts: Record<string, number>;
  stages_done: Record<string, StageDone>;
  prior_run: string | null;
  error: string | null;
}

export interface StageDone {
  [key: string]: unknown;
}

export interface CheckpointSummary {
  checkpoint_id: string;
  run_id: string;
  stage: number;
  stage_name: string;
  attempt: number;
  state: string;
  reviewer: string | null;
  note: string;
  created_at: string;
  decided_at: string | null;
}

export interface CheckpointDetail extends CheckpointSummary {
  report: CrewReport;
  edited_report: CrewReport | null;
}

// Candidate rows differ per stage but always carry a symbol; the rest is
// rendered from whatever fields the payload brings.
export interface Candidate {
  symbol: string;
  [key: string]: unknown;
}

export interface CrewReport {
  crew_name: string;
  produced_at: string;
  inputs_digest: string;
  sections: Record<string, string>;
  candidates: Candidate[];
  rationale: string;
  references: string[];
}

export interface DecisionRequest {
  verdict: Verdict;
  reviewer: string;
  note: string;
  edited_report?: CrewReport;
}

export interface DecisionResponse {
  checkpoint: CheckpointDetail;
  run: RunSummary;
}

export interface PositionBody {
  symbol: string;
  weight: number;
  sector: string;
  rationale: string;
}

export interface AllocationResponse {
  run_id: string;
  as_of: string;
  positions: PositionBody[];
  weight_sum: number;
  sector_shares: Record<string, number>;
  diagnostics: Record<string, unknown>;
}

export interface HealthResponse {
  status: string;
  pending_checkpoints: number;
}
