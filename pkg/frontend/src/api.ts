// Thin fetch client for the curation service. All mutations resolve only
// after the server has answered; there is no optimistic layer to roll back.

import type {
  AnalysisSummary,
  ExerciseRecord,
  GenerationJob,
  JobRequest,
  Kind,
  LabelValue,
  RecordStatus,
  SectionEdit,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly error: string,
    public readonly detail: string,
  ) {
    super(`${error}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let error = "HttpError";
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { error?: string; detail?: string };
    error = body.error ?? error;
    detail = body.detail ?? detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, error, detail);
}

export class ApiClient {
  constructor(public readonly baseUrl: string) {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  async listExercises(status?: RecordStatus, kind?: Kind): Promise<ExerciseRecord[]> {
    const params = new URLSearchParams();
    if (status) params.set("status", status);
    if (kind) params.set("kind", kind);
    const query = params.toString();
    const body = await this.get<{ exercises: ExerciseRecord[] }>(
      `/api/exercises${query ? `?${query}` : ""}`,
    );
    return body.exercises;
  }

  getExercise(id: string): Promise<ExerciseRecord> {
    return this.get(`/api/exercises/${encodeURIComponent(id)}`);
  }

  addLabel(
    id: string,
    label: { dimension: string; value: LabelValue; reviewer: string; notes?: string },
  ): Promise<ExerciseRecord> {
    return this.post(`/api/exercises/${encodeURIComponent(id)}/labels`, label);
  }

  resolveConsensus(
    id: string,
    consensus: { dimension: string; value: "yes" | "no"; reviewers: string[] },
  ): Promise<ExerciseRecord> {
    return this.post(`/api/exercises/${encodeURIComponent(id)}/consensus`, consensus);
  }

  decide(
    id: string,
    decision: { action: "accept" | "reject"; reviewer: string; edits?: SectionEdit[] },
  ): Promise<ExerciseRecord> {
    return this.post(`/api/exercises/${encodeURIComponent(id)}/decision`, decision);
  }

  async enqueueJobs(request: JobRequest): Promise<GenerationJob[]> {
    const body = await this.post<{ jobs: GenerationJob[] }>("/api/jobs", request);
    return body.jobs;
  }

  fetchSummary(kind: Kind = "programming"): Promise<AnalysisSummary> {
    return this.get(`/api/reports/summary?kind=${kind}`);
  }
}
