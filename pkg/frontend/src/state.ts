// Application state: a cache of what the service returned, nothing more.
// Every mutation waits for the API, then refetches, so reloading the page
// (or constructing a fresh ReviewApp) reconstructs identical state.

import { ApiClient } from "./api.js";
import type {
  AnalysisSummary,
  ExerciseRecord,
  Kind,
  LabelValue,
  RecordStatus,
  SectionEdit,
} from "./types.js";

/** Dimensions that carry an unresolved maybe label and need a consensus pass. */
export function consensusDimensions(record: ExerciseRecord): string[] {
  const dims: string[] = [];
  for (const label of record.labels) {
    if (label.value === "maybe" && !(label.dimension in record.resolved_labels)) {
      if (!dims.includes(label.dimension)) dims.push(label.dimension);
    }
  }
  return dims;
}

export class ReviewApp {
  records: ExerciseRecord[] = [];
  selected: ExerciseRecord | null = null;
  summary: AnalysisSummary | null = null;
  statusFilter: RecordStatus = "pending";
  kindFilter: Kind | undefined = undefined;

  constructor(public readonly api: ApiClient) {}

  async refresh(): Promise<void> {
    this.records = await this.api.listExercises(this.statusFilter, this.kindFilter);
    if (this.selected) {
      const id = this.selected.exercise.id;
      try {
        this.selected = await this.api.getExercise(id);
      } catch {
        this.selected = null;
      }
    }
  }

  async setFilter(status: RecordStatus, kind?: Kind): Promise<void> {
    this.statusFilter = status;
    this.kindFilter = kind;
    await this.refresh();
  }

  async select(id: string): Promise<ExerciseRecord> {
    this.selected = await this.api.getExercise(id);
    return this.selected;
  }

  private requireSelection(): string {
    if (!this.selected) throw new Error("no record selected");
    return this.selected.exercise.id;
  }

  async addLabel(
    dimension: string,
    value: LabelValue,
    reviewer: string,
    notes?: string,
  ): Promise<ExerciseRecord> {
    const id = this.requireSelection();
    this.selected = await this.api.addLabel(id, { dimension, value, reviewer, notes });
    return this.selected;
  }

  async resolveConsensus(
    dimension: string,
    value: "yes" | "no",
    reviewers: string[],
  ): Promise<ExerciseRecord> {
    const id = this.requireSelection();
    this.selected = await this.api.resolveConsensus(id, { dimension, value, reviewers });
    return this.selected;
  }

  async decide(
    action: "accept" | "reject",
    reviewer: string,
    edits?: SectionEdit[],
  ): Promise<ExerciseRecord> {
    const id = this.requireSelection();
    this.selected = await this.api.decide(id, { action, reviewer, edits });
    await this.refresh();
    return this.selected!;
  }

  async loadDashboard(kind: Kind = "programming"): Promise<AnalysisSummary> {
    this.summary = await this.api.fetchSummary(kind);
    return this.summary;
  }
}
