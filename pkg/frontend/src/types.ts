// Payload shapes of the curation service API, mirrored 1:1.

export type Kind = "math" | "programming";
export type LabelValue = "yes" | "no" | "maybe";
export type Decision = "pending" | "accepted" | "rejected";
export type RecordStatus = "pending" | "accepted" | "rejected" | "canary";

export const LABEL_DIMENSIONS = [
  "sensible",
  "novel",
  "answer_matches",
  "theme_match",
  "concepts_match_all",
  "concepts_match_any",
] as const;

export interface CheckResult {
  name: string;
  passed: boolean;
  evidence: string;
  numeric: number | null;
  skipped: boolean;
}

export interface FilterReport {
  exercise_id: string;
  checks: Record<string, CheckResult>;
  verdict: "kept" | "rejected";
  reject_reasons: string[];
  canary: boolean;
}

export interface Exercise {
  id: string;
  job_key: string;
  kind: Kind;
  statement: string | null;
  solution: string | null;
  tests: string | null;
  unparsed_tail: string | null;
}

export interface ReviewLabel {
  dimension: string;
  value: LabelValue;
  reviewer: string;
  notes: string | null;
  timestamp: string;
}

export interface EditEntry {
  timestamp: string;
  section: string;
  text: string;
  reviewer: string;
}

export interface ExerciseRecord {
  exercise: Exercise;
  filter_report: FilterReport | null;
  labels: ReviewLabel[];
  resolved_labels: Record<string, "yes" | "no">;
  decision: Decision;
  edits: EditEntry[];
  status: RecordStatus;
}

export interface MetricRow {
  name: string;
  numerator: number;
  denominator: number;
  percentage: number | null;
}

export interface AnalysisSummary {
  metrics: Record<string, MetricRow>;
}

export interface GenerationJob {
  job_key: string;
  priming_id: string;
  kind: Kind;
  target_keywords: { theme: string | null; concepts: string[] };
  temperature: number;
  max_tokens: number;
  repetition_index: number;
  model_name: string;
}

export interface SectionEdit {
  section: "statement" | "solution" | "tests";
  text: string;
}

export interface JobRequest {
  priming_id: string;
  theme: string | null;
  concept_set: string[];
  temperature: number;
  count: number;
}
