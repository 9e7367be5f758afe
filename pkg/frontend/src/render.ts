// Pure HTML renderers. Everything shown comes verbatim from service
// payloads; percentages in particular are formatted, never recomputed.

import type {
  AnalysisSummary,
  CheckResult,
  ExerciseRecord,
  MetricRow,
} from "./types.js";
import { consensusDimensions } from "./state.js";
import { LABEL_DIMENSIONS } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function badgeClass(check: CheckResult): string {
  if (check.skipped) return "badge skip";
  return check.passed ? "badge pass" : "badge fail";
}

function badgeLabel(check: CheckResult): string {
  if (check.skipped) return `${check.name}: skip`;
  return `${check.name}: ${check.passed ? "pass" : "fail"}`;
}

export function renderBadges(record: ExerciseRecord): string {
  const report = record.filter_report;
  if (!report) return '<span class="badge skip">unfiltered</span>';
  const badges = Object.values(report.checks)
    .map((check) => `<span class="${badgeClass(check)}">${escapeHtml(badgeLabel(check))}</span>`)
    .join(" ");
  const canary = report.canary ? ' <span class="badge canary">canary</span>' : "";
  return badges + canary;
}

function similarityOf(record: ExerciseRecord): string {
  const novelty = record.filter_report?.checks["novelty"];
  if (!novelty || novelty.numeric === null) return "";
  return ` <span class="similarity">similarity ${novelty.numeric.toFixed(3)}</span>`;
}

export function renderQueue(records: ExerciseRecord[]): string {
  if (records.length === 0) {
    return '<p class="empty">Nothing to review in this queue.</p>';
  }
  const rows = records.map((record) => {
    const theme = record.exercise.statement?.split("\n")[0] ?? "";
    return (
      `<tr class="queue-row" data-id="${escapeHtml(record.exercise.id)}">` +
      `<td class="id">${escapeHtml(record.exercise.id)}</td>` +
      `<td class="kind">${record.exercise.kind}</td>` +
      `<td class="preview">${escapeHtml(theme.slice(0, 90))}</td>` +
      `<td class="checks">${renderBadges(record)}${similarityOf(record)}</td>` +
      `</tr>`
    );
  });
  return (
    '<table class="queue"><thead><tr>' +
    "<th>id</th><th>kind</th><th>statement</th><th>checks</th>" +
    `</tr></thead><tbody>${rows.join("")}</tbody></table>`
  );
}

function renderSection(title: string, name: string, text: string | null): string {
  const body = text === null ? "<em>absent</em>" : `<pre>${escapeHtml(text)}</pre>`;
  return (
    `<section class="exercise-section" data-section="${name}">` +
    `<h3>${title}</h3>${body}` +
    `<textarea class="editor" data-section="${name}">${escapeHtml(text ?? "")}</textarea>` +
    `</section>`
  );
}

function renderEvidence(record: ExerciseRecord): string {
  const report = record.filter_report;
  if (!report) return "";
  const items = Object.values(report.checks)
    .filter((check) => check.evidence)
    .map(
      (check) =>
        `<li class="${badgeClass(check)}">${escapeHtml(check.name)}: ${escapeHtml(check.evidence)}</li>`,
    );
  return `<ul class="evidence">${items.join("")}</ul>`;
}

function renderLabelControls(record: ExerciseRecord): string {
  const rows = LABEL_DIMENSIONS.map((dimension) => {
    const resolved = record.resolved_labels[dimension];
    const resolvedText = resolved ? ` <strong>resolved: ${resolved}</strong>` : "";
    return (
      `<div class="label-row" data-dimension="${dimension}">` +
      `<span class="dimension">${dimension}</span>` +
      ["yes", "no", "maybe"]
        .map((value) => `<button class="label-btn" data-value="${value}">${value}</button>`)
        .join("") +
      `<input class="notes" placeholder="notes (required feel for maybe)">` +
      resolvedText +
      `</div>`
    );
  });
  return `<div class="labels">${rows.join("")}</div>`;
}

export function renderConsensusPrompt(record: ExerciseRecord): string {
  const dims = consensusDimensions(record);
  if (dims.length === 0) return "";
  const blocks = dims.map(
    (dimension) =>
      `<div class="consensus" data-dimension="${dimension}">` +
      `<p>"${dimension}" was labeled maybe; a second reviewer must settle it.</p>` +
      `<input class="second-reviewer" placeholder="second reviewer">` +
      `<button class="consensus-btn" data-value="yes">yes</button>` +
      `<button class="consensus-btn" data-value="no">no</button>` +
      `</div>`,
  );
  return `<div class="consensus-prompts">${blocks.join("")}</div>`;
}

export function renderDetail(record: ExerciseRecord): string {
  const exercise = record.exercise;
  return (
    `<article class="detail" data-id="${escapeHtml(exercise.id)}">` +
    `<header><h2>${escapeHtml(exercise.id)}</h2>` +
    `<span class="status">${record.status}</span>${renderBadges(record)}</header>` +
    renderEvidence(record) +
    '<div class="sections">' +
    renderSection("Problem statement", "statement", exercise.statement) +
    renderSection(
      exercise.kind === "math" ? "Answer" : "Sample solution",
      "solution",
      exercise.solution,
    ) +
    (exercise.kind === "programming"
      ? renderSection("Tests", "tests", exercise.tests)
      : "") +
    "</div>" +
    renderLabelControls(record) +
    renderConsensusPrompt(record) +
    '<footer class="decision">' +
    `<input class="reviewer" placeholder="reviewer">` +
    `<button class="accept">accept</button><button class="reject">reject</button>` +
    `</footer></article>`
  );
}

const METRIC_TITLES: Record<string, string> = {
  has_solution: "Has sample solution?",
  runnable: "Can run sample solution?",
  has_tests: "Has tests?",
  tests_pass: "All tests pass?",
  full_coverage: "Full test coverage?",
  mean_coverage_over_passing: "Mean coverage (passing suites)",
};

export function formatMetric(row: MetricRow): string {
  if (row.percentage === null) return "n/a";
  const ratio = `${row.numerator}/${row.denominator}`;
  return `${row.percentage.toFixed(1)}% ${ratio}`;
}

export function renderDashboard(summary: AnalysisSummary): string {
  const rows = Object.keys(METRIC_TITLES)
    .filter((name) => name in summary.metrics)
    .map((name) => {
      const row = summary.metrics[name]!;
      return (
        `<tr><td>${METRIC_TITLES[name]}</td>` +
        `<td class="value" data-metric="${name}">${formatMetric(row)}</td></tr>`
      );
    });
  return (
    '<table class="dashboard"><thead><tr><th>metric</th><th>value</th></tr></thead>' +
    `<tbody>${rows.join("")}</tbody></table>`
  );
}

export function renderPrimingForm(primingIds: string[]): string {
  const options = primingIds
    .map((id) => `<option value="${escapeHtml(id)}">${escapeHtml(id)}</option>`)
    .join("");
  return (
    '<form class="priming-form">' +
    `<select name="priming_id">${options}</select>` +
    '<input name="theme" placeholder="theme (optional)">' +
    '<input name="concept_set" placeholder="concepts, comma separated">' +
    '<input name="temperature" value="0.75">' +
    '<input name="count" value="2">' +
    "<button type=\"submit\">queue generation jobs</button>" +
    "</form>"
  );
}
