"""Event-sourced store for the human review workflow.

Every mutation appends one or more immutable events to a JSONL log and
updates an in-memory materialized view through the same apply function
used for replay, so rebuilding from the log always reproduces the live
state.  Storage is deliberately a single file: the corpus is desk-scale
and the whole review history stays auditable with a pager.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Callable, Iterable, Optional

from . import codec
from .model import (
    ACCEPTED,
    EXERCISE_KINDS,
    EditEntry,
    ExerciseRecord,
    FilterReport,
    GeneratedExercise,
    KEPT,
    LABEL_DIMENSIONS,
    LABEL_VALUES,
    PENDING,
    REJECTED,
    ReviewLabel,
)

EVENT_KINDS = (
    "exercise_ingested",
    "filter_reported",
    "label_added",
    "label_resolved",
    "decision_made",
    "edit_applied",
)

EDITABLE_SECTIONS = ("statement", "solution", "tests")


class CurationError(Exception):
    pass


class RecordNotFound(CurationError):
    pass


class DuplicateExercise(CurationError):
    pass


class AlreadyDecided(CurationError):
    pass


class NotInConsensusState(CurationError):
    pass


class TooFewReviewers(CurationError):
    pass


class ValidationError(CurationError):
    pass


class CorruptLog(CurationError):
    def __init__(self, seq: int, detail: str):
        self.seq = seq
        super().__init__(f"corrupt event log at seq {seq}: {detail}")


@dataclass(frozen=True)
class Event:
    seq: int
    timestamp: datetime
    kind: str
    payload: dict


def encode_event(event: Event) -> dict:
    return {
        "seq": event.seq,
        "timestamp": event.timestamp.isoformat(),
        "kind": event.kind,
        "payload": event.payload,
    }


def decode_event(data: dict) -> Event:
    return Event(
        seq=data["seq"],
        timestamp=datetime.fromisoformat(data["timestamp"]),
        kind=data["kind"],
        payload=data["payload"],
    )


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class CurationStore:
    """Materialized review state over an append-only event log.

    One writer at a time: every mutating call takes the store lock,
    appends its events to the log file, then applies them to the view.
    Readers see a consistent snapshot no older than the last append.
    """

    def __init__(self, log_path: str | Path, clock: Callable[[], datetime] = _utcnow):
        self.log_path = Path(log_path)
        self.clock = clock
        self._lock = threading.RLock()
        self.records: dict[str, ExerciseRecord] = {}
        self.last_seq = 0
        if self.log_path.exists():
            self._replay_file()

    # ------------------------------------------------------------------
    # event plumbing
    # ------------------------------------------------------------------

    def _replay_file(self) -> None:
        with open(self.log_path, encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    event = decode_event(json.loads(line))
                except (ValueError, KeyError) as exc:
                    raise CorruptLog(self.last_seq + 1, f"undecodable line {line_number}: {exc}")
                if event.seq != self.last_seq + 1:
                    raise CorruptLog(event.seq, f"expected seq {self.last_seq + 1}")
                self._apply(event)
                self.last_seq = event.seq

    def _append(self, events: list[tuple[str, dict]]) -> None:
        """Write a batch of events as one atomic append, then apply them."""
        now = self.clock()
        realized = []
        for offset, (kind, payload) in enumerate(events, start=1):
            realized.append(Event(seq=self.last_seq + offset, timestamp=now, kind=kind, payload=payload))
        lines = "".join(codec.dumps(encode_event(e)) + "\n" for e in realized)
        with open(self.log_path, "a", encoding="utf-8") as handle:
            handle.write(lines)
        for event in realized:
            self._apply(event)
            self.last_seq = event.seq

    def _apply(self, event: Event) -> None:
        payload = event.payload
        if event.kind == "exercise_ingested":
            exercise = codec.decode_exercise(payload["exercise"])
            self.records[payload["record_id"]] = ExerciseRecord(exercise=exercise)
        elif event.kind == "filter_reported":
            record = self.records[payload["record_id"]]
            report = codec.decode_report(payload["filter_report"])
            self.records[payload["record_id"]] = replace(record, filter_report=report)
        elif event.kind == "label_added":
            record = self.records[payload["record_id"]]
            label = codec.decode_label(payload["label"])
            resolved = dict(record.resolved_labels)
            prior = [l for l in record.labels if l.dimension == label.dimension]
            if label.value != "maybe" and not prior and label.dimension not in resolved:
                resolved[label.dimension] = label.value
            self.records[payload["record_id"]] = replace(
                record, labels=record.labels + (label,), resolved_labels=resolved
            )
        elif event.kind == "label_resolved":
            record = self.records[payload["record_id"]]
            resolved = dict(record.resolved_labels)
            resolved[payload["dimension"]] = payload["value"]
            self.records[payload["record_id"]] = replace(record, resolved_labels=resolved)
        elif event.kind == "edit_applied":
            record = self.records[payload["record_id"]]
            edit = codec.decode_edit(payload["edit"])
            exercise = replace(record.exercise, **{edit.section: edit.text})
            self.records[payload["record_id"]] = replace(
                record, exercise=exercise, edits=record.edits + (edit,)
            )
        elif event.kind == "decision_made":
            record = self.records[payload["record_id"]]
            self.records[payload["record_id"]] = replace(record, decision=payload["action"])
        else:
            raise CorruptLog(event.seq, f"unknown event kind {event.kind!r}")

    # ------------------------------------------------------------------
    # queries
    # ------------------------------------------------------------------

    def get(self, record_id: str) -> ExerciseRecord:
        with self._lock:
            record = self.records.get(record_id)
            if record is None:
                raise RecordNotFound(record_id)
            return record

    def status_of(self, record: ExerciseRecord) -> str:
        if record.decision == ACCEPTED:
            return ACCEPTED
        if record.decision == REJECTED:
            return REJECTED
        report = record.filter_report
        if report is not None and report.verdict == REJECTED:
            return REJECTED
        return PENDING

    def pending(self) -> list[ExerciseRecord]:
        """Kept-by-filter, not-yet-decided records, exactly."""
        with self._lock:
            return [
                r
                for r in self.records.values()
                if r.decision == PENDING
                and r.filter_report is not None
                and r.filter_report.verdict == KEPT
            ]

    def list_records(
        self, status: Optional[str] = None, kind: Optional[str] = None,
        limit: Optional[int] = None,
    ) -> list[ExerciseRecord]:
        with self._lock:
            records = sorted(self.records.values(), key=lambda r: r.exercise.id)
        if kind is not None:
            records = [r for r in records if r.exercise.kind == kind]
        if status == "canary":
            records = [
                r for r in records
                if r.filter_report is not None and r.filter_report.canary
            ]
        elif status == PENDING:
            pending_ids = {r.exercise.id for r in self.pending()}
            records = [r for r in records if r.exercise.id in pending_ids]
        elif status is not None:
            records = [r for r in records if self.status_of(r) == status]
        if limit is not None:
            records = records[:limit]
        return records

    # ------------------------------------------------------------------
    # mutations
    # ------------------------------------------------------------------

    def ingest(self, exercise: GeneratedExercise, filter_report: FilterReport) -> str:
        """Store a freshly filtered exercise; both events land atomically."""
        violations = exercise.violations() + filter_report.violations()
        if violations:
            raise ValidationError("; ".join(violations))
        if filter_report.exercise_id != exercise.id:
            raise ValidationError("filter report belongs to a different exercise")
        with self._lock:
            if exercise.id in self.records:
                raise DuplicateExercise(exercise.id)
            self._append(
                [
                    (
                        "exercise_ingested",
                        {"record_id": exercise.id, "exercise": codec.encode_exercise(exercise)},
                    ),
                    (
                        "filter_reported",
                        {"record_id": exercise.id, "filter_report": codec.encode_report(filter_report)},
                    ),
                ]
            )
            return exercise.id

    def add_label(self, record_id: str, label: ReviewLabel) -> ExerciseRecord:
        if label.dimension not in LABEL_DIMENSIONS:
            raise ValidationError(f"unknown label dimension: {label.dimension!r}")
        if label.value not in LABEL_VALUES:
            raise ValidationError(f"unknown label value: {label.value!r}")
        with self._lock:
            record = self.get(record_id)
            if record.decision != PENDING:
                raise AlreadyDecided(record_id)
            self._append(
                [("label_added", {"record_id": record_id, "label": codec.encode_label(label)})]
            )
            return self.get(record_id)

    def resolve_consensus(
        self, record_id: str, dimension: str, value: str, reviewers: list[str]
    ) -> ExerciseRecord:
        """Turn a maybe label into yes/no; needs at least two reviewers."""
        if value not in ("yes", "no"):
            raise ValidationError("consensus value must be yes or no")
        if len(reviewers) < 2:
            raise TooFewReviewers(f"{len(reviewers)} reviewer(s), need at least 2")
        with self._lock:
            record = self.get(record_id)
            if record.decision != PENDING:
                raise AlreadyDecided(record_id)
            if dimension not in record.needs_consensus():
                raise NotInConsensusState(dimension)
            self._append(
                [
                    (
                        "label_resolved",
                        {
                            "record_id": record_id,
                            "dimension": dimension,
                            "value": value,
                            "reviewers": list(reviewers),
                        },
                    )
                ]
            )
            return self.get(record_id)

    def decide(
        self,
        record_id: str,
        action: str,
        reviewer: str,
        edits: Optional[list[tuple[str, str]]] = None,
    ) -> ExerciseRecord:
        """Accept or reject a record, applying section edits first."""
        action = {"accept": ACCEPTED, "reject": REJECTED}.get(action, action)
        if action not in (ACCEPTED, REJECTED):
            raise ValidationError(f"action must be accept or reject, got {action!r}")
        with self._lock:
            record = self.get(record_id)
            if record.decision != PENDING:
                raise AlreadyDecided(record_id)
            events: list[tuple[str, dict]] = []
            for section, text in edits or []:
                if section not in EDITABLE_SECTIONS:
                    raise ValidationError(f"unknown section: {section!r}")
                if section == "tests" and record.exercise.kind == "math":
                    raise ValidationError("math exercises have no tests section")
                edit = EditEntry(
                    timestamp=self.clock(), section=section, text=text, reviewer=reviewer
                )
                events.append(
                    ("edit_applied", {"record_id": record_id, "edit": codec.encode_edit(edit)})
                )
            events.append(
                ("decision_made", {"record_id": record_id, "action": action, "reviewer": reviewer})
            )
            self._append(events)
            return self.get(record_id)

    def snapshot(self) -> str:
        """Canonical encoding of the whole view, for state comparisons."""
        with self._lock:
            return codec.dumps(
                {
                    "last_seq": self.last_seq,
                    "records": {
                        rid: codec.encode_record(r) for rid, r in sorted(self.records.items())
                    },
                }
            )


def rebuild(log_path: str | Path) -> CurationStore:
    """Fresh store materialized purely from the event log."""
    return CurationStore(log_path)


# ----------------------------------------------------------------------
# programmatic-analysis summary
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class MetricRow:
    name: str
    numerator: float
    denominator: int

    @property
    def percentage(self) -> Optional[float]:
        """Numerator share as a half-up percentage with one decimal."""
        if self.denominator == 0:
            return None
        raw = 100.0 * self.numerator / self.denominator
        return float(Decimal(repr(raw)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))

    def ratio_text(self) -> str:
        numerator = int(self.numerator) if float(self.numerator).is_integer() else self.numerator
        return f"{numerator}/{self.denominator}"

    def row_text(self) -> str:
        if self.percentage is None:
            return "n/a"
        return f"{self.percentage:.1f}% {self.ratio_text()}"


@dataclass(frozen=True)
class AnalysisSummary:
    metrics: dict[str, MetricRow]

    def encode(self) -> dict:
        return {
            "metrics": {
                name: {
                    "name": name,
                    "numerator": row.numerator,
                    "denominator": row.denominator,
                    "percentage": row.percentage,
                }
                for name, row in self.metrics.items()
            }
        }


def _check_passed(report: FilterReport, name: str) -> bool:
    check = report.checks.get(name)
    return check is not None and check.passed and not check.skipped


def summarize_reports(reports: Iterable[FilterReport]) -> AnalysisSummary:
    """Aggregate programming filter reports into the analysis table.

    Denominators chain the way the checks do: runnable is judged among
    exercises with a solution, test passing among those with tests, and
    coverage among those whose whole suite passed.
    """
    reports = list(reports)
    total = len(reports)
    with_solution = [r for r in reports if _check_passed(r, "has_solution")]
    runnable = [r for r in with_solution if _check_passed(r, "runnable")]
    with_tests = [r for r in reports if _check_passed(r, "has_tests")]
    tests_pass = [r for r in with_tests if _check_passed(r, "tests_pass")]

    coverages = []
    for report in tests_pass:
        check = report.checks.get("coverage")
        if check is not None and check.numeric is not None:
            coverages.append(check.numeric)
    full_coverage = [c for c in coverages if c >= 1.0]

    return AnalysisSummary(
        metrics={
            "has_solution": MetricRow("has_solution", len(with_solution), total),
            "runnable": MetricRow("runnable", len(runnable), len(with_solution)),
            "has_tests": MetricRow("has_tests", len(with_tests), total),
            "tests_pass": MetricRow("tests_pass", len(tests_pass), len(with_tests)),
            "full_coverage": MetricRow("full_coverage", len(full_coverage), len(tests_pass)),
            "mean_coverage_over_passing": MetricRow(
                "mean_coverage_over_passing", sum(coverages), len(coverages)
            ),
        }
    )


def summarize(records: Iterable[ExerciseRecord], kind: str = "programming") -> AnalysisSummary:
    if kind not in EXERCISE_KINDS:
        raise ValidationError(f"unknown exercise kind: {kind!r}")
    reports = [
        r.filter_report
        for r in records
        if r.exercise.kind == kind and r.filter_report is not None
    ]
    return summarize_reports(reports)
