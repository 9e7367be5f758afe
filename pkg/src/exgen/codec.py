"""Canonical JSON encodings for every domain type.

One encoding per type, used everywhere a value crosses a process
boundary: the event log, the HTTP API, fixture files, and the CLI
artifacts.  Canonical means sorted keys, compact separators, UTF-8, so
`dumps(decode(s)) == s` holds byte-for-byte for any canonically encoded
value.
"""

from __future__ import annotations

import json
from datetime import datetime
from typing import Any, Optional

from .model import (
    CheckResult,
    EditEntry,
    ExerciseRecord,
    FilterReport,
    GeneratedExercise,
    GenerationJob,
    Keywords,
    PrimingExercise,
    RawCompletion,
    ReviewLabel,
)


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _ts(value: datetime) -> str:
    return value.isoformat()


def _parse_ts(value: str) -> datetime:
    return datetime.fromisoformat(value)


def encode_keywords(kw: Keywords) -> dict:
    return {"theme": kw.theme, "concepts": list(kw.concepts)}


def decode_keywords(data: dict) -> Keywords:
    return Keywords(theme=data["theme"], concepts=tuple(data["concepts"]))


def encode_priming(p: PrimingExercise) -> dict:
    return {
        "id": p.id,
        "kind": p.kind,
        "keywords": encode_keywords(p.keywords),
        "statement": p.statement,
        "solution": p.solution,
        "tests": p.tests,
    }


def decode_priming(data: dict) -> PrimingExercise:
    return PrimingExercise(
        id=data["id"],
        kind=data["kind"],
        keywords=decode_keywords(data["keywords"]),
        statement=data["statement"],
        solution=data["solution"],
        tests=data.get("tests"),
    )


def encode_job(job: GenerationJob) -> dict:
    return {
        "job_key": job.job_key,
        "priming_id": job.priming_id,
        "kind": job.kind,
        "target_keywords": encode_keywords(job.target_keywords),
        "temperature": job.temperature,
        "max_tokens": job.max_tokens,
        "repetition_index": job.repetition_index,
        "model_name": job.model_name,
    }


def decode_job(data: dict) -> GenerationJob:
    return GenerationJob(
        job_key=data["job_key"],
        priming_id=data["priming_id"],
        kind=data["kind"],
        target_keywords=decode_keywords(data["target_keywords"]),
        temperature=float(data["temperature"]),
        max_tokens=data["max_tokens"],
        repetition_index=data["repetition_index"],
        model_name=data["model_name"],
    )


def encode_completion(c: RawCompletion) -> dict:
    return {"job_key": c.job_key, "text": c.text, "finish_reason": c.finish_reason}


def decode_completion(data: dict) -> RawCompletion:
    return RawCompletion(
        job_key=data["job_key"],
        text=data["text"],
        finish_reason=data.get("finish_reason", "stop"),
    )


def encode_exercise(ex: GeneratedExercise) -> dict:
    return {
        "id": ex.id,
        "job_key": ex.job_key,
        "kind": ex.kind,
        "statement": ex.statement,
        "solution": ex.solution,
        "tests": ex.tests,
        "unparsed_tail": ex.unparsed_tail,
    }


def decode_exercise(data: dict) -> GeneratedExercise:
    return GeneratedExercise(
        id=data["id"],
        job_key=data["job_key"],
        kind=data["kind"],
        statement=data.get("statement"),
        solution=data.get("solution"),
        tests=data.get("tests"),
        unparsed_tail=data.get("unparsed_tail"),
    )


def encode_check(check: CheckResult) -> dict:
    return {
        "name": check.name,
        "passed": check.passed,
        "evidence": check.evidence,
        "numeric": check.numeric,
        "skipped": check.skipped,
    }


def decode_check(data: dict) -> CheckResult:
    return CheckResult(
        name=data["name"],
        passed=data["passed"],
        evidence=data.get("evidence", ""),
        numeric=data.get("numeric"),
        skipped=data.get("skipped", False),
    )


def encode_report(report: FilterReport) -> dict:
    return {
        "exercise_id": report.exercise_id,
        "checks": {name: encode_check(c) for name, c in report.checks.items()},
        "verdict": report.verdict,
        "reject_reasons": list(report.reject_reasons),
        "canary": report.canary,
    }


def decode_report(data: dict) -> FilterReport:
    return FilterReport(
        exercise_id=data["exercise_id"],
        checks={name: decode_check(c) for name, c in data["checks"].items()},
        verdict=data["verdict"],
        reject_reasons=tuple(data["reject_reasons"]),
        canary=data.get("canary", False),
    )


def encode_label(label: ReviewLabel) -> dict:
    return {
        "dimension": label.dimension,
        "value": label.value,
        "reviewer": label.reviewer,
        "notes": label.notes,
        "timestamp": _ts(label.timestamp),
    }


def decode_label(data: dict) -> ReviewLabel:
    return ReviewLabel(
        dimension=data["dimension"],
        value=data["value"],
        reviewer=data["reviewer"],
        notes=data.get("notes"),
        timestamp=_parse_ts(data["timestamp"]),
    )


def encode_edit(edit: EditEntry) -> dict:
    return {
        "timestamp": _ts(edit.timestamp),
        "section": edit.section,
        "text": edit.text,
        "reviewer": edit.reviewer,
    }


def decode_edit(data: dict) -> EditEntry:
    return EditEntry(
        timestamp=_parse_ts(data["timestamp"]),
        section=data["section"],
        text=data["text"],
        reviewer=data["reviewer"],
    )


def encode_record(record: ExerciseRecord) -> dict:
    report: Optional[dict] = None
    if record.filter_report is not None:
        report = encode_report(record.filter_report)
    return {
        "exercise": encode_exercise(record.exercise),
        "filter_report": report,
        "labels": [encode_label(l) for l in record.labels],
        "resolved_labels": dict(record.resolved_labels),
        "decision": record.decision,
        "edits": [encode_edit(e) for e in record.edits],
    }


def decode_record(data: dict) -> ExerciseRecord:
    report = data.get("filter_report")
    return ExerciseRecord(
        exercise=decode_exercise(data["exercise"]),
        filter_report=decode_report(report) if report is not None else None,
        labels=tuple(decode_label(l) for l in data["labels"]),
        resolved_labels=dict(data["resolved_labels"]),
        decision=data["decision"],
        edits=tuple(decode_edit(e) for e in data["edits"]),
    )
