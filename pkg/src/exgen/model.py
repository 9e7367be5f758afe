"""Domain types shared by the whole pipeline.

Pure value types: no I/O, no behaviour beyond invariant checking.  All
mutation in the system happens by constructing new instances, so every
type here is safe to share across threads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional

MATH = "math"
PROGRAMMING = "programming"
EXERCISE_KINDS = (MATH, PROGRAMMING)

KEPT = "kept"
REJECTED = "rejected"

PENDING = "pending"
ACCEPTED = "accepted"
# decision "rejected" reuses REJECTED

LABEL_DIMENSIONS = (
    "sensible",
    "novel",
    "answer_matches",
    "theme_match",
    "concepts_match_all",
    "concepts_match_any",
)
LABEL_VALUES = ("yes", "no", "maybe")

# Checks whose failure marks the sample solution as provably wrong; only
# these may produce a canary flag (a structurally broken exercise is just
# broken, not a plagiarism trap).
SOLUTION_CORRECTNESS_CHECKS = ("answer_consistency", "tests_pass")


@dataclass(frozen=True)
class Keywords:
    """Theme and concept tokens used to steer generation.

    Tokens are lowercased at construction so matching against detector
    output is stable.  The theme is optional and the concept list may be
    empty (both leave-one-out grid variants are legal).
    """

    theme: Optional[str] = None
    concepts: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        theme = self.theme.lower() if self.theme is not None else None
        object.__setattr__(self, "theme", theme)
        object.__setattr__(self, "concepts", tuple(c.lower() for c in self.concepts))

    def lines(self) -> list[str]:
        """Keyword lines in prompt order: theme first, then concepts."""
        out = [] if self.theme is None else [self.theme]
        out.extend(self.concepts)
        return out

    def violations(self) -> list[str]:
        out = []
        for token in self.lines():
            if not token:
                out.append("keyword token is empty")
            elif "\n" in token:
                out.append(f"keyword token contains a newline: {token!r}")
        return out


@dataclass(frozen=True)
class PrimingExercise:
    """The human-provided exemplar used to prime generation."""

    id: str
    kind: str
    keywords: Keywords
    statement: str
    solution: str
    tests: Optional[str] = None

    def violations(self) -> list[str]:
        out = self.keywords.violations()
        if self.kind not in EXERCISE_KINDS:
            out.append(f"unknown exercise kind: {self.kind!r}")
        if not self.statement:
            out.append("priming statement is empty")
        if not self.solution:
            out.append("priming solution is empty")
        if self.kind == MATH and self.tests is not None:
            out.append("math priming must not carry tests")
        return out


def make_job_key(
    priming_id: str,
    kind: str,
    target_keywords: Keywords,
    temperature: float,
    max_tokens: int,
    repetition_index: int,
    model_name: str,
) -> str:
    """Deterministic key for one grid point and repetition.

    A pure function of all job fields: equal fields give equal keys on
    any platform, and changing any single field changes the key.
    """
    payload = json.dumps(
        {
            "priming_id": priming_id,
            "kind": kind,
            "theme": target_keywords.theme,
            "concepts": list(target_keywords.concepts),
            "temperature": float(temperature),
            "max_tokens": max_tokens,
            "repetition_index": repetition_index,
            "model_name": model_name,
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class GenerationJob:
    """One point in the (priming x theme x concepts x temperature x rep) grid."""

    job_key: str
    priming_id: str
    kind: str
    target_keywords: Keywords
    temperature: float
    max_tokens: int
    repetition_index: int
    model_name: str

    @classmethod
    def create(
        cls,
        priming_id: str,
        kind: str,
        target_keywords: Keywords,
        temperature: float,
        max_tokens: int,
        repetition_index: int,
        model_name: str,
    ) -> "GenerationJob":
        return cls(
            job_key=make_job_key(
                priming_id, kind, target_keywords, temperature,
                max_tokens, repetition_index, model_name,
            ),
            priming_id=priming_id,
            kind=kind,
            target_keywords=target_keywords,
            temperature=float(temperature),
            max_tokens=max_tokens,
            repetition_index=repetition_index,
            model_name=model_name,
        )

    def violations(self) -> list[str]:
        out = self.target_keywords.violations()
        if not 0.0 <= self.temperature <= 2.0:
            out.append(f"temperature {self.temperature} outside [0, 2]")
        if self.max_tokens <= 0:
            out.append("max_tokens must be positive")
        if self.repetition_index < 0:
            out.append("repetition_index must be non-negative")
        expected = make_job_key(
            self.priming_id, self.kind, self.target_keywords,
            self.temperature, self.max_tokens, self.repetition_index,
            self.model_name,
        )
        if self.job_key != expected:
            out.append("job_key does not match job fields")
        return out


FINISH_REASONS = ("stop", "length", "other")


@dataclass(frozen=True)
class RawCompletion:
    """Verbatim model output for one job; stored byte-exact."""

    job_key: str
    text: str
    finish_reason: str = "stop"


@dataclass(frozen=True)
class GeneratedExercise:
    """Parsed sections of one completion.

    A section is present exactly when its double-dash marker was found
    (the statement is implicit: text before the first marker).  Absence
    is recorded as None, never synthesized away.
    """

    id: str
    job_key: str
    kind: str
    statement: Optional[str] = None
    solution: Optional[str] = None
    tests: Optional[str] = None
    unparsed_tail: Optional[str] = None

    def violations(self) -> list[str]:
        out = []
        if self.kind not in EXERCISE_KINDS:
            out.append(f"unknown exercise kind: {self.kind!r}")
        if self.kind == MATH and self.tests is not None:
            out.append("math exercise must not carry a tests section")
        return out


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one automatic check.

    ``skipped`` marks checks whose prerequisite failed; they count as not
    run rather than failed.  Evidence must explain any non-pass.
    """

    name: str
    passed: bool
    evidence: str = ""
    numeric: Optional[float] = None
    skipped: bool = False

    def violations(self) -> list[str]:
        if not self.passed and not self.evidence:
            return [f"check {self.name!r} failed without evidence"]
        return []


@dataclass(frozen=True)
class FilterReport:
    """Combined verdict of all automatic checks for one exercise."""

    exercise_id: str
    checks: dict[str, CheckResult]
    verdict: str
    reject_reasons: tuple[str, ...] = ()
    canary: bool = False

    def violations(self) -> list[str]:
        out = []
        if self.verdict not in (KEPT, REJECTED):
            out.append(f"unknown verdict: {self.verdict!r}")
        if (self.verdict == REJECTED) != bool(self.reject_reasons):
            out.append("verdict=rejected must coincide with non-empty reject_reasons")
        if self.canary:
            if self.verdict != REJECTED:
                out.append("canary reports must be rejected")
            if not any(r in SOLUTION_CORRECTNESS_CHECKS for r in self.reject_reasons):
                out.append("canary requires a failed solution-correctness check")
        for check in self.checks.values():
            out.extend(check.violations())
        return out


@dataclass(frozen=True)
class ReviewLabel:
    """A single yes/no/maybe judgement on one review dimension."""

    dimension: str
    value: str
    reviewer: str
    timestamp: datetime
    notes: Optional[str] = None

    def violations(self) -> list[str]:
        out = []
        if self.dimension not in LABEL_DIMENSIONS:
            out.append(f"unknown label dimension: {self.dimension!r}")
        if self.value not in LABEL_VALUES:
            out.append(f"unknown label value: {self.value!r}")
        return out

    def warnings(self) -> list[str]:
        if self.value == "maybe" and not self.notes:
            return [f"maybe label on {self.dimension!r} should carry notes"]
        return []


@dataclass(frozen=True)
class EditEntry:
    """One curator rewrite of an exercise section."""

    timestamp: datetime
    section: str
    text: str
    reviewer: str


@dataclass(frozen=True)
class ExerciseRecord:
    """Persisted exercise plus its filter report and review history."""

    exercise: GeneratedExercise
    filter_report: Optional[FilterReport] = None
    labels: tuple[ReviewLabel, ...] = ()
    resolved_labels: dict[str, str] = field(default_factory=dict)
    decision: str = PENDING
    edits: tuple[EditEntry, ...] = ()

    def needs_consensus(self) -> list[str]:
        """Dimensions with a maybe label and no resolution yet."""
        out = []
        for label in self.labels:
            if label.value == "maybe" and label.dimension not in self.resolved_labels:
                if label.dimension not in out:
                    out.append(label.dimension)
        return out

    def violations(self) -> list[str]:
        out = self.exercise.violations()
        if self.filter_report is not None:
            out.extend(self.filter_report.violations())
            if self.filter_report.exercise_id != self.exercise.id:
                out.append("filter report belongs to a different exercise")
        labeled = {label.dimension for label in self.labels}
        for label in self.labels:
            out.extend(label.violations())
        for dim, value in self.resolved_labels.items():
            if value not in ("yes", "no"):
                out.append(f"resolved label for {dim!r} must be yes or no")
            if dim not in labeled:
                out.append(f"resolved label for {dim!r} without any label")
        if self.decision not in (PENDING, ACCEPTED, REJECTED):
            out.append(f"unknown decision: {self.decision!r}")
        return out


def validate(record: ExerciseRecord) -> list[str]:
    """All invariant violations of a record; empty list when well formed."""
    return record.violations()
