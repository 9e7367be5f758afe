"""Split raw completions into exercise sections.

The prompt ends at the problem-statement marker, so the model continues
mid-section: everything before the first recognized marker is the
statement.  Marker matching is exact-text, case-sensitive, whole-line
(surrounding whitespace ignored).  Parsing is total: any byte string
yields an exercise, possibly with every section absent.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import MATH, GeneratedExercise, GenerationJob, RawCompletion
from .prompts import ANSWER_MARKER, SOLUTION_MARKER, STOP_SEQUENCE, TESTS_MARKER

# Section markers recognized per exercise kind.  The math answer block is
# stored in the solution field.
_PROGRAMMING_MARKERS = {SOLUTION_MARKER: "solution", TESTS_MARKER: "tests"}
_MATH_MARKERS = {ANSWER_MARKER: "solution"}

_EXERCISE_HEADER = f"{STOP_SEQUENCE}Exercise"


@dataclass(frozen=True)
class SectionPresence:
    has_statement: bool
    has_solution: bool
    has_tests: bool


def _trim_blank_edges(lines: list[str]) -> str:
    start = 0
    end = len(lines)
    while start < end and not lines[start].strip():
        start += 1
    while end > start and not lines[end - 1].strip():
        end -= 1
    return "\n".join(lines[start:end])


def parse_completion(raw: RawCompletion, job: GenerationJob) -> GeneratedExercise:
    """Cut one completion into statement/solution/tests sections.

    First occurrence of a marker wins; a duplicate marker diverts the
    remainder into ``unparsed_tail`` for curator inspection, as does a
    follow-up exercise header.  Section bodies keep their interior bytes;
    only leading and trailing blank lines are trimmed.
    """
    markers = _MATH_MARKERS if job.kind == MATH else _PROGRAMMING_MARKERS

    buckets: dict[str, list[str]] = {"statement": [], "solution": [], "tests": []}
    tail: list[str] = []
    assigned = {"statement"}
    current = "statement"
    in_tail = False

    for line in raw.text.split("\n"):
        if in_tail:
            tail.append(line)
            continue
        stripped = line.strip()
        if stripped.startswith(_EXERCISE_HEADER):
            in_tail = True
            tail.append(line)
            continue
        if stripped in markers:
            section = markers[stripped]
            if section not in assigned:
                assigned.add(section)
                current = section
            else:
                in_tail = True
                tail.append(line)
            continue
        buckets[current].append(line)

    # Statement presence is content-driven; the other sections are
    # present exactly when their marker was sighted, even if empty.
    statement = _trim_blank_edges(buckets["statement"]) or None
    solution = _trim_blank_edges(buckets["solution"]) if "solution" in assigned else None
    tests = _trim_blank_edges(buckets["tests"]) if "tests" in assigned else None

    return GeneratedExercise(
        id=f"ex-{raw.job_key}",
        job_key=raw.job_key,
        kind=job.kind,
        statement=statement,
        solution=solution,
        tests=tests,
        unparsed_tail="\n".join(tail) if tail else None,
    )


def section_presence(ex: GeneratedExercise) -> SectionPresence:
    """Presence flags per section; the statement must be non-empty after trim."""
    return SectionPresence(
        has_statement=ex.statement is not None and bool(ex.statement.strip()),
        has_solution=ex.solution is not None,
        has_tests=ex.tests is not None,
    )
