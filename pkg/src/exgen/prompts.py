"""Render priming exercises into completion prompts and build job grids.

The prompt layout is fixed and byte-stable: golden fixtures pin it, so
any change here is a deliberate format break.  LF line endings
throughout, no trailing whitespace, sections joined with exactly one
newline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .model import MATH, PROGRAMMING, GenerationJob, Keywords, PrimingExercise

STOP_SEQUENCE = '"""'

KEYWORDS_MARKER = "--Keywords--"
STATEMENT_MARKER = "--Problem statement--"
SOLUTION_MARKER = "--Sample solution--"
TESTS_MARKER = "--Tests--"
ANSWER_MARKER = "--Answer--"


class MissingTests(Exception):
    """A programming priming was supplied without a tests section."""


@dataclass(frozen=True)
class PromptText:
    text: str
    stop_sequences: tuple[str, ...] = (STOP_SEQUENCE,)


def build_prompt(priming: PrimingExercise, target: Keywords) -> PromptText:
    """Render one priming exercise plus target keywords into a prompt.

    Layout: the full priming exercise under ``Exercise 1`` (keywords,
    statement, then solution/tests for programming or answer for math),
    then an ``Exercise 2`` header with the target keywords, ending right
    after the problem-statement marker where generation is meant to
    start.  Content is embedded verbatim; nothing is escaped.
    """
    if priming.kind == PROGRAMMING and priming.tests is None:
        raise MissingTests(f"programming priming {priming.id!r} has no tests")

    lines: list[str] = [f'{STOP_SEQUENCE}Exercise 1', KEYWORDS_MARKER]
    lines.extend(priming.keywords.lines())
    lines.append(STATEMENT_MARKER)
    lines.append(priming.statement)
    if priming.kind == PROGRAMMING:
        lines.append(SOLUTION_MARKER)
        lines.append(priming.solution)
        lines.append(TESTS_MARKER)
        lines.append(priming.tests or "")
    else:
        lines.append(ANSWER_MARKER)
        lines.append(priming.solution)
    lines.append(f'{STOP_SEQUENCE}Exercise 2')
    lines.append(KEYWORDS_MARKER)
    lines.extend(target.lines())
    lines.append(STATEMENT_MARKER)
    return PromptText(text="\n".join(lines) + "\n")


def combination_grid(
    primings: Sequence[PrimingExercise],
    themes: Sequence[Optional[str]],
    concept_sets: Sequence[Sequence[str]],
    temperatures: Sequence[float],
    reps: int,
    max_tokens: int = 1024,
    model_name: str = "code-davinci-002",
) -> list[GenerationJob]:
    """Cartesian product of the grid axes, in nested-loop argument order.

    Yields |primings| * |themes| * |concept_sets| * |temperatures| * reps
    jobs with pairwise-distinct, run-stable job keys.
    """
    if not primings or not themes or not concept_sets or not temperatures:
        raise ValueError("every grid axis must be non-empty")
    if reps < 1:
        raise ValueError("reps must be a positive integer")

    jobs = []
    for priming in primings:
        for theme in themes:
            for concepts in concept_sets:
                for temperature in temperatures:
                    for rep in range(reps):
                        jobs.append(
                            GenerationJob.create(
                                priming_id=priming.id,
                                kind=priming.kind,
                                target_keywords=Keywords(
                                    theme=theme, concepts=tuple(concepts)
                                ),
                                temperature=float(temperature),
                                max_tokens=max_tokens,
                                repetition_index=rep,
                                model_name=model_name,
                            )
                        )
    return jobs
