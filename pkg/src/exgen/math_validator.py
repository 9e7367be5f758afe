"""Arithmetic checking for generated math exercises.

Grammar for answer expressions (left-associative, whitespace ignored):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := NUMBER | '(' expr ')' | '-' factor

Numbers are unsigned decimal literals; a currency symbol immediately
before a number is skipped.  On top of the parser sit the two math
filters (answers must add up, statement numbers must reappear in the
answer) and lexical/structural concept detection.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Union

from .model import MATH, CheckResult, FilterReport, GeneratedExercise, KEPT, REJECTED
from .parsing import section_presence

CURRENCY_SYMBOLS = "$€£"

MATH_CONCEPTS = ("sum", "subtraction", "multiplication", "division", "decimal", "conditional")

_NUMBER_RE = re.compile(r"[0-9]+(?:\.[0-9]+)?")
# standalone numbers: not embedded inside an alphanumeric word
_STANDALONE_NUMBER_RE = re.compile(r"(?<![0-9A-Za-z])[0-9]+(?:\.[0-9]+)?(?![0-9A-Za-z])")
_DECIMAL_LEXEME_RE = re.compile(r"(?<![0-9A-Za-z])[0-9]+\.[0-9]+(?![0-9A-Za-z])")
_IF_WORD_RE = re.compile(r"\bif\b", re.IGNORECASE)


class ParseError(Exception):
    def __init__(self, position: int, expected: str):
        self.position = position
        self.expected = expected
        super().__init__(f"expected {expected} at position {position}")


class DivisionByZero(Exception):
    pass


@dataclass(frozen=True)
class Number:
    value: float
    lexeme: str


@dataclass(frozen=True)
class Neg:
    child: "ExprAst"


@dataclass(frozen=True)
class Add:
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Sub:
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Mul:
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Div:
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Paren:
    child: "ExprAst"


ExprAst = Union[Number, Neg, Add, Sub, Mul, Div, Paren]


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> ExprAst:
        ast = self._expr()
        self._skip_ws()
        if self.pos != len(self.text):
            raise ParseError(self.pos, "end of input")
        return ast

    def _expr(self) -> ExprAst:
        node = self._term()
        while True:
            ch = self._peek()
            if ch == "+":
                self.pos += 1
                node = Add(node, self._term())
            elif ch == "-":
                self.pos += 1
                node = Sub(node, self._term())
            else:
                return node

    def _term(self) -> ExprAst:
        node = self._factor()
        while True:
            ch = self._peek()
            if ch == "*":
                self.pos += 1
                node = Mul(node, self._factor())
            elif ch == "/":
                self.pos += 1
                node = Div(node, self._factor())
            else:
                return node

    def _factor(self) -> ExprAst:
        ch = self._peek()
        if ch == "(":
            self.pos += 1
            inner = self._expr()
            if self._peek() != ")":
                raise ParseError(self.pos, "')'")
            self.pos += 1
            return Paren(inner)
        if ch == "-":
            self.pos += 1
            return Neg(self._factor())
        if ch in CURRENCY_SYMBOLS:
            # a currency symbol is only decoration when glued to a number
            if self.pos + 1 < len(self.text) and self.text[self.pos + 1].isdigit():
                self.pos += 1
                ch = self.text[self.pos]
            else:
                raise ParseError(self.pos, "a number after the currency symbol")
        if ch.isdigit():
            match = _NUMBER_RE.match(self.text, self.pos)
            assert match is not None
            self.pos = match.end()
            return Number(value=float(match.group()), lexeme=match.group())
        raise ParseError(self.pos, "a number, '(' or '-'")


def parse_expression(text: str) -> ExprAst:
    return _Parser(text).parse()


def eval_expr(ast: ExprAst) -> float:
    """Standard real arithmetic over the tree; division is real-valued."""
    match ast:
        case Number(value=v):
            return v
        case Neg(child=c):
            return -eval_expr(c)
        case Paren(child=c):
            return eval_expr(c)
        case Add(left=l, right=r):
            return eval_expr(l) + eval_expr(r)
        case Sub(left=l, right=r):
            return eval_expr(l) - eval_expr(r)
        case Mul(left=l, right=r):
            return eval_expr(l) * eval_expr(r)
        case Div(left=l, right=r):
            divisor = eval_expr(r)
            if abs(divisor) <= 1e-12:
                raise DivisionByZero(f"divisor evaluates to {divisor}")
            return eval_expr(l) / divisor
    raise TypeError(f"not an expression node: {ast!r}")


@dataclass(frozen=True)
class AnswerLine:
    lhs: ExprAst
    rhs_value: float
    rhs_lexeme: str
    raw: str


_RHS_RE = re.compile(
    rf"^[\s{re.escape(CURRENCY_SYMBOLS)}]*([0-9]+(?:\.[0-9]+)?)\s*([^\d=]*)$"
)


def _parse_rhs(text: str) -> Optional[float]:
    """A single number, allowing currency decoration and trailing unit words."""
    match = _RHS_RE.match(text.strip())
    if match is None:
        return None
    return float(match.group(1))


def _scan_answer_lines(answer_section: str) -> tuple[list[AnswerLine], list[str]]:
    lines: list[AnswerLine] = []
    skipped: list[str] = []
    for raw_line in answer_section.split("\n"):
        if "=" not in raw_line:
            continue
        lhs_text, _, rhs_text = raw_line.rpartition("=")
        rhs_value = _parse_rhs(rhs_text)
        if rhs_value is None:
            skipped.append(f"line {raw_line.strip()!r} skipped: right side is not a single number")
            continue
        try:
            lhs = parse_expression(lhs_text)
        except ParseError as exc:
            skipped.append(f"line {raw_line.strip()!r} skipped: {exc}")
            continue
        lines.append(
            AnswerLine(
                lhs=lhs,
                rhs_value=rhs_value,
                rhs_lexeme=rhs_text.strip(),
                raw=raw_line,
            )
        )
    return lines, skipped


def extract_answer_lines(answer_section: str) -> list[AnswerLine]:
    """Equations found in an answer section, split at the last '=' per line."""
    return _scan_answer_lines(answer_section)[0]


def fmt_number(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(value)


def check_answer_consistency(answer_section: str) -> CheckResult:
    """Do the stated answers add up?

    Passes when at least one equation was found and every equation's left
    side evaluates to its right side within a scaled tolerance of
    1e-6 * max(1, |rhs|).  The numeric payload is the worst discrepancy.
    """
    lines, skipped = _scan_answer_lines(answer_section)
    if not lines:
        evidence = "no answer equations found"
        if skipped:
            evidence += "; " + "; ".join(skipped)
        return CheckResult(name="answer_consistency", passed=False, evidence=evidence)

    failures: list[str] = []
    worst = 0.0
    for line in lines:
        try:
            actual = eval_expr(line.lhs)
        except DivisionByZero as exc:
            failures.append(f"{line.raw.strip()!r}: {exc}")
            continue
        discrepancy = abs(actual - line.rhs_value)
        worst = max(worst, discrepancy)
        tolerance = 1e-6 * max(1.0, abs(line.rhs_value))
        if discrepancy > tolerance:
            failures.append(
                f"{line.raw.strip()!r}: expected {fmt_number(actual)}, stated {line.rhs_lexeme}"
            )
    if failures:
        evidence = "; ".join(failures + skipped)
        return CheckResult(
            name="answer_consistency", passed=False, evidence=evidence, numeric=worst
        )
    evidence = f"{len(lines)} equation(s) add up"
    if skipped:
        evidence += "; " + "; ".join(skipped)
    return CheckResult(name="answer_consistency", passed=True, evidence=evidence, numeric=worst)


def extract_numbers(text: str) -> Counter:
    """Multiset of standalone numeric literals in the text (38 == 38.0)."""
    return Counter(float(m.group()) for m in _STANDALONE_NUMBER_RE.finditer(text))


STATEMENT_TO_SOLUTION = "statement_to_solution"
SOLUTION_TO_STATEMENT = "solution_to_statement"


def check_number_coverage(
    statement: str,
    answer_section: str,
    direction: str = STATEMENT_TO_SOLUTION,
) -> CheckResult:
    """Does every distinct number on one side reappear on the other?

    Default direction requires statement numbers to show up in the answer
    section; the reverse direction flags answers that invent values.
    Vacuously true when the source side has no numbers.
    """
    statement_numbers = set(extract_numbers(statement))
    answer_numbers = set(extract_numbers(answer_section))
    if direction == STATEMENT_TO_SOLUTION:
        source, target = statement_numbers, answer_numbers
    elif direction == SOLUTION_TO_STATEMENT:
        source, target = answer_numbers, statement_numbers
    else:
        raise ValueError(f"unknown direction: {direction!r}")

    missing = sorted(source - target)
    fraction = 1.0 if not source else (len(source) - len(missing)) / len(source)
    if missing:
        return CheckResult(
            name="number_coverage",
            passed=False,
            evidence="missing numbers: " + ", ".join(fmt_number(v) for v in missing),
            numeric=fraction,
        )
    return CheckResult(
        name="number_coverage",
        passed=True,
        evidence=f"all {len(source)} distinct number(s) covered",
        numeric=fraction,
    )


def _walk(ast: ExprAst):
    yield ast
    match ast:
        case Neg(child=c) | Paren(child=c):
            yield from _walk(c)
        case Add(left=l, right=r) | Sub(left=l, right=r) | Mul(left=l, right=r) | Div(left=l, right=r):
            yield from _walk(l)
            yield from _walk(r)


def detect_math_concepts(
    answer_section: str,
    statement: str,
    concept_set: list[str] | tuple[str, ...],
) -> tuple[CheckResult, CheckResult]:
    """Which priming math concepts show up in the exercise?

    Operator concepts are read off the parsed answer expressions, decimal
    off numeric lexemes anywhere, and conditional off the word "if" in
    the statement.  Returns the (all-matched, any-matched) pair; both are
    vacuous passes for an empty concept set.
    """
    unknown = [c for c in concept_set if c not in MATH_CONCEPTS]
    if unknown:
        raise ValueError(f"unknown math concepts: {unknown}")

    nodes = [node for line in extract_answer_lines(answer_section) for node in _walk(line.lhs)]
    present = {
        "sum": any(isinstance(n, Add) for n in nodes),
        "subtraction": any(isinstance(n, (Sub, Neg)) for n in nodes),
        "multiplication": any(isinstance(n, Mul) for n in nodes),
        "division": any(isinstance(n, Div) for n in nodes),
        "decimal": bool(
            _DECIMAL_LEXEME_RE.search(answer_section) or _DECIMAL_LEXEME_RE.search(statement)
        ),
        "conditional": bool(_IF_WORD_RE.search(statement)),
    }
    matched = [c for c in concept_set if present[c]]
    missing = [c for c in concept_set if not present[c]]
    evidence = f"matched: {', '.join(matched) or 'none'}"
    if missing:
        evidence += f"; missing: {', '.join(missing)}"
    return (
        CheckResult(name="concepts_all", passed=not missing, evidence=evidence),
        CheckResult(
            name="concepts_any",
            passed=bool(matched) or not concept_set,
            evidence=evidence,
        ),
    )


CONCEPT_POLICY_ANY = "any"
CONCEPT_POLICY_ALL = "all"


@dataclass(frozen=True)
class MathFilterConfig:
    check_consistency: bool = True
    check_number_coverage: bool = True
    coverage_direction: str = STATEMENT_TO_SOLUTION
    concepts: Optional[tuple[str, ...]] = None
    concept_policy: str = CONCEPT_POLICY_ANY


def _skip(name: str, reason: str) -> CheckResult:
    return CheckResult(name=name, passed=False, evidence=f"skipped: {reason}", skipped=True)


def filter_math(
    exercise: GeneratedExercise, config: MathFilterConfig = MathFilterConfig()
) -> FilterReport:
    """Run the enabled math checks and give a keep/reject verdict.

    Structural presence gates the content checks: without an answer
    section the arithmetic checks are skipped, not failed.  An exercise
    rejected purely because its answers do not add up is flagged as a
    canary (well-formed, provably wrong sample solution).
    """
    if exercise.kind != MATH:
        raise ValueError(f"not a math exercise: {exercise.id}")

    presence = section_presence(exercise)
    checks: list[CheckResult] = [
        CheckResult(
            name="has_statement",
            passed=presence.has_statement,
            evidence="" if presence.has_statement else "no problem statement found",
        ),
        CheckResult(
            name="has_solution",
            passed=presence.has_solution,
            evidence="" if presence.has_solution else "no answer section found",
        ),
    ]
    statement = exercise.statement or ""
    answer = exercise.solution or ""

    advisory: list[CheckResult] = []
    if config.check_consistency:
        if presence.has_solution:
            checks.append(check_answer_consistency(answer))
        else:
            checks.append(_skip("answer_consistency", "no answer section"))
    if config.check_number_coverage:
        if presence.has_solution and presence.has_statement:
            checks.append(check_number_coverage(statement, answer, config.coverage_direction))
        else:
            checks.append(_skip("number_coverage", "statement or answer section missing"))
    if config.concepts is not None:
        if presence.has_solution:
            all_check, any_check = detect_math_concepts(answer, statement, config.concepts)
            if config.concept_policy == CONCEPT_POLICY_ALL:
                checks.append(all_check)
                advisory.append(any_check)
            else:
                checks.append(any_check)
                advisory.append(all_check)
        else:
            name = "concepts_all" if config.concept_policy == CONCEPT_POLICY_ALL else "concepts_any"
            checks.append(_skip(name, "no answer section"))

    reject_reasons = tuple(c.name for c in checks if not c.passed and not c.skipped)
    verdict = KEPT if not reject_reasons else REJECTED
    canary = reject_reasons == ("answer_consistency",)
    all_checks = {c.name: c for c in checks}
    for extra in advisory:
        all_checks.setdefault(extra.name, extra)
    return FilterReport(
        exercise_id=exercise.id,
        checks=all_checks,
        verdict=verdict,
        reject_reasons=reject_reasons,
        canary=canary,
    )
