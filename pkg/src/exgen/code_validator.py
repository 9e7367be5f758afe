"""Programming-exercise filters on top of a pluggable code runner.

The validator itself never executes exercise code; it hands a
solution/tests pair to a runner backend and interprets the result.  Two
backends exist: a scripted mock (hermetic test suites, CLI dry runs) and
a client for the out-of-process runner speaking the JSON line protocol
below.

Runner protocol: one request object per line on the child's stdin, one
response object per line on its stdout, UTF-8, LF-delimited.  The child
exits when stdin closes and logs to stderr only; any non-JSON stdout
line is a protocol violation.
"""

from __future__ import annotations

import json
import select
import subprocess
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

from .model import KEPT, PROGRAMMING, REJECTED, CheckResult, FilterReport, GeneratedExercise
from .parsing import section_presence

PROGRAMMING_CONCEPTS = (
    "function",
    "parameters",
    "dictionary",
    "arithmetics",
    "class",
    "list",
    "conditional",
)

MAX_TIMEOUT_MS = 60000


class RunnerFailure(Exception):
    """The runner backend itself broke, as opposed to the exercise code."""


class MissingConceptAnalysis(Exception):
    pass


@dataclass(frozen=True)
class RunnerRequest:
    request_id: str
    solution_code: str
    test_code: Optional[str] = None
    timeout_ms: int = 5000
    analyze_concepts: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.timeout_ms <= MAX_TIMEOUT_MS:
            raise ValueError(f"timeout_ms must be in (0, {MAX_TIMEOUT_MS}]")


@dataclass(frozen=True)
class RunnerResponse:
    request_id: str
    solution_runnable: bool
    solution_error: Optional[str] = None
    tests_collected: int = 0
    tests_passed: int = 0
    tests_failed: int = 0
    test_error: Optional[str] = None
    executable_lines: tuple[int, ...] = ()
    executed_lines: tuple[int, ...] = ()
    coverage_fraction: Optional[float] = None
    concepts: dict[str, bool] = field(default_factory=dict)
    timed_out: bool = False

    def violations(self) -> list[str]:
        out = []
        if not set(self.executed_lines) <= set(self.executable_lines):
            out.append("executed_lines must be a subset of executable_lines")
        if self.executable_lines:
            expected = len(set(self.executed_lines)) / len(set(self.executable_lines))
            if self.coverage_fraction is None or abs(self.coverage_fraction - expected) > 1e-9:
                out.append("coverage_fraction inconsistent with line sets")
        elif self.coverage_fraction is not None:
            out.append("coverage_fraction must be absent without executable lines")
        if self.tests_passed + self.tests_failed > self.tests_collected:
            out.append("passed + failed tests exceed collected tests")
        return out


def encode_request(request: RunnerRequest) -> dict:
    return {
        "request_id": request.request_id,
        "solution_code": request.solution_code,
        "test_code": request.test_code,
        "timeout_ms": request.timeout_ms,
        "analyze_concepts": request.analyze_concepts,
    }


def decode_response(data: dict) -> RunnerResponse:
    return RunnerResponse(
        request_id=data["request_id"],
        solution_runnable=data["solution_runnable"],
        solution_error=data.get("solution_error"),
        tests_collected=data.get("tests_collected", 0),
        tests_passed=data.get("tests_passed", 0),
        tests_failed=data.get("tests_failed", 0),
        test_error=data.get("test_error"),
        executable_lines=tuple(data.get("executable_lines", ())),
        executed_lines=tuple(data.get("executed_lines", ())),
        coverage_fraction=data.get("coverage_fraction"),
        concepts=dict(data.get("concepts", {})),
        timed_out=data.get("timed_out", False),
    )


def encode_response(response: RunnerResponse) -> dict:
    return {
        "request_id": response.request_id,
        "solution_runnable": response.solution_runnable,
        "solution_error": response.solution_error,
        "tests_collected": response.tests_collected,
        "tests_passed": response.tests_passed,
        "tests_failed": response.tests_failed,
        "test_error": response.test_error,
        "executable_lines": list(response.executable_lines),
        "executed_lines": list(response.executed_lines),
        "coverage_fraction": response.coverage_fraction,
        "concepts": dict(response.concepts),
        "timed_out": response.timed_out,
    }


class RunnerBackend(Protocol):
    def run(self, request: RunnerRequest) -> RunnerResponse: ...


class ScriptedMockRunner:
    """Returns canned responses keyed by request id; no code is executed."""

    def __init__(
        self,
        responses: Optional[dict[str, RunnerResponse]] = None,
        default: Optional[RunnerResponse] = None,
    ):
        self.responses = dict(responses or {})
        self.default = default
        self.requests_seen: list[RunnerRequest] = []

    @classmethod
    def from_file(cls, path: str) -> "ScriptedMockRunner":
        """Load a script file: {"by_id": {id: response...}, "default": response?}."""
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        responses = {
            request_id: decode_response({"request_id": request_id, **body})
            for request_id, body in data.get("by_id", {}).items()
        }
        default = None
        if data.get("default") is not None:
            default = decode_response({"request_id": "", **data["default"]})
        return cls(responses=responses, default=default)

    def run(self, request: RunnerRequest) -> RunnerResponse:
        self.requests_seen.append(request)
        response = self.responses.get(request.request_id)
        if response is None:
            if self.default is None:
                raise RunnerFailure(f"no scripted response for {request.request_id!r}")
            response = RunnerResponse(
                request_id=request.request_id,
                solution_runnable=self.default.solution_runnable,
                solution_error=self.default.solution_error,
                tests_collected=self.default.tests_collected,
                tests_passed=self.default.tests_passed,
                tests_failed=self.default.tests_failed,
                test_error=self.default.test_error,
                executable_lines=self.default.executable_lines,
                executed_lines=self.default.executed_lines,
                coverage_fraction=self.default.coverage_fraction,
                concepts=self.default.concepts,
                timed_out=self.default.timed_out,
            )
        return response


class SubprocessRunner:
    """Client for a runner child process speaking the JSON line protocol.

    The child enforces the per-request timeout itself; this client only
    adds a grace margin so a hung or crashed child surfaces as a
    RunnerFailure instead of a deadlock.  A dead child is respawned on
    the next request, so one poisoned request does not sink the batch.
    """

    def __init__(self, command: Sequence[str], grace_s: float = 30.0):
        self.command = list(command)
        self.grace_s = grace_s
        self._proc: Optional[subprocess.Popen] = None

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def _read_line(self, proc: subprocess.Popen, timeout_s: float) -> str:
        ready, _, _ = select.select([proc.stdout], [], [], timeout_s)
        if not ready:
            proc.kill()
            raise RunnerFailure(f"runner gave no response within {timeout_s:.0f}s")
        return proc.stdout.readline()

    def run(self, request: RunnerRequest) -> RunnerResponse:
        line = ""
        # one respawn: a child that died after its previous answer is not an error
        for attempt in range(2):
            proc = self._ensure_proc()
            try:
                proc.stdin.write(json.dumps(encode_request(request)) + "\n")
                proc.stdin.flush()
            except (BrokenPipeError, OSError):
                self._proc = None
                continue
            line = self._read_line(proc, request.timeout_ms / 1000.0 + self.grace_s)
            if line:
                break
            self._proc = None
        if not line:
            raise RunnerFailure("runner closed stdout without responding")
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RunnerFailure(f"runner emitted a non-JSON line: {line!r}") from exc
        if data.get("request_id") is None and "error" in data:
            raise RunnerFailure(f"runner rejected the request: {data['error']}")
        response = decode_response(data)
        if response.request_id != request.request_id:
            raise RunnerFailure(
                f"response id {response.request_id!r} does not match request {request.request_id!r}"
            )
        if response.violations():
            raise RunnerFailure(f"protocol violation: {response.violations()}")
        return response

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self._proc = None

    def __enter__(self) -> "SubprocessRunner":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


@dataclass(frozen=True)
class CodeFilterConfig:
    coverage_threshold: float = 1.0
    timeout_ms: int = 5000
    concepts: Optional[tuple[str, ...]] = None
    concept_policy: str = "any"


def _skip(name: str, reason: str) -> CheckResult:
    return CheckResult(name=name, passed=False, evidence=f"skipped: {reason}", skipped=True)


def validate_code(
    exercise: GeneratedExercise,
    runner: RunnerBackend,
    config: CodeFilterConfig = CodeFilterConfig(),
) -> FilterReport:
    """Run the programming filters for one exercise.

    Check order: has_solution, runnable, has_tests, tests_pass, coverage.
    A check whose prerequisite failed is recorded as skipped rather than
    failed, so reject reasons always name the root cause.  A runnable
    solution with tests that do not pass is a canary candidate: the
    sample solution is provably wrong.
    """
    if exercise.kind != PROGRAMMING:
        raise ValueError(f"not a programming exercise: {exercise.id}")

    presence = section_presence(exercise)
    checks: list[CheckResult] = [
        CheckResult(
            name="has_solution",
            passed=presence.has_solution,
            evidence="" if presence.has_solution else "no sample-solution section found",
        )
    ]

    response: Optional[RunnerResponse] = None
    if presence.has_solution:
        response = runner.run(
            RunnerRequest(
                request_id=exercise.id,
                solution_code=exercise.solution or "",
                test_code=exercise.tests,
                timeout_ms=config.timeout_ms,
                analyze_concepts=config.concepts is not None,
            )
        )
        if response.solution_runnable:
            runnable = CheckResult(name="runnable", passed=True)
        else:
            detail = response.solution_error or "execution failed"
            runnable = CheckResult(
                name="runnable", passed=False,
                evidence=f"solution failed to run: {detail}",
            )
        checks.append(runnable)
    else:
        checks.append(_skip("runnable", "no sample solution to run"))

    checks.append(
        CheckResult(
            name="has_tests",
            passed=presence.has_tests,
            evidence="" if presence.has_tests else "no tests section found",
        )
    )

    runnable_ok = response is not None and response.solution_runnable
    if not presence.has_tests:
        checks.append(_skip("tests_pass", "no tests section"))
    elif not runnable_ok:
        checks.append(_skip("tests_pass", "sample solution did not run"))
    else:
        assert response is not None
        passed = (
            response.tests_collected >= 1
            and response.tests_failed == 0
            and response.test_error is None
        )
        evidence = f"{response.tests_passed}/{response.tests_collected} tests passed"
        if response.test_error is not None:
            evidence = f"test code failed to load: {response.test_error}"
        elif response.tests_collected == 0:
            evidence = "no test cases collected"
        checks.append(CheckResult(name="tests_pass", passed=passed, evidence=evidence))

    tests_pass_ok = any(c.name == "tests_pass" and c.passed and not c.skipped for c in checks)
    if not tests_pass_ok:
        checks.append(_skip("coverage", "tests did not pass"))
    else:
        assert response is not None
        coverage = response.coverage_fraction
        if coverage is None:
            checks.append(
                CheckResult(
                    name="coverage", passed=False,
                    evidence="no coverage data (solution has no executable statements)",
                )
            )
        else:
            checks.append(
                CheckResult(
                    name="coverage",
                    passed=coverage >= config.coverage_threshold,
                    evidence=(
                        f"statement coverage {coverage:.4f} "
                        f"(threshold {config.coverage_threshold})"
                    ),
                    numeric=coverage,
                )
            )

    advisory: list[CheckResult] = []
    if config.concepts is not None and response is not None and response.concepts:
        all_check, any_check = detect_programming_concepts(response, config.concepts)
        advisory.extend([all_check, any_check])

    reject_reasons = tuple(c.name for c in checks if not c.passed and not c.skipped)
    verdict = KEPT if not reject_reasons else REJECTED
    canary = (
        presence.has_tests
        and runnable_ok
        and reject_reasons == ("tests_pass",)
    )
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


def detect_programming_concepts(
    response: RunnerResponse, concept_set: Sequence[str]
) -> tuple[CheckResult, CheckResult]:
    """Match the runner's syntax-analysis flags against a priming concept set.

    Returns the (all-matched, any-matched) pair, vacuous passes for an
    empty set.  Raises when the response carries no concept analysis.
    """
    unknown = [c for c in concept_set if c not in PROGRAMMING_CONCEPTS]
    if unknown:
        raise ValueError(f"unknown programming concepts: {unknown}")
    if concept_set and not response.concepts:
        raise MissingConceptAnalysis(
            "runner response has no concept flags; request it with analyze_concepts"
        )
    matched = [c for c in concept_set if response.concepts.get(c, False)]
    missing = [c for c in concept_set if not response.concepts.get(c, False)]
    evidence = f"matched: {', '.join(matched) or 'none'}"
    if missing:
        evidence += f"; missing: {', '.join(missing)}"
    return (
        CheckResult(name="concepts_all", passed=not missing, evidence=evidence),
        CheckResult(name="concepts_any", passed=bool(matched) or not concept_set, evidence=evidence),
    )
