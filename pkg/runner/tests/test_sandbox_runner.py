"""Secondary suite: the real out-of-process runner.

Exercises the sandbox runner through the same SubprocessRunner client the
filter pipeline uses, including the mock/real equivalence check over the
shared fixture corpus.
"""

from __future__ import annotations

import json
import subprocess
import sys
import time
from pathlib import Path

import pytest

from exgen.code_validator import (
    CodeFilterConfig,
    RunnerRequest,
    ScriptedMockRunner,
    SubprocessRunner,
    decode_response,
    validate_code,
)
from exgen.model import GeneratedExercise

REPO_ROOT = Path(__file__).resolve().parent.parent.parent
RUNNER_SCRIPT = REPO_ROOT / "runner" / "sandbox_runner.py"
FIXTURES = REPO_ROOT / "fixtures"

MUSIC_SOLUTION = (FIXTURES / "completions" / "music_library.solution.txt").read_text()
MUSIC_TESTS = (FIXTURES / "completions" / "music_library.tests.txt").read_text()


@pytest.fixture(scope="module")
def runner():
    client = SubprocessRunner([sys.executable, str(RUNNER_SCRIPT)], grace_s=20.0)
    yield client
    client.close()


@pytest.fixture(scope="module")
def code_corpus():
    return json.loads((FIXTURES / "code_corpus" / "corpus.json").read_text(encoding="utf-8"))


def test_music_library_runs_with_full_coverage(runner):
    response = runner.run(
        RunnerRequest(
            request_id="music", solution_code=MUSIC_SOLUTION, test_code=MUSIC_TESTS,
            timeout_ms=10000, analyze_concepts=True,
        )
    )
    assert response.solution_runnable
    assert response.tests_collected == 1
    assert response.tests_passed == 1
    assert response.tests_failed == 0
    assert response.coverage_fraction == 1.0
    assert response.concepts["class"] is True
    assert response.concepts["list"] is True
    assert response.concepts["conditional"] is True
    assert response.concepts["function"] is True


def test_infinite_loop_times_out_at_5s_and_loop_survives(runner):
    started = time.perf_counter()
    response = runner.run(
        RunnerRequest(
            request_id="spin", solution_code="while True:\n  pass", timeout_ms=5000,
        )
    )
    elapsed = time.perf_counter() - started
    assert response.timed_out
    assert not response.solution_runnable
    assert 4.5 <= elapsed < 15.0
    # the protocol loop keeps serving
    follow_up = runner.run(RunnerRequest(request_id="after", solution_code="x = 1"))
    assert follow_up.request_id == "after"
    assert follow_up.solution_runnable


def test_string_concat_is_not_arithmetic(runner):
    response = runner.run(
        RunnerRequest(
            request_id="concat", solution_code='s = "a" + "b"', analyze_concepts=True,
        )
    )
    assert response.concepts["arithmetics"] is False


@pytest.mark.parametrize(
    "code,expected",
    [
        ("n = 1 + 2", True),           # static numerics
        ("def f(x):\n  return x + 1", True),   # one static numeric operand
        ("def f(x, y):\n  return x + y", True),  # undecidable counts as arithmetic
        ("def f(x):\n  return x - 1", True),
        ("m = 'a' * 3", True),         # non-plus operators always count
        ("s = 'a' + 'b'", False),
        ("t = f'{1}' + 'b'", False),   # f-string + literal is still concatenation
    ],
)
def test_arithmetic_concept_rules(runner, code, expected):
    response = runner.run(
        RunnerRequest(request_id="arith", solution_code=code, analyze_concepts=True)
    )
    assert response.concepts["arithmetics"] is expected


def test_impossible_expectation_fails_tests(runner):
    solution = (
        "def evens(items):\n"
        "  out = []\n"
        "  for item in items:\n"
        "    if item % 2 == 0:\n"
        "      out.append(item)\n"
        "  return out"
    )
    tests = (
        "class Test(unittest.TestCase):\n"
        "  def test_evens(self):\n"
        "    self.assertEquals(evens([1, 2, 3]), [2, 4])"
    )
    response = runner.run(
        RunnerRequest(request_id="evens", solution_code=solution, test_code=tests)
    )
    assert response.solution_runnable
    assert response.tests_collected == 1
    assert response.tests_failed == 1


def test_solution_exception_skips_test_phase(runner):
    response = runner.run(
        RunnerRequest(
            request_id="boom",
            solution_code="raise ValueError('broken')",
            test_code="class Test(unittest.TestCase):\n  def test_x(self):\n    pass",
        )
    )
    assert not response.solution_runnable
    assert response.solution_error == "ValueError: broken"
    assert response.tests_collected == 0


def test_solution_calling_exit_does_not_kill_loop(runner):
    response = runner.run(
        RunnerRequest(request_id="exiter", solution_code="import sys\nsys.exit(3)")
    )
    assert not response.solution_runnable
    assert "SystemExit" in response.solution_error
    follow_up = runner.run(RunnerRequest(request_id="still-alive", solution_code="pass"))
    assert follow_up.solution_runnable


def test_solution_prints_do_not_corrupt_protocol(runner):
    response = runner.run(
        RunnerRequest(
            request_id="printer",
            solution_code='print("noise on stdout")\nvalue = 7',
            test_code=(
                "class Test(unittest.TestCase):\n"
                "  def test_value(self):\n"
                "    self.assertEquals(value, 7)"
            ),
        )
    )
    assert response.solution_runnable
    assert response.tests_passed == 1


def test_syntax_error_reported_with_empty_line_sets(runner):
    response = runner.run(
        RunnerRequest(request_id="syntax", solution_code="def broken(:\n  pass")
    )
    assert not response.solution_runnable
    assert "SyntaxError" in response.solution_error
    assert response.executable_lines == ()
    assert response.coverage_fraction is None


def test_executed_lines_subset_of_executable(runner):
    response = runner.run(
        RunnerRequest(
            request_id="subset",
            solution_code="def f(x):\n  if x:\n    return 1\n  return 2",
            test_code=(
                "class Test(unittest.TestCase):\n"
                "  def test_f(self):\n"
                "    self.assertEquals(f(1), 1)"
            ),
        )
    )
    assert set(response.executed_lines) <= set(response.executable_lines)
    assert response.coverage_fraction == 0.75


def test_deterministic_responses(runner):
    request = RunnerRequest(
        request_id="det", solution_code=MUSIC_SOLUTION, test_code=MUSIC_TESTS,
        analyze_concepts=True,
    )
    first = runner.run(request)
    second = runner.run(request)
    assert first == second


def test_malformed_request_line_yields_error_object_and_loop_survives():
    proc = subprocess.Popen(
        [sys.executable, str(RUNNER_SCRIPT)],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1,
    )
    try:
        proc.stdin.write("this is not json\n")
        proc.stdin.flush()
        error = json.loads(proc.stdout.readline())
        assert error["request_id"] is None
        assert "malformed" in error["error"]
        proc.stdin.write(json.dumps({"request_id": "ok", "solution_code": "x = 1"}) + "\n")
        proc.stdin.flush()
        response = json.loads(proc.stdout.readline())
        assert response["request_id"] == "ok"
        assert response["solution_runnable"] is True
    finally:
        proc.stdin.close()
        proc.wait(timeout=10)


def test_exits_cleanly_on_stdin_close():
    proc = subprocess.Popen(
        [sys.executable, str(RUNNER_SCRIPT)],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
    )
    proc.stdin.close()
    assert proc.wait(timeout=10) == 0


# ---------------------------------------------------------------------------
# mock/real FilterReport equivalence over the shared fixture corpus
# ---------------------------------------------------------------------------


def corpus_exercise(entry: dict) -> GeneratedExercise:
    return GeneratedExercise(
        id=entry["id"], job_key="corpus", kind="programming",
        statement=entry["statement"], solution=entry["solution"], tests=entry["tests"],
    )


def test_mock_and_real_reports_are_identical(runner, code_corpus):
    responses = {}
    for entry in code_corpus:
        if entry["mock"] is not None:
            responses[entry["id"]] = decode_response({"request_id": entry["id"], **entry["mock"]})
    mock = ScriptedMockRunner(responses)
    config = CodeFilterConfig(timeout_ms=1000)

    for entry in code_corpus:
        exercise = corpus_exercise(entry)
        mock_report = validate_code(exercise, mock, config)
        real_report = validate_code(exercise, runner, config)
        assert real_report == mock_report, entry["id"]
