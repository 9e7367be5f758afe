#!/usr/bin/env python3
"""Out-of-process runner for untrusted exercise code.

Protocol: one JSON request per line on stdin, one JSON response per line
on stdout, UTF-8, LF-delimited; the process exits when stdin closes and
logs to stderr only.  Request fields: request_id, solution_code,
test_code, timeout_ms, analyze_concepts.

Each request is executed in a fresh child process of this process, so a
solution that raises, loops forever, or calls exit never corrupts the
protocol loop: the parent kills the child at the deadline and keeps
serving.  This is a robustness boundary, not a security boundary; the
child runs with the caller's privileges and no network or filesystem
lockdown.

What a request does, in order: the solution module is executed in a
fresh namespace pre-seeded with the unit-test framework (generated tests
routinely start at ``class Test(unittest.TestCase):`` with no import,
and use the deprecated ``assertEquals`` alias, which is kept working);
the test module is executed in the same namespace and every test case it
defines is run; statement coverage of the solution is collected by
execution tracing across both phases; concept flags come from a
syntax-tree analysis of the solution.
"""

import ast
import contextlib
import io
import json
import os
import subprocess
import sys
import unittest

_SELF = os.path.abspath(__file__)

DEFAULT_TIMEOUT_MS = 5000
SOLUTION_FILENAME = "<solution>"
TESTS_FILENAME = "<tests>"

CONCEPT_NAMES = (
    "function",
    "parameters",
    "dictionary",
    "arithmetics",
    "class",
    "list",
    "conditional",
)


def log(message):
    print(message, file=sys.stderr, flush=True)


def executable_lines(tree):
    """Linenos of every statement node: the coverable lines of a module."""
    return sorted({node.lineno for node in ast.walk(tree) if isinstance(node, ast.stmt)})


def _is_static_numeric(node):
    if isinstance(node, ast.Constant):
        return isinstance(node.value, (int, float, complex)) and not isinstance(node.value, bool)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        return _is_static_numeric(node.operand)
    return False


def _is_static_string(node):
    if isinstance(node, ast.Constant):
        return isinstance(node.value, str)
    return isinstance(node, ast.JoinedStr)


_PLAIN_ARITH_OPS = (ast.Sub, ast.Mult, ast.Div, ast.FloorDiv, ast.Mod)


def _is_arithmetic(node):
    if isinstance(node, (ast.BinOp, ast.AugAssign)):
        op = node.op
        if isinstance(op, _PLAIN_ARITH_OPS):
            return True
        if isinstance(op, ast.Add):
            if isinstance(node, ast.AugAssign):
                # target type is unknown statically; only the value side can veto
                return not _is_static_string(node.value)
            left, right = node.left, node.right
            if _is_static_numeric(left) or _is_static_numeric(right):
                return True
            if _is_static_string(left) and _is_static_string(right):
                return False
            # undecidable operand types count as arithmetic
            return True
    return False


def analyze_concepts(tree):
    """Concept flags from the solution's syntax tree.

    The ``+`` operator only counts as arithmetic when it is not provably
    string concatenation (two string literals); everything statically
    numeric or undecidable counts.
    """
    flags = {name: False for name in CONCEPT_NAMES}
    for node in ast.walk(tree):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.Lambda)):
            flags["function"] = True
            args = node.args
            if (
                args.posonlyargs or args.args or args.vararg
                or args.kwonlyargs or args.kwarg
            ):
                flags["parameters"] = True
        if isinstance(node, ast.ClassDef):
            flags["class"] = True
        if isinstance(node, (ast.If, ast.IfExp)):
            flags["conditional"] = True
        if isinstance(node, (ast.List, ast.ListComp, ast.Subscript)):
            flags["list"] = True
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Attribute)
            and node.func.attr == "append"
        ):
            flags["list"] = True
        if isinstance(node, (ast.Dict, ast.DictComp)):
            flags["dictionary"] = True
        if _is_arithmetic(node):
            flags["arithmetics"] = True
    return flags


class _SolutionTracer:
    """Records linenos executed inside the solution module."""

    def __init__(self):
        self.lines = set()

    def __call__(self, frame, event, arg):
        if frame.f_code.co_filename == SOLUTION_FILENAME:
            self.lines.add(frame.f_lineno)
            return self._local
        return None

    def _local(self, frame, event, arg):
        if event == "line":
            self.lines.add(frame.f_lineno)
        return self._local


def _collect_test_cases(namespace, known_names):
    cases = []
    for name, value in sorted(namespace.items()):
        if name in known_names:
            continue
        if isinstance(value, type) and issubclass(value, unittest.TestCase):
            cases.append(value)
    return cases


def execute_request(request):
    """Run one request in this process; used inside the sandbox child."""
    request_id = request.get("request_id")
    solution_code = request.get("solution_code") or ""
    test_code = request.get("test_code")
    analyze = bool(request.get("analyze_concepts"))

    response = {
        "request_id": request_id,
        "solution_runnable": False,
        "solution_error": None,
        "tests_collected": 0,
        "tests_passed": 0,
        "tests_failed": 0,
        "test_error": None,
        "executable_lines": [],
        "executed_lines": [],
        "coverage_fraction": None,
        "concepts": {},
        "timed_out": False,
    }

    if not hasattr(unittest.TestCase, "assertEquals"):
        unittest.TestCase.assertEquals = unittest.TestCase.assertEqual

    try:
        tree = ast.parse(solution_code, filename=SOLUTION_FILENAME)
    except SyntaxError as exc:
        response["solution_error"] = f"{type(exc).__name__}: {exc}"
        return response

    response["executable_lines"] = executable_lines(tree)
    if analyze:
        response["concepts"] = analyze_concepts(tree)

    namespace = {"__name__": "__solution__", "unittest": unittest}
    tracer = _SolutionTracer()
    swallowed = io.StringIO()

    compiled = compile(tree, SOLUTION_FILENAME, "exec")
    sys.settrace(tracer)
    try:
        with contextlib.redirect_stdout(swallowed):
            exec(compiled, namespace)
        response["solution_runnable"] = True
    except BaseException as exc:  # noqa: BLE001 - exercise code may raise anything
        response["solution_error"] = f"{type(exc).__name__}: {exc}"
    finally:
        sys.settrace(None)

    if response["solution_runnable"] and test_code:
        known = set(namespace)
        sys.settrace(tracer)
        try:
            with contextlib.redirect_stdout(swallowed):
                exec(compile(test_code, TESTS_FILENAME, "exec"), namespace)
        except BaseException as exc:
            response["test_error"] = f"{type(exc).__name__}: {exc}"
        finally:
            sys.settrace(None)

        if response["test_error"] is None:
            suite = unittest.TestSuite()
            loader = unittest.TestLoader()
            for case in _collect_test_cases(namespace, known):
                suite.addTests(loader.loadTestsFromTestCase(case))
            result = unittest.TestResult()
            sys.settrace(tracer)
            try:
                with contextlib.redirect_stdout(swallowed):
                    suite.run(result)
            finally:
                sys.settrace(None)
            response["tests_collected"] = result.testsRun
            response["tests_failed"] = len(result.failures) + len(result.errors)
            response["tests_passed"] = result.testsRun - response["tests_failed"]

    executable = set(response["executable_lines"])
    executed = sorted(tracer.lines & executable)
    response["executed_lines"] = executed
    if executable:
        response["coverage_fraction"] = len(executed) / len(executable)
    return response


def _timed_out_response(request_id, timeout_ms):
    return {
        "request_id": request_id,
        "solution_runnable": False,
        "solution_error": f"timed out after {timeout_ms}ms",
        "tests_collected": 0,
        "tests_passed": 0,
        "tests_failed": 0,
        "test_error": None,
        "executable_lines": [],
        "executed_lines": [],
        "coverage_fraction": None,
        "concepts": {},
        "timed_out": True,
    }


def _crashed_response(request_id, detail):
    response = _timed_out_response(request_id, 0)
    response["timed_out"] = False
    response["solution_error"] = f"runner child crashed: {detail}"
    return response


def run_in_child(request):
    """Execute one request in a fresh child process with a hard deadline."""
    timeout_ms = int(request.get("timeout_ms") or DEFAULT_TIMEOUT_MS)
    request_id = request.get("request_id")
    try:
        proc = subprocess.run(
            [sys.executable, _SELF, "--exec"],
            input=json.dumps(request),
            capture_output=True,
            text=True,
            timeout=timeout_ms / 1000.0,
        )
    except subprocess.TimeoutExpired:
        return _timed_out_response(request_id, timeout_ms)
    if proc.stderr:
        sys.stderr.write(proc.stderr)
    lines = [line for line in proc.stdout.splitlines() if line.strip()]
    if not lines:
        return _crashed_response(request_id, f"no result (exit code {proc.returncode})")
    try:
        return json.loads(lines[-1])
    except json.JSONDecodeError as exc:
        return _crashed_response(request_id, f"unparseable result: {exc}")


def serve():
    """Protocol loop: requests in on stdin, responses out on stdout."""
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request must be a JSON object")
        except ValueError as exc:
            print(json.dumps({"request_id": None, "error": f"malformed request: {exc}"}), flush=True)
            continue
        response = run_in_child(request)
        print(json.dumps(response), flush=True)


def main():
    if "--exec" in sys.argv[1:]:
        request = json.loads(sys.stdin.read())
        response = execute_request(request)
        # the real stdout: exercise prints were captured inside execute_request
        print(json.dumps(response), flush=True)
    else:
        serve()


if __name__ == "__main__":
    main()
