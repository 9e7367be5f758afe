from __future__ import annotations

import random
import string

from exgen.model import GeneratedExercise, RawCompletion
from exgen.parsing import parse_completion, section_presence

from conftest import make_job, read_fixture


def parse(text: str, kind: str = "programming") -> GeneratedExercise:
    return parse_completion(RawCompletion(job_key="t", text=text), make_job(kind))


def test_music_library_sections_match_committed_files():
    ex = parse(read_fixture("music_library.txt"))
    assert ex.statement == read_fixture("music_library.statement.txt")
    assert ex.solution == read_fixture("music_library.solution.txt")
    assert ex.tests == read_fixture("music_library.tests.txt")
    assert ex.tests.startswith("class Test(unittest.TestCase):")
    assert ex.unparsed_tail is None


def test_tests_without_solution():
    ex = parse(read_fixture("tests_without_solution.txt"))
    presence = section_presence(ex)
    assert not presence.has_solution
    assert presence.has_tests
    assert presence.has_statement


def test_empty_completion_has_no_sections():
    ex = parse("")
    assert (ex.statement, ex.solution, ex.tests) == (None, None, None)
    presence = section_presence(ex)
    assert (presence.has_statement, presence.has_solution, presence.has_tests) == (False, False, False)


def test_fishing_math_completion():
    ex = parse(read_fixture("fishing.txt"), kind="math")
    assert ex.solution == "(38 - 2) / 4 = 9"
    presence = section_presence(ex)
    assert (presence.has_statement, presence.has_solution, presence.has_tests) == (True, True, False)


def test_math_markers_do_not_recognize_programming_markers():
    text = "statement\n--Sample solution--\ncode"
    ex = parse(text, kind="math")
    assert ex.solution is None
    assert "--Sample solution--" in ex.statement


def test_marker_lines_tolerate_surrounding_whitespace():
    ex = parse("statement\n   --Sample solution--   \ncode")
    assert ex.solution == "code"


def test_marker_matching_is_case_sensitive():
    ex = parse("statement\n--sample solution--\ncode")
    assert ex.solution is None


def test_duplicate_marker_keeps_first_and_records_tail():
    text = "s\n--Sample solution--\nfirst\n--Sample solution--\nsecond"
    ex = parse(text)
    assert ex.solution == "first"
    assert ex.unparsed_tail == "--Sample solution--\nsecond"


def test_follow_up_exercise_header_ends_capture():
    text = 's\n--Sample solution--\ncode\n"""Exercise 3\n--Keywords--\nmore'
    ex = parse(text)
    assert ex.solution == "code"
    assert ex.unparsed_tail.startswith('"""Exercise 3')


def test_sections_in_any_order():
    text = "s\n--Tests--\nt\n--Sample solution--\nsol"
    ex = parse(text)
    assert ex.tests == "t"
    assert ex.solution == "sol"


def test_empty_section_is_present_but_empty():
    ex = parse("s\n--Sample solution--\n\n--Tests--\nt")
    assert ex.solution == ""
    assert section_presence(ex).has_solution


def test_blank_edges_trimmed_interior_preserved():
    text = "s\n--Sample solution--\n\n\nline1\n\nline2  \n\n"
    ex = parse(text)
    assert ex.solution == "line1\n\nline2  "


def test_reassembly_fixpoint():
    ex = parse(read_fixture("music_library.txt"))
    rendered = (
        ex.statement
        + "\n--Sample solution--\n"
        + ex.solution
        + "\n--Tests--\n"
        + ex.tests
    )
    again = parse(rendered)
    assert again == ex


def test_reassembly_fixpoint_randomized():
    rng = random.Random(20240501)
    alphabet = string.ascii_letters + string.digits + " .,:()'\n"
    for _ in range(200):
        sections = []
        for _ in range(3):
            text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(1, 60)))
            lines = [l for l in text.split("\n") if l.strip() and not l.strip().startswith(('"""', "--"))]
            sections.append("\n".join(lines) or "x")
        statement, solution, tests = sections
        rendered = f"{statement}\n--Sample solution--\n{solution}\n--Tests--\n{tests}"
        first = parse(rendered)
        second = parse(
            (first.statement or "")
            + "\n--Sample solution--\n"
            + (first.solution or "")
            + "\n--Tests--\n"
            + (first.tests or "")
        )
        assert second == first


def test_parse_is_total_on_noise():
    rng = random.Random(99)
    alphabet = string.printable
    for _ in range(2000):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 120)))
        for kind in ("programming", "math"):
            ex = parse(text, kind=kind)
            assert ex.violations() == []


def test_presence_flips_only_for_deleted_marker():
    base = read_fixture("music_library.txt")
    lines = base.split("\n")
    without_tests = "\n".join(l for l in lines if l.strip() != "--Tests--")
    ex = parse(without_tests)
    presence = section_presence(ex)
    assert not presence.has_tests
    assert presence.has_statement and presence.has_solution

    without_solution = "\n".join(l for l in lines if l.strip() != "--Sample solution--")
    ex2 = parse(without_solution)
    presence2 = section_presence(ex2)
    assert not presence2.has_solution
    assert presence2.has_statement and presence2.has_tests
