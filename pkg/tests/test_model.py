from __future__ import annotations

from datetime import datetime, timezone

import pytest

from exgen import codec
from exgen.model import (
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
    make_job_key,
    validate,
)


def make_exercise(**overrides) -> GeneratedExercise:
    base = dict(
        id="ex-1", job_key="job-1", kind="math",
        statement="How many apples?", solution="1 + 1 = 2",
    )
    base.update(overrides)
    return GeneratedExercise(**base)


def kept_report(exercise_id="ex-1") -> FilterReport:
    return FilterReport(
        exercise_id=exercise_id,
        checks={"has_solution": CheckResult(name="has_solution", passed=True)},
        verdict="kept",
    )


def test_keywords_are_lowercased_at_construction():
    kw = Keywords(theme="Fishing", concepts=("Subtraction", "DIVISION"))
    assert kw.theme == "fishing"
    assert kw.concepts == ("subtraction", "division")


def test_keywords_lines_theme_first():
    kw = Keywords(theme="cars", concepts=("function", "conditional"))
    assert kw.lines() == ["cars", "function", "conditional"]
    assert Keywords(theme=None, concepts=("sum",)).lines() == ["sum"]


def test_keywords_violations_flag_empty_and_newline_tokens():
    assert Keywords(theme="", concepts=()).violations()
    assert Keywords(theme="ok", concepts=("a\nb",)).violations()
    assert Keywords(theme="fishing", concepts=()).violations() == []


def test_priming_invariants():
    good = PrimingExercise(
        id="p", kind="programming", keywords=Keywords(theme="cars"),
        statement="s", solution="sol", tests="t",
    )
    assert good.violations() == []
    math_with_tests = PrimingExercise(
        id="p", kind="math", keywords=Keywords(), statement="s", solution="sol", tests="t",
    )
    assert math_with_tests.violations()
    assert PrimingExercise(
        id="p", kind="math", keywords=Keywords(), statement="", solution="sol",
    ).violations()


def test_job_key_is_deterministic():
    kw = Keywords(theme="music", concepts=("class",))
    a = make_job_key("p", "programming", kw, 0.75, 1024, 1, "m")
    b = make_job_key("p", "programming", kw, 0.75, 1024, 1, "m")
    assert a == b


def test_job_key_changes_with_every_field():
    kw = Keywords(theme="music", concepts=("class",))
    base = make_job_key("p", "programming", kw, 0.75, 1024, 1, "m")
    variants = [
        make_job_key("q", "programming", kw, 0.75, 1024, 1, "m"),
        make_job_key("p", "math", kw, 0.75, 1024, 1, "m"),
        make_job_key("p", "programming", Keywords(theme="books", concepts=("class",)), 0.75, 1024, 1, "m"),
        make_job_key("p", "programming", Keywords(theme="music", concepts=("list",)), 0.75, 1024, 1, "m"),
        make_job_key("p", "programming", kw, 0.0, 1024, 1, "m"),
        make_job_key("p", "programming", kw, 0.75, 512, 1, "m"),
        make_job_key("p", "programming", kw, 0.75, 1024, 2, "m"),
        make_job_key("p", "programming", kw, 0.75, 1024, 1, "other"),
    ]
    assert len({base, *variants}) == len(variants) + 1


def test_job_key_treats_int_and_float_temperature_alike():
    kw = Keywords()
    assert make_job_key("p", "math", kw, 0, 10, 0, "m") == make_job_key("p", "math", kw, 0.0, 10, 0, "m")


def test_validate_well_formed_record():
    record = ExerciseRecord(exercise=make_exercise(), filter_report=kept_report())
    assert validate(record) == []


def test_validate_flags_rejected_report_without_reasons():
    report = FilterReport(exercise_id="ex-1", checks={}, verdict="rejected", reject_reasons=())
    record = ExerciseRecord(exercise=make_exercise(), filter_report=report)
    assert len(validate(record)) == 1


def test_validate_flags_math_exercise_with_tests():
    record = ExerciseRecord(exercise=make_exercise(tests="class T: pass"))
    assert len(validate(record)) == 1


def test_validate_flags_canary_without_correctness_failure():
    report = FilterReport(
        exercise_id="ex-1",
        checks={},
        verdict="rejected",
        reject_reasons=("has_solution",),
        canary=True,
    )
    record = ExerciseRecord(exercise=make_exercise(), filter_report=report)
    assert any("canary" in v for v in validate(record))


def test_failed_check_requires_evidence():
    check = CheckResult(name="tests_pass", passed=False, evidence="")
    assert check.violations()
    assert CheckResult(name="tests_pass", passed=False, evidence="why").violations() == []


def test_maybe_label_without_notes_warns():
    label = ReviewLabel(
        dimension="sensible", value="maybe", reviewer="r1",
        timestamp=datetime.now(timezone.utc),
    )
    assert label.warnings()
    assert label.violations() == []


# ---------------------------------------------------------------------------
# canonical encoding round-trips
# ---------------------------------------------------------------------------

NOW = datetime(2024, 5, 4, 12, 30, 15, 123456, tzinfo=timezone.utc)

ROUND_TRIPS = [
    (codec.encode_keywords, codec.decode_keywords, Keywords(theme="music", concepts=("class", "list"))),
    (codec.encode_keywords, codec.decode_keywords, Keywords()),
    (
        codec.encode_priming,
        codec.decode_priming,
        PrimingExercise(
            id="p", kind="programming", keywords=Keywords(theme="cars"),
            statement="s\nmulti", solution="def f(): pass", tests="class T: pass",
        ),
    ),
    (
        codec.encode_job,
        codec.decode_job,
        GenerationJob.create("p", "math", Keywords(theme="fishing"), 0.75, 1024, 1, "m"),
    ),
    (codec.encode_completion, codec.decode_completion, RawCompletion(job_key="k", text="a\nb\n", finish_reason="length")),
    (codec.encode_exercise, codec.decode_exercise, make_exercise(unparsed_tail="tail")),
    (
        codec.encode_check,
        codec.decode_check,
        CheckResult(name="coverage", passed=False, evidence="0.5 < 1.0", numeric=0.5, skipped=False),
    ),
    (
        codec.encode_report,
        codec.decode_report,
        FilterReport(
            exercise_id="ex-1",
            checks={"coverage": CheckResult(name="coverage", passed=False, evidence="e", numeric=0.25)},
            verdict="rejected",
            reject_reasons=("coverage",),
        ),
    ),
    (
        codec.encode_label,
        codec.decode_label,
        ReviewLabel(dimension="novel", value="maybe", reviewer="r1", notes="unsure", timestamp=NOW),
    ),
    (codec.encode_edit, codec.decode_edit, EditEntry(timestamp=NOW, section="solution", text="x = 1", reviewer="r2")),
    (
        codec.encode_record,
        codec.decode_record,
        ExerciseRecord(
            exercise=make_exercise(),
            filter_report=kept_report(),
            labels=(ReviewLabel(dimension="sensible", value="yes", reviewer="r1", timestamp=NOW),),
            resolved_labels={"sensible": "yes"},
            decision="accepted",
            edits=(EditEntry(timestamp=NOW, section="solution", text="1 + 1 = 2", reviewer="r1"),),
        ),
    ),
]


@pytest.mark.parametrize("encode,decode,value", ROUND_TRIPS, ids=lambda v: getattr(v, "__name__", type(v).__name__))
def test_round_trip_value_and_bytes(encode, decode, value):
    encoded = codec.dumps(encode(value))
    decoded = decode(codec.json.loads(encoded))
    assert decoded == value
    assert codec.dumps(encode(decoded)) == encoded
