from __future__ import annotations

import threading

import pytest
import requests

from exgen import codec
from exgen.curation import CurationStore
from exgen.model import CheckResult, FilterReport, GeneratedExercise
from exgen.service import CurationService, make_server

from conftest import FIXTURES

import json


@pytest.fixture
def api(tmp_path):
    """A live service on an ephemeral port, torn down after the test."""
    primings = {}
    for path in (FIXTURES / "primings").glob("*.json"):
        priming = codec.decode_priming(json.loads(path.read_text()))
        primings[priming.id] = priming
    store = CurationStore(tmp_path / "events.jsonl")
    service = CurationService(store, primings=primings)
    server = make_server(service, port=0)
    thread = threading.Thread(target=lambda: server.serve_forever(poll_interval=0.05), daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_port}"
    yield base
    server.shutdown()
    server.server_close()


def exercise_body(idx: int = 1, kind: str = "math", verdict: str = "kept", canary: bool = False):
    exercise = GeneratedExercise(
        id=f"ex-{idx}", job_key=f"job-{idx}", kind=kind,
        statement="How many?", solution="1 + 1 = 2",
    )
    report = FilterReport(
        exercise_id=exercise.id,
        checks={"answer_consistency": CheckResult(name="answer_consistency", passed=verdict == "kept", evidence="e")},
        verdict=verdict,
        reject_reasons=("answer_consistency",) if verdict == "rejected" else (),
        canary=canary,
    )
    return {"exercise": codec.encode_exercise(exercise), "filter_report": codec.encode_report(report)}


def ingest(base: str, **kwargs) -> str:
    response = requests.post(f"{base}/api/exercises", json=exercise_body(**kwargs))
    assert response.status_code == 201, response.text
    return response.json()["id"]


def test_ingest_and_list_by_status(api):
    ingest(api, idx=1)
    ingest(api, idx=2, verdict="rejected", canary=True)
    pending = requests.get(f"{api}/api/exercises", params={"status": "pending"}).json()
    assert [e["exercise"]["id"] for e in pending["exercises"]] == ["ex-1"]
    canary = requests.get(f"{api}/api/exercises", params={"status": "canary"}).json()
    assert [e["exercise"]["id"] for e in canary["exercises"]] == ["ex-2"]


def test_list_filters_kind_and_limit(api):
    ingest(api, idx=1, kind="math")
    ingest(api, idx=2, kind="programming")
    ingest(api, idx=3, kind="programming")
    out = requests.get(f"{api}/api/exercises", params={"kind": "programming", "limit": 1}).json()
    assert len(out["exercises"]) == 1
    assert out["exercises"][0]["exercise"]["kind"] == "programming"


def test_get_full_record_with_evidence(api):
    ingest(api, idx=1)
    record = requests.get(f"{api}/api/exercises/ex-1").json()
    assert record["exercise"]["id"] == "ex-1"
    assert record["filter_report"]["checks"]["answer_consistency"]["evidence"] == "e"
    assert record["status"] == "pending"


def test_get_missing_record_404(api):
    response = requests.get(f"{api}/api/exercises/nothing")
    assert response.status_code == 404
    assert response.json()["error"] == "RecordNotFound"


def test_duplicate_ingest_409(api):
    ingest(api, idx=1)
    response = requests.post(f"{api}/api/exercises", json=exercise_body(idx=1))
    assert response.status_code == 409
    assert response.json()["error"] == "DuplicateExercise"


def test_label_consensus_decide_flow(api):
    ingest(api, idx=1)
    response = requests.post(
        f"{api}/api/exercises/ex-1/labels",
        json={"dimension": "sensible", "value": "maybe", "reviewer": "r1", "notes": "odd"},
    )
    assert response.status_code == 200
    response = requests.post(
        f"{api}/api/exercises/ex-1/consensus",
        json={"dimension": "sensible", "value": "yes", "reviewers": ["r1", "r2"]},
    )
    assert response.status_code == 200
    assert response.json()["resolved_labels"] == {"sensible": "yes"}
    response = requests.post(
        f"{api}/api/exercises/ex-1/decision",
        json={
            "action": "accept",
            "reviewer": "r1",
            "edits": [{"section": "solution", "text": "1 + 1 = 2"}],
        },
    )
    assert response.status_code == 200
    body = response.json()
    assert body["decision"] == "accepted"
    assert len(body["edits"]) == 1


def test_decide_twice_conflicts(api):
    ingest(api, idx=1)
    requests.post(f"{api}/api/exercises/ex-1/decision", json={"action": "reject", "reviewer": "r"})
    response = requests.post(
        f"{api}/api/exercises/ex-1/decision", json={"action": "accept", "reviewer": "r"}
    )
    assert response.status_code == 409
    assert response.json()["error"] == "AlreadyDecided"


def test_consensus_validation_422(api):
    ingest(api, idx=1)
    response = requests.post(
        f"{api}/api/exercises/ex-1/consensus",
        json={"dimension": "sensible", "value": "yes", "reviewers": ["only-one"]},
    )
    assert response.status_code == 422
    assert response.json()["error"] == "TooFewReviewers"


def test_label_validation_422(api):
    ingest(api, idx=1)
    response = requests.post(
        f"{api}/api/exercises/ex-1/labels",
        json={"dimension": "bogus", "value": "yes", "reviewer": "r"},
    )
    assert response.status_code == 422


def test_enqueue_jobs(api):
    response = requests.post(
        f"{api}/api/jobs",
        json={
            "priming_id": "speeding",
            "theme": "music",
            "concept_set": ["class", "list", "conditional"],
            "temperature": 0.75,
            "count": 3,
        },
    )
    assert response.status_code == 201
    jobs = response.json()["jobs"]
    assert len(jobs) == 3
    assert len({j["job_key"] for j in jobs}) == 3
    assert jobs[0]["kind"] == "programming"
    assert jobs[0]["target_keywords"]["theme"] == "music"


def test_enqueue_jobs_unknown_priming_422(api):
    response = requests.post(
        f"{api}/api/jobs",
        json={"priming_id": "nope", "theme": None, "concept_set": [], "temperature": 0, "count": 1},
    )
    assert response.status_code == 422


def test_enqueue_jobs_blank_theme_allowed(api):
    response = requests.post(
        f"{api}/api/jobs",
        json={"priming_id": "donuts", "theme": "", "concept_set": ["sum"], "temperature": 0, "count": 1},
    )
    assert response.status_code == 201
    assert response.json()["jobs"][0]["target_keywords"]["theme"] is None


def test_report_summary_endpoint(api):
    exercise = GeneratedExercise(
        id="p-1", job_key="job-p", kind="programming",
        statement="s", solution="def f(): pass", tests="class T(unittest.TestCase): pass",
    )
    checks = {
        "has_solution": CheckResult(name="has_solution", passed=True),
        "runnable": CheckResult(name="runnable", passed=True),
        "has_tests": CheckResult(name="has_tests", passed=True),
        "tests_pass": CheckResult(name="tests_pass", passed=True),
        "coverage": CheckResult(name="coverage", passed=True, numeric=1.0),
    }
    report = FilterReport(exercise_id="p-1", checks=checks, verdict="kept")
    requests.post(
        f"{api}/api/exercises",
        json={"exercise": codec.encode_exercise(exercise), "filter_report": codec.encode_report(report)},
    )
    summary = requests.get(f"{api}/api/reports/summary", params={"kind": "programming"}).json()
    assert summary["metrics"]["has_solution"]["numerator"] == 1
    assert summary["metrics"]["has_solution"]["percentage"] == 100.0


def test_malformed_body_422(api):
    response = requests.post(f"{api}/api/exercises/ex-1/labels", json={"value": "yes"})
    assert response.status_code in (404, 422)  # missing dimension key -> validation
    response = requests.post(f"{api}/api/jobs", json={"priming_id": "speeding"})
    assert response.status_code == 422


def test_unknown_route_404(api):
    assert requests.get(f"{api}/api/bogus").status_code == 404
