from __future__ import annotations

import json
from pathlib import Path

import pytest

from exgen import codec
from exgen.model import GenerationJob, Keywords, RawCompletion

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def primings() -> dict:
    out = {}
    for path in (FIXTURES / "primings").glob("*.json"):
        priming = codec.decode_priming(json.loads(path.read_text(encoding="utf-8")))
        out[priming.id] = priming
    return out


@pytest.fixture(scope="session")
def code_corpus() -> list[dict]:
    return json.loads((FIXTURES / "code_corpus" / "corpus.json").read_text(encoding="utf-8"))


def read_fixture(name: str) -> str:
    return (FIXTURES / "completions" / name).read_text(encoding="utf-8")


def make_job(kind: str, theme: str | None = None, rep: int = 0) -> GenerationJob:
    return GenerationJob.create(
        priming_id="test-priming",
        kind=kind,
        target_keywords=Keywords(theme=theme),
        temperature=0.0,
        max_tokens=256,
        repetition_index=rep,
        model_name="test-model",
    )


def completion_of(name: str, kind: str, job_key: str = "fixture-job") -> RawCompletion:
    return RawCompletion(job_key=job_key, text=read_fixture(name))
