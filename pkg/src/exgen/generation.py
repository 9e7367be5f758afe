"""Execute generation jobs against a pluggable completion backend.

Two backends: a replay backend that serves recorded completions from a
JSONL fixture corpus (the deterministic, test-friendly default) and a
live HTTP backend for a completions API.  Completions are truncated at
the first stop sequence either way.
"""

from __future__ import annotations

import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence

import requests

from .codec import decode_completion
from .model import FINISH_REASONS, GenerationJob, RawCompletion
from .prompts import STOP_SEQUENCE, PromptText


class BackendUnavailable(Exception):
    pass


class FixtureMissing(Exception):
    pass


class RateLimited(Exception):
    pass


class CompletionBackend(Protocol):
    def complete(self, job: GenerationJob) -> RawCompletion: ...


@dataclass(frozen=True)
class CompletionBackendConfig:
    """Backend selection plus the knobs shared by both implementations."""

    backend: str = "replay"
    endpoint_url: Optional[str] = None
    api_key_env_var: Optional[str] = None
    fixtures_path: Optional[str] = None
    request_timeout: float = 30.0
    max_parallel_jobs: int = 1

    def violations(self) -> list[str]:
        out = []
        if self.backend not in ("replay", "live"):
            out.append(f"unknown backend: {self.backend!r}")
        if self.backend == "live" and not (self.endpoint_url and self.api_key_env_var):
            out.append("live backend needs endpoint_url and api_key_env_var")
        if self.backend == "replay" and not self.fixtures_path:
            out.append("replay backend needs fixtures_path")
        if self.max_parallel_jobs < 1:
            out.append("max_parallel_jobs must be positive")
        return out


def _truncate_at_stop(text: str) -> str:
    cut = text.find(STOP_SEQUENCE)
    return text if cut < 0 else text[:cut]


def _normalize_finish_reason(reason: object) -> str:
    return reason if reason in FINISH_REASONS else "other"


class ReplayBackend:
    """Serves completions recorded as one JSON object per line, keyed by job."""

    def __init__(self, fixtures_path: str | Path):
        self._by_key: dict[str, RawCompletion] = {}
        with open(fixtures_path, encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                completion = decode_completion(json.loads(line))
                self._by_key[completion.job_key] = completion

    def __len__(self) -> int:
        return len(self._by_key)

    def complete(self, job: GenerationJob) -> RawCompletion:
        try:
            recorded = self._by_key[job.job_key]
        except KeyError:
            raise FixtureMissing(f"no recorded completion for job {job.job_key}") from None
        return recorded


RETRYABLE_STATUS = {429} | set(range(500, 600))


class LiveBackend:
    """HTTP client for a completions endpoint.

    One POST per attempt with the standard completion body; retries (3
    attempts, exponential backoff from 1s) apply only to transport
    errors and 429/5xx responses.  The API key is read from the
    environment at request time, never stored in config files.
    """

    def __init__(
        self,
        endpoint_url: str,
        api_key_env_var: str,
        prompt_provider: Callable[[GenerationJob], PromptText],
        request_timeout: float = 30.0,
        max_attempts: int = 3,
        backoff_start: float = 1.0,
        session: Optional[requests.Session] = None,
        sleep: Optional[Callable[[float], None]] = None,
    ):
        self.endpoint_url = endpoint_url
        self.api_key_env_var = api_key_env_var
        self.prompt_provider = prompt_provider
        self.request_timeout = request_timeout
        self.max_attempts = max_attempts
        self.backoff_start = backoff_start
        self.session = session or requests.Session()
        self.sleep = sleep or time.sleep

    def complete(self, job: GenerationJob) -> RawCompletion:
        api_key = os.environ.get(self.api_key_env_var)
        if not api_key:
            raise BackendUnavailable(
                f"API key environment variable {self.api_key_env_var!r} is not set"
            )
        prompt = self.prompt_provider(job)
        body = {
            "model": job.model_name,
            "prompt": prompt.text,
            "temperature": job.temperature,
            "max_tokens": job.max_tokens,
            "stop": list(prompt.stop_sequences),
            "n": 1,
        }
        headers = {"Authorization": f"Bearer {api_key}"}

        last_error = "no attempts made"
        rate_limited = False
        for attempt in range(self.max_attempts):
            if attempt:
                self.sleep(self.backoff_start * 2 ** (attempt - 1))
            try:
                response = self.session.post(
                    self.endpoint_url, json=body, headers=headers,
                    timeout=self.request_timeout,
                )
            except requests.RequestException as exc:
                last_error = f"transport error: {exc}"
                continue
            if response.status_code == 429:
                rate_limited = True
                last_error = "rate limited (HTTP 429)"
                retry_after = response.headers.get("Retry-After")
                if retry_after is not None:
                    try:
                        self.sleep(float(retry_after))
                    except ValueError:
                        pass
                continue
            if response.status_code in RETRYABLE_STATUS:
                last_error = f"HTTP {response.status_code}"
                continue
            if response.status_code != 200:
                raise BackendUnavailable(f"HTTP {response.status_code}: {response.text[:200]}")
            try:
                choice = response.json()["choices"][0]
                text = choice["text"]
                finish_reason = choice["finish_reason"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendUnavailable(f"malformed completion response: {exc}") from exc
            return RawCompletion(
                job_key=job.job_key,
                text=text,
                finish_reason=_normalize_finish_reason(finish_reason),
            )
        if rate_limited:
            raise RateLimited(f"gave up after {self.max_attempts} attempts: {last_error}")
        raise BackendUnavailable(f"gave up after {self.max_attempts} attempts: {last_error}")


def generate(job: GenerationJob, backend: CompletionBackend) -> RawCompletion:
    """Run one job; the completion text is cut at the first stop sequence."""
    completion = backend.complete(job)
    return RawCompletion(
        job_key=completion.job_key,
        text=_truncate_at_stop(completion.text),
        finish_reason=_normalize_finish_reason(completion.finish_reason),
    )


@dataclass
class BatchSummary:
    succeeded: int = 0
    failed: dict[str, str] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.succeeded + len(self.failed)


def generate_batch(
    jobs: Sequence[GenerationJob],
    backend: CompletionBackend,
    sink: Callable[[RawCompletion], None],
    max_parallel_jobs: int = 1,
) -> BatchSummary:
    """Attempt every job exactly once, appending results to the sink.

    Per-job failures land in the summary instead of raising; sink appends
    are serialized so the sink never sees interleaved writes, though
    their order may differ from job order when running in parallel.
    """
    keys = [job.job_key for job in jobs]
    if len(set(keys)) != len(keys):
        raise ValueError("jobs must have distinct job_keys")

    summary = BatchSummary()
    lock = threading.Lock()

    def run_one(job: GenerationJob) -> None:
        try:
            completion = generate(job, backend)
        except Exception as exc:
            with lock:
                summary.failed[job.job_key] = f"{type(exc).__name__}: {exc}"
            return
        with lock:
            sink(completion)
            summary.succeeded += 1

    if max_parallel_jobs <= 1 or len(jobs) <= 1:
        for job in jobs:
            run_one(job)
    else:
        with ThreadPoolExecutor(max_workers=max_parallel_jobs) as pool:
            list(pool.map(run_one, jobs))
    return summary
