"""HTTP JSON API over the curation store.

Thin routing layer: all state changes go through CurationStore, all
bodies are canonical JSON.  Errors map to 404 (record not found),
409 (already decided / duplicate), and 422 (validation) with a
``{"error", "detail"}`` body.  Responses carry permissive CORS headers
so a statically served review UI can talk to the API from any origin.
"""

from __future__ import annotations

import json
import re
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from . import codec
from .curation import (
    AlreadyDecided,
    CurationStore,
    DuplicateExercise,
    NotInConsensusState,
    RecordNotFound,
    TooFewReviewers,
    ValidationError,
    summarize,
)
from .model import PrimingExercise, ReviewLabel
from .prompts import combination_grid


class CurationService:
    """Store plus the request handlers the HTTP layer dispatches to."""

    def __init__(
        self,
        store: CurationStore,
        primings: Optional[dict[str, PrimingExercise]] = None,
    ):
        self.store = store
        self.primings = dict(primings or {})
        self.enqueued_jobs = []
        self._jobs_lock = threading.Lock()

    # each handler returns (status, body-dict)

    def list_exercises(self, status: Optional[str], kind: Optional[str], limit: Optional[int]):
        records = self.store.list_records(status=status, kind=kind, limit=limit)
        return 200, {
            "exercises": [
                {**codec.encode_record(r), "status": self.store.status_of(r)} for r in records
            ]
        }

    def get_exercise(self, record_id: str):
        record = self.store.get(record_id)
        return 200, {**codec.encode_record(record), "status": self.store.status_of(record)}

    def ingest(self, body: dict):
        exercise = codec.decode_exercise(body["exercise"])
        report = codec.decode_report(body["filter_report"])
        record_id = self.store.ingest(exercise, report)
        return 201, {"id": record_id}

    def add_label(self, record_id: str, body: dict):
        label = ReviewLabel(
            dimension=body["dimension"],
            value=body["value"],
            reviewer=body["reviewer"],
            notes=body.get("notes"),
            timestamp=datetime.now(timezone.utc),
        )
        record = self.store.add_label(record_id, label)
        return 200, {
            **codec.encode_record(record),
            "status": self.store.status_of(record),
            "warnings": label.warnings(),
        }

    def resolve_consensus(self, record_id: str, body: dict):
        record = self.store.resolve_consensus(
            record_id, body["dimension"], body["value"], list(body["reviewers"])
        )
        return 200, {**codec.encode_record(record), "status": self.store.status_of(record)}

    def decide(self, record_id: str, body: dict):
        edits = [(e["section"], e["text"]) for e in body.get("edits") or []]
        record = self.store.decide(record_id, body["action"], body["reviewer"], edits)
        return 200, {**codec.encode_record(record), "status": self.store.status_of(record)}

    def enqueue_jobs(self, body: dict):
        priming = self.primings.get(body["priming_id"])
        if priming is None:
            raise ValidationError(f"unknown priming: {body['priming_id']!r}")
        temperature = float(body["temperature"])
        if not 0.0 <= temperature <= 2.0:
            raise ValidationError("temperature must be in [0, 2]")
        count = int(body.get("count", 1))
        if count < 1:
            raise ValidationError("count must be positive")
        theme = body.get("theme") or None
        jobs = combination_grid(
            primings=[priming],
            themes=[theme],
            concept_sets=[list(body.get("concept_set", []))],
            temperatures=[temperature],
            reps=count,
        )
        with self._jobs_lock:
            self.enqueued_jobs.extend(jobs)
        return 201, {"jobs": [codec.encode_job(job) for job in jobs]}

    def report_summary(self, kind: str):
        summary = summarize(self.store.list_records(), kind=kind)
        return 200, summary.encode()


_ROUTES = [
    ("GET", re.compile(r"^/api/exercises$"), "route_list"),
    ("GET", re.compile(r"^/api/exercises/([^/]+)$"), "route_get"),
    ("POST", re.compile(r"^/api/exercises$"), "route_ingest"),
    ("POST", re.compile(r"^/api/exercises/([^/]+)/labels$"), "route_labels"),
    ("POST", re.compile(r"^/api/exercises/([^/]+)/consensus$"), "route_consensus"),
    ("POST", re.compile(r"^/api/exercises/([^/]+)/decision$"), "route_decision"),
    ("POST", re.compile(r"^/api/jobs$"), "route_jobs"),
    ("GET", re.compile(r"^/api/reports/summary$"), "route_summary"),
]

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
}


def make_handler(service: CurationService, static_dir: Optional[Path] = None):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # silence per-request stderr noise
            pass

        def _send(self, status: int, body: dict) -> None:
            data = codec.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.end_headers()
            self.wfile.write(data)

        def _error(self, status: int, error: str, detail: str) -> None:
            self._send(status, {"error": error, "detail": detail})

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b"{}"
            data = json.loads(raw.decode("utf-8"))
            if not isinstance(data, dict):
                raise ValidationError("request body must be a JSON object")
            return data

        def _dispatch(self, method: str) -> None:
            parsed = urlparse(self.path)
            query = parse_qs(parsed.query)
            try:
                for route_method, pattern, name in _ROUTES:
                    if route_method != method:
                        continue
                    match = pattern.match(parsed.path)
                    if match:
                        getattr(self, name)(match, query)
                        return
                if method == "GET" and static_dir is not None:
                    self._static(parsed.path)
                    return
                self._error(404, "NotFound", f"no route for {method} {parsed.path}")
            except RecordNotFound as exc:
                self._error(404, "RecordNotFound", str(exc))
            except (AlreadyDecided, DuplicateExercise) as exc:
                self._error(409, type(exc).__name__, str(exc))
            except (NotInConsensusState, TooFewReviewers, ValidationError) as exc:
                self._error(422, type(exc).__name__, str(exc))
            except (KeyError, TypeError, ValueError) as exc:
                self._error(422, "ValidationError", f"bad request body: {exc}")

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Content-Length", "0")
            self.end_headers()

        # route handlers -------------------------------------------------

        def route_list(self, match, query):
            limit = query.get("limit", [None])[0]
            status, body = service.list_exercises(
                status=query.get("status", [None])[0],
                kind=query.get("kind", [None])[0],
                limit=int(limit) if limit is not None else None,
            )
            self._send(status, body)

        def route_get(self, match, query):
            status, body = service.get_exercise(match.group(1))
            self._send(status, body)

        def route_ingest(self, match, query):
            status, body = service.ingest(self._body())
            self._send(status, body)

        def route_labels(self, match, query):
            status, body = service.add_label(match.group(1), self._body())
            self._send(status, body)

        def route_consensus(self, match, query):
            status, body = service.resolve_consensus(match.group(1), self._body())
            self._send(status, body)

        def route_decision(self, match, query):
            status, body = service.decide(match.group(1), self._body())
            self._send(status, body)

        def route_jobs(self, match, query):
            status, body = service.enqueue_jobs(self._body())
            self._send(status, body)

        def route_summary(self, match, query):
            status, body = service.report_summary(query.get("kind", ["programming"])[0])
            self._send(status, body)

        def _static(self, path: str) -> None:
            name = path.lstrip("/") or "index.html"
            target = (static_dir / name).resolve()
            if not str(target).startswith(str(static_dir.resolve())) or not target.is_file():
                self._error(404, "NotFound", path)
                return
            data = target.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type", _STATIC_TYPES.get(target.suffix, "application/octet-stream")
            )
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

    return Handler


def make_server(
    service: CurationService,
    host: str = "127.0.0.1",
    port: int = 8080,
    static_dir: Optional[str] = None,
) -> ThreadingHTTPServer:
    handler = make_handler(service, Path(static_dir) if static_dir else None)
    return ThreadingHTTPServer((host, port), handler)
