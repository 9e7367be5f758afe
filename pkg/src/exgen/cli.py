"""Command-line pipeline: generate -> filter -> analyze, plus serve/export.

All intermediate artifacts are JSONL so stages compose through files:
``generate`` writes raw completions, ``filter`` turns them into
exercise/report pairs, ``analyze`` aggregates reports, ``serve`` runs
the review API over an event log, and ``export`` emits the curated
exercise database.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import click
import requests

from . import codec
from .code_validator import (
    CodeFilterConfig,
    RunnerFailure,
    ScriptedMockRunner,
    SubprocessRunner,
    validate_code,
)
from .curation import CurationStore, summarize_reports
from .generation import LiveBackend, ReplayBackend, generate_batch
from .math_validator import MathFilterConfig, filter_math
from .model import (
    KEPT,
    MATH,
    PROGRAMMING,
    REJECTED,
    CheckResult,
    FilterReport,
    GenerationJob,
    Keywords,
    RawCompletion,
)
from .novelty import check_novelty
from .parsing import parse_completion
from .prompts import build_prompt, combination_grid
from .service import CurationService, make_server

METRIC_ORDER = (
    "has_solution",
    "runnable",
    "has_tests",
    "tests_pass",
    "full_coverage",
    "mean_coverage_over_passing",
)


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def load_primings(primings_dir: Path) -> dict:
    primings = {}
    for path in sorted(primings_dir.glob("*.json")):
        priming = codec.decode_priming(json.loads(path.read_text(encoding="utf-8")))
        primings[priming.id] = priming
    return primings


def _read_jsonl(path: Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                out.append(json.loads(line))
    return out


def _write_jsonl(path: Path, items: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for item in items:
            handle.write(codec.dumps(item) + "\n")


@click.group()
def main() -> None:
    """Exercise generation, filtering, and curation pipeline."""


@main.command("generate")
@click.argument("config_file", type=click.Path(path_type=Path))
@click.option("--mode", type=click.Choice(["replay", "live"]), default="replay", show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("out"), show_default=True)
@click.option("--primings-dir", type=click.Path(path_type=Path), default=Path("fixtures/primings"), show_default=True)
@click.option("--fixtures", type=click.Path(path_type=Path), default=None,
              help="Replay corpus JSONL (overrides the config).")
def cmd_generate(config_file: Path, mode: str, out_dir: Path, primings_dir: Path, fixtures: Optional[Path]) -> None:
    """Run the whole generation grid from CONFIG_FILE against a backend."""
    try:
        config = json.loads(config_file.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        _fail(2, f"cannot read config: {exc}")

    try:
        primings_by_id = load_primings(primings_dir)
        primings = [primings_by_id[pid] for pid in config["primings"]]
    except KeyError as exc:
        _fail(2, f"config names an unknown priming: {exc}")
    except OSError as exc:
        _fail(2, f"cannot read primings: {exc}")

    try:
        jobs = combination_grid(
            primings=primings,
            themes=config["themes"],
            concept_sets=config["concept_sets"],
            temperatures=config["temperatures"],
            reps=config.get("repetitions", 1),
            max_tokens=config.get("max_tokens", 1024),
            model_name=config.get("model_name", "code-davinci-002"),
        )
    except (KeyError, ValueError, TypeError) as exc:
        _fail(2, f"bad generation config: {exc}")

    if mode == "replay":
        fixtures_path = fixtures or config.get("fixtures")
        if not fixtures_path:
            _fail(2, "replay mode needs a fixtures path (config key 'fixtures' or --fixtures)")
        try:
            backend = ReplayBackend(fixtures_path)
        except OSError as exc:
            _fail(2, f"cannot read fixtures: {exc}")
    else:
        endpoint_url = config.get("endpoint_url")
        api_key_env_var = config.get("api_key_env_var")
        if not endpoint_url or not api_key_env_var:
            _fail(2, "live mode needs endpoint_url and api_key_env_var in the config")
        backend = LiveBackend(
            endpoint_url=endpoint_url,
            api_key_env_var=api_key_env_var,
            prompt_provider=lambda job: build_prompt(
                primings_by_id[job.priming_id], job.target_keywords
            ),
            request_timeout=config.get("request_timeout", 30.0),
        )

    completions: dict[str, RawCompletion] = {}
    summary = generate_batch(
        jobs,
        backend,
        sink=lambda c: completions.__setitem__(c.job_key, c),
        max_parallel_jobs=config.get("max_parallel_jobs", 1),
    )

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_jsonl(out_dir / "jobs.jsonl", [codec.encode_job(j) for j in jobs])
    _write_jsonl(
        out_dir / "completions.jsonl",
        [codec.encode_completion(completions[j.job_key]) for j in jobs if j.job_key in completions],
    )

    click.echo(f"jobs={summary.total} succeeded={summary.succeeded} failed={len(summary.failed)}")
    for job_key, reason in sorted(summary.failed.items()):
        click.echo(f"failed {job_key}: {reason}", err=True)
    sys.exit(0 if not summary.failed else 1)


def _shim_job(kind: str) -> GenerationJob:
    """Stand-in job when no jobs.jsonl is available; only the kind matters."""
    return GenerationJob.create(
        priming_id="unknown",
        kind=kind,
        target_keywords=Keywords(),
        temperature=0.0,
        max_tokens=1,
        repetition_index=0,
        model_name="unknown",
    )


def _apply_novelty(report: FilterReport, check: CheckResult) -> FilterReport:
    checks = dict(report.checks)
    checks[check.name] = check
    reasons = report.reject_reasons + ((check.name,) if not check.passed else ())
    return replace(
        report,
        checks=checks,
        reject_reasons=reasons,
        verdict=KEPT if not reasons else REJECTED,
        canary=report.canary and check.passed,
    )


@main.command("filter")
@click.argument("completions_file", type=click.Path(exists=True, path_type=Path))
@click.option("--kind", type=click.Choice([MATH, PROGRAMMING]), required=True)
@click.option("--jobs", "jobs_file", type=click.Path(path_type=Path), default=None,
              help="jobs.jsonl from the generate step; defaults to a sibling of the completions file.")
@click.option("--out", "out_file", type=click.Path(path_type=Path), default=None,
              help="Output JSONL of {exercise, filter_report} pairs.")
@click.option("--runner", type=click.Choice(["mock", "subprocess"]), default="mock", show_default=True)
@click.option("--runner-script", type=click.Path(path_type=Path), default=None,
              help="Scripted responses for the mock runner (JSON with by_id/default).")
@click.option("--runner-cmd", default=None, help="Command line that starts the out-of-process runner.")
@click.option("--coverage-threshold", type=float, default=1.0, show_default=True)
@click.option("--timeout-ms", type=int, default=5000, show_default=True)
@click.option("--consistency/--no-consistency", default=True, show_default=True)
@click.option("--number-coverage/--no-number-coverage", default=True, show_default=True)
@click.option("--number-direction", type=click.Choice(["statement_to_solution", "solution_to_statement"]),
              default="statement_to_solution", show_default=True)
@click.option("--concepts", default=None, help="Comma-separated priming concepts to detect.")
@click.option("--concept-policy", type=click.Choice(["any", "all"]), default="any", show_default=True)
@click.option("--novelty-corpus", type=click.Path(exists=True, path_type=Path), default=None,
              help="Reference corpus JSONL ({id, statement}) for the novelty filter.")
@click.option("--novelty-threshold", type=float, default=0.5, show_default=True)
@click.option("--ingest", "ingest_url", default=None, help="Base URL of a running curation service.")
def cmd_filter(
    completions_file: Path,
    kind: str,
    jobs_file: Optional[Path],
    out_file: Optional[Path],
    runner: str,
    runner_script: Optional[Path],
    runner_cmd: Optional[str],
    coverage_threshold: float,
    timeout_ms: int,
    consistency: bool,
    number_coverage: bool,
    number_direction: str,
    concepts: Optional[str],
    concept_policy: str,
    novelty_corpus: Optional[Path],
    novelty_threshold: float,
    ingest_url: Optional[str],
) -> None:
    """Parse completions and run the automatic filters for KIND."""
    concept_tuple = tuple(c.strip() for c in concepts.split(",")) if concepts else None

    jobs_by_key: dict[str, GenerationJob] = {}
    if jobs_file is None:
        sibling = completions_file.parent / "jobs.jsonl"
        jobs_file = sibling if sibling.exists() else None
    if jobs_file is not None:
        jobs_by_key = {j["job_key"]: codec.decode_job(j) for j in _read_jsonl(jobs_file)}

    runner_backend = None
    if kind == PROGRAMMING:
        if runner == "mock":
            if runner_script is not None:
                runner_backend = ScriptedMockRunner.from_file(str(runner_script))
            else:
                runner_backend = ScriptedMockRunner()
        else:
            if not runner_cmd:
                _fail(2, "--runner subprocess needs --runner-cmd")
            runner_backend = SubprocessRunner(runner_cmd.split())

    corpus = None
    if novelty_corpus is not None:
        corpus = [(row["id"], row["statement"]) for row in _read_jsonl(novelty_corpus)]

    math_config = MathFilterConfig(
        check_consistency=consistency,
        check_number_coverage=number_coverage,
        coverage_direction=number_direction,
        concepts=concept_tuple,
        concept_policy=concept_policy,
    )
    code_config = CodeFilterConfig(
        coverage_threshold=coverage_threshold,
        timeout_ms=timeout_ms,
        concepts=concept_tuple,
        concept_policy=concept_policy,
    )

    rows = []
    kept = 0
    try:
        for data in _read_jsonl(completions_file):
            completion = codec.decode_completion(data)
            job = jobs_by_key.get(completion.job_key) or _shim_job(kind)
            if job.kind != kind:
                continue
            exercise = parse_completion(completion, job)
            if kind == MATH:
                report = filter_math(exercise, math_config)
            else:
                report = validate_code(exercise, runner_backend, code_config)
            if corpus is not None:
                result = check_novelty(exercise.statement or "", corpus, threshold=novelty_threshold)
                check = CheckResult(
                    name="novelty",
                    passed=result.novel,
                    evidence=(
                        f"similarity {result.similarity:.3f}"
                        + (f" to {result.best_match_id}" if result.best_match_id else "")
                    ),
                    numeric=result.similarity,
                )
                report = _apply_novelty(report, check)
            kept += report.verdict == KEPT
            rows.append(
                {"exercise": codec.encode_exercise(exercise), "filter_report": codec.encode_report(report)}
            )
    except RunnerFailure as exc:
        _fail(1, f"runner failure: {exc}")
    finally:
        if isinstance(runner_backend, SubprocessRunner):
            runner_backend.close()

    out_file = out_file or completions_file.with_name("reports.jsonl")
    _write_jsonl(out_file, rows)
    click.echo(f"filtered={len(rows)} kept={kept} rejected={len(rows) - kept}")

    if ingest_url:
        failures = 0
        for row in rows:
            response = requests.post(f"{ingest_url.rstrip('/')}/api/exercises", json=row, timeout=30)
            if response.status_code not in (200, 201):
                failures += 1
                click.echo(
                    f"ingest failed for {row['exercise']['id']}: HTTP {response.status_code}", err=True
                )
        if failures:
            sys.exit(1)


@main.command("analyze")
@click.argument("reports_file", type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_file", type=click.Path(path_type=Path), default=None,
              help="Where to write the summary JSON.")
def cmd_analyze(reports_file: Path, out_file: Optional[Path]) -> None:
    """Aggregate filter reports into the programmatic-analysis table."""
    reports = []
    for data in _read_jsonl(reports_file):
        body = data.get("filter_report", data)
        reports.append(codec.decode_report(body))
    summary = summarize_reports(reports)

    width = max(len(name) for name in METRIC_ORDER)
    for name in METRIC_ORDER:
        row = summary.metrics[name]
        pct = "n/a " if row.percentage is None else f"{row.percentage:.1f}%"
        click.echo(f"{name:<{width}}  {pct:>7}  {row.ratio_text()}")

    if out_file is not None:
        out_file.write_text(codec.dumps(summary.encode()) + "\n", encoding="utf-8")


@main.command("serve")
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--log", "log_path", type=click.Path(path_type=Path), default=Path("events.jsonl"), show_default=True)
@click.option("--primings-dir", type=click.Path(path_type=Path), default=Path("fixtures/primings"), show_default=True)
@click.option("--static", "static_dir", type=click.Path(path_type=Path), default=None,
              help="Directory with the built review UI to serve at /.")
def cmd_serve(port: int, host: str, log_path: Path, primings_dir: Path, static_dir: Optional[Path]) -> None:
    """Run the curation HTTP service until interrupted."""
    primings = load_primings(primings_dir) if primings_dir.is_dir() else {}
    service = CurationService(CurationStore(log_path), primings=primings)
    try:
        server = make_server(service, host=host, port=port,
                             static_dir=str(static_dir) if static_dir else None)
    except OSError as exc:
        _fail(1, f"cannot bind {host}:{port}: {exc}")
    click.echo(f"serving on http://{host}:{port} (log: {log_path})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


@main.command("export")
@click.option("--log", "log_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--status", type=click.Choice(["accepted", "rejected", "pending", "canary"]),
              default="accepted", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default="jsonl", show_default=True)
@click.option("--out", "out_file", type=click.Path(path_type=Path), required=True)
def cmd_export(log_path: Path, status: str, fmt: str, out_file: Path) -> None:
    """Write exercises with the given status (post-edit text) to a file."""
    store = CurationStore(log_path)
    records = store.list_records(status=status)
    if fmt == "jsonl":
        _write_jsonl(out_file, [codec.encode_exercise(r.exercise) for r in records])
    else:
        with open(out_file, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["id", "kind", "statement", "solution", "tests"])
            for record in records:
                ex = record.exercise
                writer.writerow([ex.id, ex.kind, ex.statement or "", ex.solution or "", ex.tests or ""])
    click.echo(f"exported {len(records)} exercise(s) to {out_file}")


if __name__ == "__main__":
    main()
