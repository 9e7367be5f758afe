"""Near-duplicate detection for generated problem statements.

The default backend scores a candidate against a local reference corpus
by n-gram containment over normalized tokens; numbers collapse to a
placeholder so re-numbered clones still match.  A web-search backend is
sketched as an interface but stays disabled: its results depend on a
third party and cannot be pinned in tests.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

NUMBER_TOKEN = "<num>"

_PUNCT_RE = re.compile(r"[^\w\s]")


class WebBackendUnavailable(Exception):
    pass


@dataclass(frozen=True)
class NoveltyResult:
    novel: bool
    similarity: float
    best_match_id: Optional[str] = None
    backend: str = "local"


def normalize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split, collapse digit tokens."""
    cleaned = _PUNCT_RE.sub("", text.lower())
    return [NUMBER_TOKEN if token.isdigit() else token for token in cleaned.split()]


def _ngrams(tokens: Sequence[str], n: int) -> set[tuple[str, ...]]:
    return {tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)}


def containment_similarity(
    candidate: Sequence[str], reference: Sequence[str], n: int = 5
) -> float:
    """Share of the candidate's n-grams found in the reference.

    Candidates shorter than n tokens fall back to full-sequence equality.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(candidate) < n:
        return 1.0 if list(candidate) == list(reference) else 0.0
    candidate_grams = _ngrams(candidate, n)
    reference_grams = _ngrams(reference, n)
    return len(candidate_grams & reference_grams) / max(1, len(candidate_grams))


def check_novelty(
    statement: str,
    corpus: Iterable[tuple[str, str]],
    threshold: float = 0.5,
    n: int = 5,
) -> NoveltyResult:
    """Is the statement novel against the reference corpus?

    Similarity is the best containment score over the corpus; novel means
    strictly below the threshold.  An empty corpus scores 0 (novel).
    """
    tokens = normalize(statement)
    best = 0.0
    best_id: Optional[str] = None
    for ref_id, ref_statement in corpus:
        score = containment_similarity(tokens, normalize(ref_statement), n=n)
        if score > best:
            best = score
            best_id = ref_id
    return NoveltyResult(
        novel=best < threshold,
        similarity=best,
        best_match_id=best_id,
        backend="local",
    )


def web_search_query(statement: str) -> str:
    """Query string for the optional web backend: longest sentence, quoted."""
    sentences = [s.strip() for s in re.split(r"[.!?]", statement) if s.strip()]
    longest = max(sentences, key=len, default=statement.strip())
    return f'"{longest}"'


@dataclass(frozen=True)
class WebNoveltyBackend:
    """Interface stub for search-engine novelty checks.

    Wire shape: GET ``endpoint_url`` with the quoted query and an API key
    taken from ``api_key_env_var``; a statement counts as novel when the
    search returns zero hits.  Disabled by default and untested against a
    live engine; instantiate only behind an explicit opt-in.
    """

    endpoint_url: str
    api_key_env_var: str
    enabled: bool = False

    def check(self, statement: str) -> NoveltyResult:
        if not self.enabled:
            raise WebBackendUnavailable("web novelty backend is disabled")
        raise WebBackendUnavailable("no live web search configured in this build")
