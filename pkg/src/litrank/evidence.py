"""Evidence selection: QA backends, answer fusion, sentence expansion.

Two QA backends (a generalist and a domain expert) propose answer spans
for a paragraph; their predictions are fused — identical spans merge,
nested spans collapse to the container, everything else is kept — and
spans are expanded to the sentences that contain them for display.

A deterministic lexical backend is built in so the pipeline runs without
model servers; remote backends speak JSON over HTTP POST ``/qa``.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import httpx

from . import BackendUnavailableError, ProtocolError, SpanValidationError
from .corpus import Paragraph
from .index import STOPWORDS, tokenize_normalize, tokenize_with_offsets

logger = logging.getLogger(__name__)

ROLE_GENERALIST = "generalist"
ROLE_DOMAIN_EXPERT = "domain_expert"
ROLE_LEXICAL = "lexical"
ROLES = (ROLE_GENERALIST, ROLE_DOMAIN_EXPERT, ROLE_LEXICAL)


@dataclass(frozen=True)
class RawSpan:
    """A backend answer span; offsets are half-open into the paragraph text."""

    start: int
    end: int
    text: str
    score: float

    def validate(self, paragraph_text: str) -> None:
        if not (0 <= self.start < self.end <= len(paragraph_text)):
            raise SpanValidationError(
                f"span ({self.start},{self.end}) outside paragraph of "
                f"length {len(paragraph_text)}")
        if paragraph_text[self.start:self.end] != self.text:
            raise SpanValidationError(
                f"span text {self.text!r} does not match paragraph slice")


@dataclass
class FusedSpan:
    """A span surviving fusion, with the roles that produced or supported it."""

    start: int
    end: int
    text: str
    sources: tuple[str, ...]
    scores: dict[str, float] = field(default_factory=dict)
    overlaps: bool = False

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "text": self.text,
            "sources": list(self.sources),
            "scores": {k: self.scores[k] for k in sorted(self.scores)},
            "overlaps": self.overlaps,
        }


@dataclass
class EvidenceCandidate:
    """Fused answer evidence for one paragraph."""

    para_id: str
    spans: list[FusedSpan]
    evidence_sentences: list[int]
    generalist_score: float | None = None
    domain_score: float | None = None


@dataclass
class BackendDescriptor:
    """Where a QA backend lives and which ensemble slot it fills."""

    role: str
    endpoint: str = "builtin"
    timeout: float = 10.0

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown backend role: {self.role!r}")


def content_words(query: str) -> list[str]:
    """Deduplicated normalized query tokens that carry content.

    A token counts as content when it is at least two characters long and
    not a stopword.
    """
    seen = []
    for token in tokenize_normalize(query):
        if len(token) >= 2 and token not in STOPWORDS and token not in seen:
            seen.append(token)
    return seen


def lexical_oracle(query: str, paragraph: Paragraph) -> list[RawSpan]:
    """Deterministic builtin backend: keyword coverage per sentence.

    Scores each sentence by the fraction of distinct query content words
    it contains, picks the best-covered sentence (earliest on ties), and
    returns the minimal token window of that sentence containing every
    matched word. Returns nothing when no content word matches.
    """
    words = content_words(query)
    if not words:
        return []
    best_index = -1
    best_matched: set[str] = set()
    best_tokens: list = []
    for idx, (s_start, s_end) in enumerate(paragraph.sentences):
        tokens = [t._replace(start=t.start + s_start, end=t.end + s_start)
                  for t in tokenize_with_offsets(paragraph.text[s_start:s_end])]
        keys = {t.norm for t in tokens}
        matched = {w for w in words if w in keys}
        if len(matched) > len(best_matched):
            best_index, best_matched, best_tokens = idx, matched, tokens
    if not best_matched:
        return []
    window = _minimal_window(best_tokens, best_matched)
    start, end = best_tokens[window[0]].start, best_tokens[window[1]].end
    score = len(best_matched) / len(words)
    return [RawSpan(start=start, end=end,
                    text=paragraph.text[start:end], score=score)]


def _minimal_window(tokens: Sequence, needed: set[str]) -> tuple[int, int]:
    """Smallest token window covering every needed key; earliest on ties."""
    counts: dict[str, int] = defaultdict(int)
    have = 0
    best: tuple[int, int] | None = None
    left = 0
    for right, token in enumerate(tokens):
        if token.norm in needed:
            counts[token.norm] += 1
            if counts[token.norm] == 1:
                have += 1
        while have == len(needed):
            if best is None or right - left < best[1] - best[0]:
                best = (left, right)
            ltoken = tokens[left]
            if ltoken.norm in needed:
                counts[ltoken.norm] -= 1
                if counts[ltoken.norm] == 0:
                    have -= 1
            left += 1
    assert best is not None
    return best


class LexicalBackend:
    """Wraps :func:`lexical_oracle` behind the backend client interface."""

    def __init__(self, descriptor: BackendDescriptor):
        self.descriptor = descriptor

    def fetch(self, query: str, paragraph: Paragraph) -> list[RawSpan]:
        return lexical_oracle(query, paragraph)


class RemoteQABackend:
    """HTTP client for the ``POST /qa`` wire protocol."""

    def __init__(self, descriptor: BackendDescriptor, client: httpx.Client | None = None):
        self.descriptor = descriptor
        self._client = client or httpx.Client(timeout=descriptor.timeout)

    def fetch(self, query: str, paragraph: Paragraph) -> list[RawSpan]:
        url = self.descriptor.endpoint.rstrip("/") + "/qa"
        try:
            response = self._client.post(
                url, json={"query": query, "context": paragraph.text},
                timeout=self.descriptor.timeout)
        except httpx.HTTPError as exc:
            raise BackendUnavailableError(self.descriptor.role, str(exc)) from exc
        if response.status_code != 200:
            raise BackendUnavailableError(
                self.descriptor.role,
                f"{url} returned HTTP {response.status_code}")
        try:
            payload = response.json()
            spans = []
            for item in payload["spans"]:
                span = RawSpan(start=int(item["start"]), end=int(item["end"]),
                               text=str(item.get("text", "")),
                               score=float(item["score"]))
                spans.append(span)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed /qa response from {url}: {exc}",
                                role=self.descriptor.role) from exc
        for span in spans:
            if not (0 <= span.start < span.end <= len(paragraph.text)):
                raise ProtocolError(
                    f"span ({span.start},{span.end}) outside context from {url}",
                    role=self.descriptor.role)
        return [
            RawSpan(s.start, s.end, s.text or paragraph.text[s.start:s.end], s.score)
            for s in spans
        ]


def make_backend(descriptor: BackendDescriptor, client: httpx.Client | None = None):
    if descriptor.endpoint == "builtin":
        return LexicalBackend(descriptor)
    return RemoteQABackend(descriptor, client=client)


def query_backend(backend, query: str, paragraph: Paragraph) -> list[RawSpan]:
    """Fetch spans from one backend and validate them against the paragraph."""
    spans = backend.fetch(query, paragraph)
    for span in spans:
        span.validate(paragraph.text)
    return spans


def _dedup_side(spans: Sequence[RawSpan]) -> dict[tuple[int, int], float]:
    """Collapse same-side duplicates to their maximum score."""
    out: dict[tuple[int, int], float] = {}
    for span in spans:
        key = (span.start, span.end)
        if key not in out or span.score > out[key]:
            out[key] = span.score
    return out


def fuse_answers(spans_a: Sequence[RawSpan], spans_b: Sequence[RawSpan],
                 roles: tuple[str, str] = (ROLE_GENERALIST, ROLE_DOMAIN_EXPERT),
                 text_length: int | None = None) -> list[FusedSpan]:
    """Fuse the two backends' span predictions.

    Identical spans merge into one; a span strictly contained in a span
    from the other side is absorbed into the container; all remaining
    spans are kept. Partially overlapping survivors are flagged. The
    resulting span set is symmetric in the two inputs and fusing a list
    with itself reproduces its span set.
    """
    if text_length is not None:
        for span in list(spans_a) + list(spans_b):
            if not (0 <= span.start < span.end <= text_length):
                raise SpanValidationError(
                    f"span ({span.start},{span.end}) outside paragraph of "
                    f"length {text_length}")
    side_a = _dedup_side(spans_a)
    side_b = _dedup_side(spans_b)
    role_a, role_b = roles
    identical = set(side_a) & set(side_b)

    def _strictly_inside(inner: tuple[int, int], outer: tuple[int, int]) -> bool:
        return (outer != inner and outer[0] <= inner[0] and inner[1] <= outer[1])

    kept: dict[tuple[int, int], dict[str, float]] = {}
    for key in identical:
        kept[key] = {role_a: side_a[key], role_b: side_b[key]}
    absorbed: list[tuple[tuple[int, int], str, float]] = []
    for key, score in side_a.items():
        if key in identical:
            continue
        if any(_strictly_inside(key, other) for other in side_b):
            absorbed.append((key, role_a, score))
        else:
            kept[key] = {role_a: score}
    for key, score in side_b.items():
        if key in identical:
            continue
        if any(_strictly_inside(key, other) for other in side_a):
            absorbed.append((key, role_b, score))
        else:
            kept[key] = {role_b: score}
    # Credit each absorbed span to every kept container from the other side.
    for key, role, score in absorbed:
        opposite = side_b if role == role_a else side_a
        for container in kept:
            if container in opposite and _strictly_inside(key, container):
                if role not in kept[container] or score > kept[container][role]:
                    kept[container][role] = score

    fused = []
    for key in sorted(kept):
        scores = kept[key]
        fused.append(FusedSpan(
            start=key[0], end=key[1], text="",
            sources=tuple(r for r in (role_a, role_b) if r in scores),
            scores=dict(scores),
        ))
    for i, span in enumerate(fused):
        for other in fused[i + 1:]:
            if other.start >= span.end:
                break
            partial = (span.start < other.end and other.start < span.end
                       and not _strictly_inside((span.start, span.end),
                                                (other.start, other.end))
                       and not _strictly_inside((other.start, other.end),
                                                (span.start, span.end))
                       and (span.start, span.end) != (other.start, other.end))
            if partial:
                span.overlaps = True
                other.overlaps = True
    return fused


def expand_to_sentences(spans: Sequence[FusedSpan | RawSpan],
                        paragraph: Paragraph) -> list[int]:
    """Indices of sentences intersecting at least one span (sorted, unique)."""
    hits = set()
    for span in spans:
        for idx, (s_start, s_end) in enumerate(paragraph.sentences):
            if span.start < s_end and s_start < span.end:
                hits.add(idx)
    return sorted(hits)


def gather_evidence(query: str, paragraph: Paragraph,
                    backends: dict[str, object],
                    ) -> tuple[EvidenceCandidate, list[str]]:
    """Query the generalist/domain-expert ensemble for one paragraph.

    The two backends are queried concurrently. A failed backend
    (unreachable or protocol-violating) degrades the candidate to
    single-backend mode and is reported in the returned role list; when
    both fail the first error propagates.
    """
    expected = (ROLE_GENERALIST, ROLE_DOMAIN_EXPERT)
    missing = [r for r in expected if r not in backends]
    if missing:
        raise ValueError(f"ensemble missing roles: {missing}")
    results: dict[str, list[RawSpan]] = {}
    failed: list[str] = []
    with ThreadPoolExecutor(max_workers=2) as pool:
        futures = {
            role: pool.submit(query_backend, backends[role], query, paragraph)
            for role in expected
        }
        errors: list[Exception] = []
        for role, future in futures.items():
            try:
                results[role] = future.result()
            except (BackendUnavailableError, ProtocolError) as exc:
                logger.warning("backend %s failed for %s: %s",
                               role, paragraph.para_id, exc)
                failed.append(role)
                errors.append(exc)
                results[role] = []
    if len(failed) == len(expected):
        raise errors[0]
    fused = fuse_answers(results[ROLE_GENERALIST], results[ROLE_DOMAIN_EXPERT],
                         text_length=len(paragraph.text))
    for span in fused:
        span.text = paragraph.text[span.start:span.end]
    candidate = EvidenceCandidate(
        para_id=paragraph.para_id,
        spans=fused,
        evidence_sentences=expand_to_sentences(fused, paragraph),
        generalist_score=_best_score(results[ROLE_GENERALIST]),
        domain_score=_best_score(results[ROLE_DOMAIN_EXPERT]),
    )
    return candidate, failed


def _best_score(spans: Sequence[RawSpan]) -> float | None:
    """Per-backend paragraph confidence: the maximum span score."""
    if not spans:
        return None
    return max(span.score for span in spans)
