"""Query-focused multi-document summarization.

Extractive: embed answer sentences and the query (token embeddings mean-
pooled per sentence), rank by cosine similarity, keep the top three.
Abstractive: build a per-paragraph input (several concatenation variants),
summarize each paragraph with a pluggable backend, and concatenate the
summaries in rank order — optionally stopping once a word budget is
reached. A LEAD baseline over the most recent document is included for
comparison runs.

Builtin backends (a feature-hashing embedder and a leading-sentences
summarizer) keep everything deterministic and dependency-free; real
deployments point the same interfaces at remote ``/embed`` and
``/summarize`` services.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Protocol, Sequence

import httpx
import numpy as np

from . import BackendUnavailableError, ProtocolError
from .corpus import Paragraph, split_sentences
from .index import tokenize_normalize

logger = logging.getLogger(__name__)

DEFAULT_SEPARATOR = " | "
EXTRACTIVE_TOP_K = 3


class Variant(str, Enum):
    """Input assembly variants for the abstractive summarizer.

    Letters name the parts: C paragraph context, A answer spans, Q query.
    ``C_NR`` is context-only over the retrieval order (no re-ranking);
    every other variant consumes paragraphs in re-ranked order.
    """

    C = "C"
    CQ = "CQ"
    QC = "QC"
    AQ = "AQ"
    QA = "QA"
    CAQ = "CAQ"
    C_NR = "C_nr"


_VARIANT_PARTS: dict[Variant, tuple[str, ...]] = {
    Variant.C: ("context",),
    Variant.CQ: ("context", "query"),
    Variant.QC: ("query", "context"),
    Variant.AQ: ("answers", "query"),
    Variant.QA: ("query", "answers"),
    Variant.CAQ: ("context", "answers", "query"),
    Variant.C_NR: ("context",),
}


@dataclass
class SummarizationInput:
    variant: Variant
    parts: list[str]
    text: str
    source: str = ""


def build_input(variant: Variant | str, paragraph_text: str,
                answer_texts: Sequence[str], query: str,
                separator: str = DEFAULT_SEPARATOR,
                source: str = "") -> SummarizationInput:
    """Assemble the summarizer input for one paragraph.

    Answer spans are joined by single spaces into one part; parts are
    joined by ``separator`` in the variant's order. Variants that include
    answers require at least one span.
    """
    variant = Variant(variant)
    answers = " ".join(answer_texts)
    values = {"context": paragraph_text, "answers": answers, "query": query}
    names = _VARIANT_PARTS[variant]
    if "answers" in names and not answers.strip():
        raise ValueError(f"variant {variant.value} requires answer spans")
    parts = [values[name] for name in names]
    return SummarizationInput(variant=variant, parts=parts,
                              text=separator.join(parts), source=source)


def embed_sentence(token_embeddings: np.ndarray) -> np.ndarray:
    """Mean-pool token embeddings into one sentence vector."""
    matrix = np.asarray(token_embeddings, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise ValueError("expected a nonempty (n, d) embedding matrix")
    return matrix.sum(axis=0) / matrix.shape[0]


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class EmbeddingBackend(Protocol):
    dim: int

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class HashingEmbedder:
    """Deterministic builtin embedder.

    Each token gets a pseudo-random base vector seeded from a hash of its
    surface form; token embeddings are contextualized by averaging over a
    +/-1 token window. No weights, no downloads, stable across runs.
    """

    def __init__(self, dim: int = 64, window: int = 1):
        self.dim = dim
        self.window = window
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            vec = rng.uniform(-1.0, 1.0, self.dim)
            self._cache[token] = vec
        return vec

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        matrices = []
        for text in texts:
            tokens = tokenize_normalize(text)
            if not tokens:
                raise ValueError(f"cannot embed text without tokens: {text!r}")
            base = np.stack([self._token_vector(t) for t in tokens])
            rows = []
            for i in range(len(tokens)):
                lo = max(0, i - self.window)
                hi = min(len(tokens), i + self.window + 1)
                rows.append(base[lo:hi].mean(axis=0))
            matrices.append(np.stack(rows))
        return matrices


class RemoteEmbedder:
    """HTTP client for the ``POST /embed`` protocol."""

    def __init__(self, endpoint: str, dim: int = 0, timeout: float = 10.0,
                 client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.dim = dim
        self.timeout = timeout
        self._client = client or httpx.Client(timeout=timeout)

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        url = self.endpoint.rstrip("/") + "/embed"
        try:
            response = self._client.post(url, json={"texts": list(texts)},
                                         timeout=self.timeout)
        except httpx.HTTPError as exc:
            raise BackendUnavailableError("embedder", str(exc)) from exc
        if response.status_code != 200:
            raise BackendUnavailableError(
                "embedder", f"{url} returned HTTP {response.status_code}")
        try:
            matrices = [np.asarray(m, dtype=float) for m in response.json()["matrices"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed /embed response from {url}: {exc}") from exc
        if len(matrices) != len(texts):
            raise ProtocolError(f"expected {len(texts)} matrices from {url}")
        return matrices


@dataclass
class SentenceCandidate:
    """An answer sentence proposed for the extractive summary."""

    para_rank: int
    para_id: str
    sentence_index: int
    text: str


@dataclass
class ExtractiveSentence:
    para_id: str
    sentence_index: int
    similarity: float
    text: str

    def to_dict(self) -> dict:
        return {
            "para_id": self.para_id,
            "sentence_index": self.sentence_index,
            "similarity": self.similarity,
            "text": self.text,
        }


def extractive_summary(query: str, candidates: Sequence[SentenceCandidate],
                       embedder: EmbeddingBackend,
                       top_k: int = EXTRACTIVE_TOP_K,
                       ) -> tuple[list[ExtractiveSentence], bool]:
    """Select the ``top_k`` answer sentences most similar to the query.

    Query and candidates are embedded with the same mean pooling; cosine
    similarity ranks them (ties: earlier paragraph rank, then lower
    sentence index) and the selection is returned in similarity order.
    The flag reports when fewer than ``top_k`` candidates were available.
    """
    if not candidates:
        raise ValueError("candidates must be nonempty")
    matrices = embedder.embed([query] + [c.text for c in candidates])
    query_vec = embed_sentence(matrices[0])
    scored = []
    for candidate, matrix in zip(candidates, matrices[1:]):
        similarity = cosine(query_vec, embed_sentence(matrix))
        scored.append((candidate, similarity))
    scored.sort(key=lambda cs: (-cs[1], cs[0].para_rank, cs[0].sentence_index))
    selected = [
        ExtractiveSentence(c.para_id, c.sentence_index, sim, c.text)
        for c, sim in scored[:top_k]
    ]
    return selected, len(candidates) < top_k


class SummarizerBackend(Protocol):
    def summarize(self, text: str, max_words: int | None = None) -> str: ...


class LeadingSentencesSummarizer:
    """Builtin stub: the first ``n_sentences`` sentences of the input."""

    def __init__(self, n_sentences: int = 2):
        self.n_sentences = n_sentences

    def summarize(self, text: str, max_words: int | None = None) -> str:
        spans = split_sentences(text)[:self.n_sentences]
        summary = " ".join(text[a:b] for a, b in spans)
        if max_words is not None:
            words = summary.split()
            if len(words) > max_words:
                summary = " ".join(words[:max_words])
        return summary


class RemoteSummarizer:
    """HTTP client for the ``POST /summarize`` protocol."""

    def __init__(self, endpoint: str, timeout: float = 10.0,
                 client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self._client = client or httpx.Client(timeout=timeout)

    def summarize(self, text: str, max_words: int | None = None) -> str:
        url = self.endpoint.rstrip("/") + "/summarize"
        payload: dict = {"text": text}
        if max_words is not None:
            payload["max_words"] = max_words
        try:
            response = self._client.post(url, json=payload, timeout=self.timeout)
        except httpx.HTTPError as exc:
            raise BackendUnavailableError("summarizer", str(exc)) from exc
        if response.status_code != 200:
            raise BackendUnavailableError(
                "summarizer", f"{url} returned HTTP {response.status_code}")
        try:
            return str(response.json()["summary"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed /summarize response from {url}: {exc}") from exc


@dataclass
class AbstractiveSegment:
    para_id: str
    text: str

    def to_dict(self) -> dict:
        return {"para_id": self.para_id, "text": self.text}


@dataclass
class AbstractiveSummary:
    text: str
    segments: list[AbstractiveSegment]
    consumed: int
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "segments": [s.to_dict() for s in self.segments],
            "consumed": self.consumed,
            "notes": list(self.notes),
        }


def abstractive_summary(query: str,
                        ranked: Sequence[tuple[Paragraph, Sequence[str]]],
                        backend: SummarizerBackend,
                        variant: Variant | str = Variant.CAQ,
                        k: int = 3,
                        budget: int | None = None,
                        separator: str = DEFAULT_SEPARATOR) -> AbstractiveSummary:
    """Summarize paragraphs one by one and concatenate in rank order.

    ``ranked`` pairs each paragraph with its answer span texts, already in
    the order the summaries should appear. Without a budget the first
    ``k`` paragraphs are consumed; with a budget, paragraphs are consumed
    until the cumulative summary word count first reaches it. A backend
    failure on one paragraph is skipped with a note; if every paragraph
    fails the error propagates.
    """
    if not ranked:
        raise ValueError("ranked paragraphs must be nonempty")
    variant = Variant(variant)
    items = list(ranked) if budget is not None else list(ranked)[:k]
    segments: list[AbstractiveSegment] = []
    notes: list[str] = []
    total_words = 0
    backend_failures = 0
    for paragraph, answers in items:
        try:
            text = build_input(variant, paragraph.text, answers, query,
                               separator=separator, source=paragraph.para_id).text
        except ValueError as exc:
            notes.append(f"input skipped {paragraph.para_id}: {exc}")
            continue
        try:
            summary = backend.summarize(text)
        except BackendUnavailableError as exc:
            logger.warning("summarizer failed on %s: %s", paragraph.para_id, exc)
            notes.append(f"summarizer skipped {paragraph.para_id}: {exc}")
            backend_failures += 1
            continue
        segments.append(AbstractiveSegment(paragraph.para_id, summary))
        total_words += len(summary.split())
        if budget is not None and total_words >= budget:
            break
    if not segments:
        if backend_failures:
            raise BackendUnavailableError(
                "summarizer", "all paragraph summaries failed")
        raise ValueError("no paragraph produced a summarizable input; " +
                         "; ".join(notes))
    return AbstractiveSummary(
        text=" ".join(segment.text for segment in segments),
        segments=segments,
        consumed=len(segments),
        notes=notes,
    )


@dataclass
class LeadDocument:
    doc_id: str
    publish_date: str | None
    text: str


@dataclass
class LeadSummary:
    doc_id: str
    sentences: list[str]
    text: str
    word_count: int


def lead_baseline(documents: Sequence[LeadDocument], budget: int = 250) -> LeadSummary:
    """Leading sentences of the most recent document, within a word budget.

    The newest document wins (undated documents sort oldest; remaining
    ties break on ascending doc_id). Sentences are taken in order up to
    the last one that keeps the total at or under the budget, and the
    first sentence is always included.
    """
    if not documents:
        raise ValueError("documents must be nonempty")

    def _key(doc: LeadDocument):
        ordinal = -1
        if doc.publish_date:
            try:
                ordinal = date.fromisoformat(doc.publish_date[:10]).toordinal()
            except ValueError:
                ordinal = -1
        return (-ordinal, doc.doc_id)

    chosen = min(documents, key=_key)
    sentence_texts = [chosen.text[a:b] for a, b in split_sentences(chosen.text)]
    picked: list[str] = []
    total = 0
    for sentence in sentence_texts:
        words = len(sentence.split())
        if picked and total + words > budget:
            break
        picked.append(sentence)
        total += words
    return LeadSummary(doc_id=chosen.doc_id, sentences=picked,
                       text=" ".join(picked), word_count=total)


@dataclass
class SummaryBundle:
    """Everything the summarizer stage produced for one query."""

    query: str
    extractive: list[ExtractiveSentence] = field(default_factory=list)
    extractive_short: bool = False
    abstractive: AbstractiveSummary | None = None
    k: int = 0
    word_budget: int | None = None

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "extractive": [s.to_dict() for s in self.extractive],
            "extractive_short": self.extractive_short,
            "abstractive": self.abstractive.to_dict() if self.abstractive else None,
            "k": self.k,
            "word_budget": self.word_budget,
        }
