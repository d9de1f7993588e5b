"""Query pipeline: retrieval -> evidence -> re-rank -> summaries.

The engine owns the immutable corpus store, the search index, and the
configured backends; each request runs through a private pipeline state,
so concurrent queries never interact. The service module exposes it over
HTTP and the CLI calls it directly.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import CorpusStore
from .evidence import (ROLE_DOMAIN_EXPERT, ROLE_GENERALIST, BackendDescriptor,
                       gather_evidence, make_backend)
from .index import SearchIndex
from .rank import ScoringConfig, rerank
from .summarize import (DEFAULT_SEPARATOR, HashingEmbedder,
                        LeadingSentencesSummarizer, RemoteEmbedder,
                        RemoteSummarizer, SentenceCandidate, SummaryBundle,
                        Variant, abstractive_summary, extractive_summary)

logger = logging.getLogger(__name__)

INCLUDE_FLAGS = ("snippets", "extractive", "abstractive")

ENV_CONFIG = "LITRANK_CONFIG"
ENV_INDEX_DIR = "LITRANK_INDEX_DIR"


@dataclass
class EngineSettings:
    """File- and env-configurable engine options."""

    index_dir: str = ""
    corpus_dir: str = ""
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    top_n: int = 30
    top_k: int = 3
    variant: str = Variant.CAQ.value
    separator: str = DEFAULT_SEPARATOR
    backend_timeout: float = 10.0
    generalist_endpoint: str = "builtin"
    domain_expert_endpoint: str = "builtin"
    embedder_endpoint: str = "builtin"
    summarizer_endpoint: str = "builtin"
    ui_dir: str = ""

    @classmethod
    def load(cls, config_path: str | Path | None = None,
             env: dict | None = None) -> "EngineSettings":
        """Build settings from an optional JSON file plus env overrides."""
        env = os.environ if env is None else env
        path = config_path or env.get(ENV_CONFIG)
        data: dict = {}
        if path:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        backends = data.get("backends", {})
        settings = cls(
            index_dir=data.get("index_dir", ""),
            corpus_dir=data.get("corpus_dir", ""),
            scoring=ScoringConfig.from_dict(data.get("scoring", {})),
            top_n=data.get("top_n", 30),
            top_k=data.get("top_k", 3),
            variant=data.get("variant", Variant.CAQ.value),
            separator=data.get("separator", DEFAULT_SEPARATOR),
            backend_timeout=data.get("backend_timeout", 10.0),
            generalist_endpoint=backends.get("generalist", "builtin"),
            domain_expert_endpoint=backends.get("domain_expert", "builtin"),
            embedder_endpoint=backends.get("embedder", "builtin"),
            summarizer_endpoint=backends.get("summarizer", "builtin"),
            ui_dir=data.get("ui_dir", ""),
        )
        if env.get(ENV_INDEX_DIR):
            settings.index_dir = env[ENV_INDEX_DIR]
        return settings


@dataclass
class QueryRequest:
    """One pipeline request; ``queries`` carries caller-written sub-queries."""

    queries: list[str]
    top_n: int = 30
    top_k: int = 3
    variant: str = Variant.CAQ.value
    include: tuple[str, ...] = INCLUDE_FLAGS
    budget: int | None = None

    def validate(self) -> None:
        if not self.queries or not all(
                isinstance(q, str) and q.strip() for q in self.queries):
            raise ValueError("queries must be a nonempty list of nonblank strings")
        if not (1 <= self.top_k <= self.top_n):
            raise ValueError("require 1 <= top_k <= top_n")
        include = tuple(self.include)
        if not include or not set(include) <= set(INCLUDE_FLAGS):
            raise ValueError(f"include flags must be a nonempty subset of {INCLUDE_FLAGS}")
        Variant(self.variant)
        if self.budget is not None and self.budget <= 0:
            raise ValueError("budget must be positive when given")


class Engine:
    """Pipeline façade over a loaded corpus, index, and backends."""

    def __init__(self, store: CorpusStore, index: SearchIndex,
                 settings: EngineSettings | None = None):
        self.store = store
        self.index = index
        self.settings = settings or EngineSettings()
        s = self.settings
        self.qa_backends = {
            ROLE_GENERALIST: make_backend(BackendDescriptor(
                ROLE_GENERALIST, s.generalist_endpoint, s.backend_timeout)),
            ROLE_DOMAIN_EXPERT: make_backend(BackendDescriptor(
                ROLE_DOMAIN_EXPERT, s.domain_expert_endpoint, s.backend_timeout)),
        }
        if s.embedder_endpoint == "builtin":
            self.embedder = HashingEmbedder()
        else:
            self.embedder = RemoteEmbedder(s.embedder_endpoint,
                                           timeout=s.backend_timeout)
        if s.summarizer_endpoint == "builtin":
            self.summarizer = LeadingSentencesSummarizer()
        else:
            self.summarizer = RemoteSummarizer(s.summarizer_endpoint,
                                               timeout=s.backend_timeout)

    @classmethod
    def open(cls, index_dir: str | Path,
             settings: EngineSettings | None = None) -> "Engine":
        """Load an index directory and the corpus it was built from."""
        index = SearchIndex.load(index_dir)
        settings = settings or EngineSettings()
        corpus_dir = settings.corpus_dir or index.corpus_dir
        store = CorpusStore(corpus_dir)
        settings.index_dir = str(index_dir)
        settings.corpus_dir = str(corpus_dir)
        return cls(store, index, settings)

    # -- endpoints ---------------------------------------------------------

    def health(self) -> dict:
        return {
            "status": "ok",
            "n_paragraphs": self.index.n_paragraphs,
            "index_dir": self.settings.index_dir,
            "backends": {
                "generalist": self.settings.generalist_endpoint,
                "domain_expert": self.settings.domain_expert_endpoint,
                "embedder": self.settings.embedder_endpoint,
                "summarizer": self.settings.summarizer_endpoint,
            },
        }

    def corpus_manifest(self) -> dict:
        return self.store.manifest.to_dict()

    def run(self, request: QueryRequest) -> dict:
        """Execute the pipeline for every sub-query.

        Returns a JSON-ready response dict; the ``timings`` entry is the
        only non-deterministic part.
        """
        request.validate()
        started = time.perf_counter()
        results = []
        timings = {"queries": []}
        for query in request.queries:
            result, elapsed = self._run_single(query, request)
            results.append(result)
            timings["queries"].append(elapsed)
        timings["total_s"] = time.perf_counter() - started
        return {
            "results": results,
            "config": {
                "scoring": self.settings.scoring.to_dict(),
                "bm25": self.index.config.to_dict(),
                "top_n": request.top_n,
                "top_k": request.top_k,
                "variant": request.variant,
            },
            "timings": timings,
        }

    # -- pipeline stages ----------------------------------------------------

    def _run_single(self, query: str, request: QueryRequest) -> tuple[dict, dict]:
        elapsed: dict[str, float] = {}
        notes: list[str] = []
        t0 = time.perf_counter()
        hits = self.index.search(query, request.top_n)
        elapsed["retrieve_s"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        candidates = []
        degraded_roles: set[str] = set()
        for hit in hits:
            paragraph = self.store.get_paragraph(hit.para_id)
            evidence, failed = gather_evidence(query, paragraph, self.qa_backends)
            degraded_roles.update(failed)
            candidates.append((paragraph, evidence))
        elapsed["evidence_s"] = time.perf_counter() - t0
        for role in sorted(degraded_roles):
            notes.append(f"qa backend degraded: {role}")

        t0 = time.perf_counter()
        snippets = rerank(candidates, query, self.settings.scoring) if candidates else []
        elapsed["rerank_s"] = time.perf_counter() - t0

        result: dict = {"query": query, "notes": notes}
        if "snippets" in request.include:
            result["snippets"] = [self._snippet_dict(s, rank + 1)
                                  for rank, s in enumerate(snippets)]

        t0 = time.perf_counter()
        summary = None
        if "extractive" in request.include or "abstractive" in request.include:
            summary = self._summarize(query, hits, snippets, request, notes)
        elapsed["summarize_s"] = time.perf_counter() - t0
        result["summary"] = summary.to_dict() if summary else None
        return result, elapsed

    def _snippet_dict(self, snippet, rank: int) -> dict:
        paragraph = self.store.get_paragraph(snippet.para_id)
        document = self.store.get_document(paragraph.doc_id)
        return {
            "rank": rank,
            "para_id": snippet.para_id,
            "doc_id": paragraph.doc_id,
            "title": document.title,
            "source_uri": document.source_uri,
            "text": paragraph.text,
            "rerank_score": snippet.rerank_score,
            "match_score": snippet.match_score,
            "confidence": snippet.confidence,
            "highlights": [list(span) for span in snippet.highlight_spans],
            "evidence_sentences": list(snippet.evidence.evidence_sentences),
            "spans": [span.to_dict() for span in snippet.evidence.spans],
        }

    def _summarize(self, query: str, hits, snippets, request: QueryRequest,
                   notes: list[str]) -> SummaryBundle:
        bundle = SummaryBundle(query=query, k=request.top_k,
                               word_budget=request.budget)
        top = snippets[:request.top_k]
        if "extractive" in request.include:
            candidates = []
            for rank, snippet in enumerate(top):
                paragraph = self.store.get_paragraph(snippet.para_id)
                for s_idx in snippet.evidence.evidence_sentences:
                    candidates.append(SentenceCandidate(
                        para_rank=rank, para_id=snippet.para_id,
                        sentence_index=s_idx,
                        text=paragraph.sentence_text(s_idx)))
            if candidates:
                selected, short = extractive_summary(query, candidates, self.embedder)
                bundle.extractive = selected
                bundle.extractive_short = short
            else:
                notes.append("extractive skipped: no evidence sentences")
        if "abstractive" in request.include:
            variant = Variant(request.variant)
            ordered = snippets
            if variant is Variant.C_NR:
                by_id = {s.para_id: s for s in snippets}
                ordered = [by_id[h.para_id] for h in hits if h.para_id in by_id]
            ranked = []
            for snippet in ordered:
                paragraph = self.store.get_paragraph(snippet.para_id)
                ranked.append((paragraph,
                               [span.text for span in snippet.evidence.spans]))
            if ranked:
                try:
                    bundle.abstractive = abstractive_summary(
                        query, ranked, self.summarizer, variant=variant,
                        k=request.top_k, budget=request.budget,
                        separator=self.settings.separator)
                except ValueError as exc:
                    notes.append(f"abstractive skipped: {exc}")
            else:
                notes.append("abstractive skipped: no ranked paragraphs")
        return bundle


def response_without_timings(response: dict) -> dict:
    """Copy of a query response with the timing block removed."""
    out = dict(response)
    out.pop("timings", None)
    return out
