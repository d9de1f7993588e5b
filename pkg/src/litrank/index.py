"""Paragraph-level inverted index with field-weighted BM25 ranking.

Every paragraph is indexed under three fields: its own text plus the
parent document's title and abstract. Scores are summed per query term
over the fields (weights body=1.0, title=0.5, abstract=0.5 by default)
using BM25 with k1=0.9, b=0.75. Ties are broken by ascending para_id so
rankings are a total order.
"""

from __future__ import annotations

import json
import logging
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import NamedTuple

from . import CorpusError
from .corpus import CorpusStore

logger = logging.getLogger(__name__)

INDEX_VERSION = "1"
FIELDS = ("body", "title", "abstract")

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Compact English stopword list shared by the lexical evidence backend and
# the keyword tagger. Frozen: changing it changes golden files.
STOPWORDS = frozenset("""
a about above after again against all am an and any are as at be because
been before being below between both but by cannot could did do does doing
down during each few for from further had has have having he her here hers
herself him himself his how i if in into is it its itself just me more most
my myself no nor not of off on once only or other our ours ourselves out
over own same she should so some such than that the their theirs them
themselves then there these they this those through to too under until up
very was we were what when where which while who whom why will with you
your yours yourself yourselves
""".split())


class Token(NamedTuple):
    norm: str
    start: int
    end: int


def tokenize_normalize(text: str) -> list[str]:
    """Lowercased, NFKC-normalized alphanumeric tokens."""
    return _TOKEN_RE.findall(unicodedata.normalize("NFKC", text).lower())


def tokenize_with_offsets(text: str) -> list[Token]:
    """Tokens with char offsets into the raw text.

    Segmentation runs on the raw string so offsets stay valid; each
    token's comparison key is NFKC-normalized and lowercased separately.
    """
    return [
        Token(unicodedata.normalize("NFKC", m.group().lower()), m.start(), m.end())
        for m in _TOKEN_RE.finditer(text)
    ]


@dataclass
class Bm25Config:
    k1: float = 0.9
    b: float = 0.75
    field_weights: dict[str, float] = field(
        default_factory=lambda: {"body": 1.0, "title": 0.5, "abstract": 0.5})
    stemming: bool = False

    def __post_init__(self):
        unknown = set(self.field_weights) - set(FIELDS)
        if unknown:
            raise ValueError(f"unknown index fields: {sorted(unknown)}")
        for fname, weight in self.field_weights.items():
            if not (math.isfinite(weight) and weight >= 0.0):
                raise ValueError(f"field weight {fname} must be >= 0")
        if self.stemming:
            raise NotImplementedError("stemming toggle reserved; no stemmer bundled")

    def to_dict(self) -> dict:
        return {
            "k1": self.k1,
            "b": self.b,
            "field_weights": dict(self.field_weights),
            "stemming": self.stemming,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Bm25Config":
        return cls(
            k1=obj["k1"],
            b=obj["b"],
            field_weights=dict(obj["field_weights"]),
            stemming=obj.get("stemming", False),
        )


@dataclass
class IndexStats:
    n_paragraphs: int
    avg_field_lengths: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "n_paragraphs": self.n_paragraphs,
            "avg_field_lengths": dict(self.avg_field_lengths),
        }


@dataclass
class PostingList:
    """Entries sorted by para_id; document_frequency == len(entries)."""

    term: str
    entries: list[tuple[str, int]]

    @property
    def document_frequency(self) -> int:
        return len(self.entries)


class RetrievalHit(NamedTuple):
    para_id: str
    bm25_score: float
    rank: int


class SearchIndex:
    """An immutable, searchable paragraph index."""

    def __init__(self, config: Bm25Config,
                 postings: dict[str, dict[str, list[tuple[str, int]]]],
                 field_lengths: dict[str, dict[str, int]],
                 paragraph_ids: list[str],
                 corpus_dir: str = ""):
        self.config = config
        self._postings = postings
        self._field_lengths = field_lengths
        self.paragraph_ids = paragraph_ids
        self.corpus_dir = corpus_dir
        self._avg_lengths = {}
        n = len(paragraph_ids)
        for fname in FIELDS:
            lengths = field_lengths[fname]
            self._avg_lengths[fname] = (sum(lengths.values()) / n) if n else 0.0

    @property
    def n_paragraphs(self) -> int:
        return len(self.paragraph_ids)

    def stats(self) -> IndexStats:
        return IndexStats(self.n_paragraphs, dict(self._avg_lengths))

    def posting_list(self, fname: str, term: str) -> PostingList | None:
        entries = self._postings[fname].get(term)
        if entries is None:
            return None
        return PostingList(term=term, entries=list(entries))

    def search(self, query: str, n: int) -> list[RetrievalHit]:
        """Top-``n`` paragraphs by field-weighted BM25.

        A query that normalizes to nothing returns an empty list. Query
        terms are processed in sorted order and per-term contributions
        are summed field by field, which keeps the floating-point
        accumulation order stable across runs.
        """
        if n <= 0:
            raise ValueError("n must be positive")
        query_tf = Counter(tokenize_normalize(query))
        if not query_tf:
            return []
        k1, b = self.config.k1, self.config.b
        total = len(self.paragraph_ids)
        scores: dict[str, float] = {}
        for term in sorted(query_tf):
            contrib: dict[str, float] = {}
            for fname in FIELDS:
                weight = self.config.field_weights.get(fname, 0.0)
                if weight == 0.0:
                    continue
                entries = self._postings[fname].get(term)
                if not entries:
                    continue
                df = len(entries)
                idf = math.log(1.0 + (total - df + 0.5) / (df + 0.5))
                avg_len = self._avg_lengths[fname]
                lengths = self._field_lengths[fname]
                for para_id, tf in entries:
                    denom = tf + k1 * (1.0 - b + b * lengths[para_id] / avg_len)
                    contrib[para_id] = contrib.get(para_id, 0.0) + weight * idf * tf / denom
            qtf = query_tf[term]
            for para_id, value in contrib.items():
                scores[para_id] = scores.get(para_id, 0.0) + qtf * value
        ranked = sorted((kv for kv in scores.items() if kv[1] > 0.0),
                        key=lambda kv: (-kv[1], kv[0]))[:n]
        return [RetrievalHit(pid, score, i + 1) for i, (pid, score) in enumerate(ranked)]

    def save(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        header = {
            "index_version": INDEX_VERSION,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "corpus_dir": self.corpus_dir,
            "n_paragraphs": self.n_paragraphs,
            "bm25": self.config.to_dict(),
            "avg_field_lengths": self._avg_lengths,
        }
        (out / "header.json").write_text(json.dumps(header, indent=2), encoding="utf-8")
        (out / "postings.json").write_text(
            json.dumps({f: {t: [list(e) for e in entries]
                            for t, entries in terms.items()}
                        for f, terms in self._postings.items()}),
            encoding="utf-8")
        (out / "lengths.json").write_text(json.dumps(self._field_lengths), encoding="utf-8")
        (out / "paragraph_ids.json").write_text(json.dumps(self.paragraph_ids), encoding="utf-8")

    @classmethod
    def load(cls, index_dir: str | Path) -> "SearchIndex":
        root = Path(index_dir)
        header_path = root / "header.json"
        if not header_path.exists():
            raise CorpusError(f"not an index directory: {root}")
        header = json.loads(header_path.read_text(encoding="utf-8"))
        if header.get("index_version") != INDEX_VERSION:
            raise CorpusError(
                f"unsupported index version {header.get('index_version')!r}")
        postings_raw = json.loads((root / "postings.json").read_text(encoding="utf-8"))
        postings = {f: {t: [(e[0], e[1]) for e in entries]
                        for t, entries in terms.items()}
                    for f, terms in postings_raw.items()}
        lengths = json.loads((root / "lengths.json").read_text(encoding="utf-8"))
        paragraph_ids = json.loads((root / "paragraph_ids.json").read_text(encoding="utf-8"))
        return cls(
            config=Bm25Config.from_dict(header["bm25"]),
            postings=postings,
            field_lengths=lengths,
            paragraph_ids=paragraph_ids,
            corpus_dir=header.get("corpus_dir", ""),
        )


def build_index(store: CorpusStore, config: Bm25Config | None = None) -> SearchIndex:
    """Index every paragraph of an ingested corpus.

    Raises :class:`CorpusError` when the store holds no paragraphs.
    """
    config = config or Bm25Config()
    if len(store) == 0:
        raise CorpusError("cannot index an empty corpus")
    postings: dict[str, dict[str, list[tuple[str, int]]]] = {f: {} for f in FIELDS}
    field_lengths: dict[str, dict[str, int]] = {f: {} for f in FIELDS}
    paragraph_ids: list[str] = []
    doc_field_tokens: dict[str, dict[str, list[str]]] = {}

    for para in store.iter_paragraphs():
        if para.doc_id not in doc_field_tokens:
            doc = store.get_document(para.doc_id)
            doc_field_tokens[para.doc_id] = {
                "title": tokenize_normalize(doc.title),
                "abstract": tokenize_normalize(doc.abstract),
            }
        tokens_by_field = {
            "body": tokenize_normalize(para.text),
            "title": doc_field_tokens[para.doc_id]["title"],
            "abstract": doc_field_tokens[para.doc_id]["abstract"],
        }
        paragraph_ids.append(para.para_id)
        for fname, tokens in tokens_by_field.items():
            field_lengths[fname][para.para_id] = len(tokens)
            for term, tf in Counter(tokens).items():
                postings[fname].setdefault(term, []).append((para.para_id, tf))

    for terms in postings.values():
        for entries in terms.values():
            entries.sort(key=lambda e: e[0])
    index = SearchIndex(config, postings, field_lengths, paragraph_ids,
                        corpus_dir=str(store.root))
    logger.info("indexed %d paragraphs, %d body terms",
                index.n_paragraphs, len(postings["body"]))
    return index
