"""Evaluation harness: sentence-ranking metrics and ROUGE.

Ranking follows the per-article protocol: an article is split into
paragraphs, one evidence sentence is selected per paragraph, the
sentences are ordered by the re-rank score, and the rank of the first
sentence containing the gold answer feeds MRR (reciprocal rank, zero
when no candidate is golden), P@1, and R@3.

ROUGE-1/2 use clipped n-gram counts, ROUGE-L the longest common
subsequence over the full token sequences, and ROUGE-SU4 skip-bigrams
with a maximum skip distance of four plus unigrams. Multiple references
aggregate by the per-metric maximum. Tokenization is lowercased
alphanumeric with no stemming or stopword removal.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import Paragraph, pack_block
from .evidence import gather_evidence
from .index import tokenize_normalize
from .rank import (ScoringConfig, confidence_score, extract_keywords,
                   keyword_stats, matching_score)

logger = logging.getLogger(__name__)

FORMATS = ("covidqa_like", "debatepedia_like", "duc_like")


# ---------------------------------------------------------------------------
# Sentence ranking
# ---------------------------------------------------------------------------

@dataclass
class ScoredCandidate:
    """One evidence sentence (per paragraph) with its re-rank score."""

    paragraph_index: int
    sentence_index: int
    score: float


@dataclass
class RankingCase:
    query: str
    candidates: list[ScoredCandidate]
    gold: set[tuple[int, int]]
    n_paragraphs: int = 0


def ranked_candidates(case: RankingCase) -> list[ScoredCandidate]:
    """Candidates by descending score; ties by paragraph order."""
    return sorted(case.candidates,
                  key=lambda c: (-c.score, c.paragraph_index, c.sentence_index))


def first_gold_rank(case: RankingCase) -> int | None:
    """1-based rank of the first golden candidate, or None when absent."""
    for rank, candidate in enumerate(ranked_candidates(case), start=1):
        if (candidate.paragraph_index, candidate.sentence_index) in case.gold:
            return rank
    return None


def mrr(cases: Sequence[RankingCase]) -> float:
    """Mean reciprocal rank of the first golden sentence; misses score 0."""
    if not cases:
        raise ValueError("cases must be nonempty")
    total = 0.0
    for case in cases:
        rank = first_gold_rank(case)
        total += (1.0 / rank) if rank is not None else 0.0
    return total / len(cases)


def p_at_1(cases: Sequence[RankingCase]) -> float:
    """Fraction of cases whose top-ranked candidate is golden."""
    if not cases:
        raise ValueError("cases must be nonempty")
    hits = sum(1 for case in cases if first_gold_rank(case) == 1)
    return hits / len(cases)


def r_at_3(cases: Sequence[RankingCase]) -> float:
    """Fraction of cases with a golden candidate in the top three."""
    if not cases:
        raise ValueError("cases must be nonempty")
    hits = 0
    for case in cases:
        rank = first_gold_rank(case)
        if rank is not None and rank <= 3:
            hits += 1
    return hits / len(cases)


@dataclass
class RankingReport:
    mrr: float
    p_at_1: float
    r_at_3: float
    n_cases: int
    max_words: int = 0

    def to_dict(self) -> dict:
        return {
            "mrr": self.mrr,
            "p_at_1": self.p_at_1,
            "r_at_3": self.r_at_3,
            "n_cases": self.n_cases,
            "max_words": self.max_words,
        }


def evaluate_ranking(cases: Sequence[RankingCase], max_words: int = 0) -> RankingReport:
    return RankingReport(mrr(cases), p_at_1(cases), r_at_3(cases),
                         len(cases), max_words)


# ---------------------------------------------------------------------------
# ROUGE
# ---------------------------------------------------------------------------

def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _clipped_overlap(candidate: Counter, reference: Counter) -> int:
    return sum(min(count, reference[gram])
               for gram, count in candidate.items() if gram in reference)


def _max_per_metric(scores: list[dict]) -> dict:
    return {
        "recall": max(s["recall"] for s in scores),
        "precision": max(s["precision"] for s in scores),
        "f1": max(s["f1"] for s in scores),
    }


def rouge_n(candidate: str, references: Sequence[str], n: int) -> dict:
    """Clipped n-gram ROUGE (n in {1, 2}); multi-reference maximum."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    if not references:
        raise ValueError("references must be nonempty")
    cand = _ngrams(tokenize_normalize(candidate), n)
    cand_total = sum(cand.values())
    scores = []
    for reference in references:
        ref = _ngrams(tokenize_normalize(reference), n)
        ref_total = sum(ref.values())
        overlap = _clipped_overlap(cand, ref)
        precision = overlap / cand_total if cand_total else 0.0
        recall = overlap / ref_total if ref_total else 0.0
        scores.append({"recall": recall, "precision": precision,
                       "f1": _f1(precision, recall)})
    return _max_per_metric(scores)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: str, references: Sequence[str]) -> dict:
    """LCS-based ROUGE over the full token sequences; multi-ref maximum."""
    if not references:
        raise ValueError("references must be nonempty")
    cand_tokens = tokenize_normalize(candidate)
    scores = []
    for reference in references:
        ref_tokens = tokenize_normalize(reference)
        lcs = _lcs_length(cand_tokens, ref_tokens)
        precision = lcs / len(cand_tokens) if cand_tokens else 0.0
        recall = lcs / len(ref_tokens) if ref_tokens else 0.0
        scores.append({"recall": recall, "precision": precision,
                       "f1": _f1(precision, recall)})
    return _max_per_metric(scores)


def _skip_units(tokens: Sequence[str], max_skip: int) -> Counter:
    """Unigrams plus skip-bigrams within the skip distance, as one multiset."""
    units: Counter = Counter()
    for i, token in enumerate(tokens):
        units[("u", token)] += 1
        for j in range(i + 1, min(i + max_skip + 1, len(tokens))):
            units[("s", token, tokens[j])] += 1
    return units


def rouge_su4(candidate: str, references: Sequence[str], max_skip: int = 4) -> dict:
    """Skip-bigrams (max distance 4) plus unigrams; multi-ref maximum.

    Distance is measured between token positions, so adjacent tokens are
    at distance one and a pair at distance four has three tokens between.
    """
    if not references:
        raise ValueError("references must be nonempty")
    cand = _skip_units(tokenize_normalize(candidate), max_skip)
    cand_total = sum(cand.values())
    scores = []
    for reference in references:
        ref = _skip_units(tokenize_normalize(reference), max_skip)
        ref_total = sum(ref.values())
        overlap = _clipped_overlap(cand, ref)
        precision = overlap / cand_total if cand_total else 0.0
        recall = overlap / ref_total if ref_total else 0.0
        scores.append({"recall": recall, "precision": precision,
                       "f1": _f1(precision, recall)})
    return _max_per_metric(scores)


@dataclass
class RougeReport:
    rouge_1: dict
    rouge_2: dict
    rouge_l: dict
    rouge_su4: dict

    def to_dict(self) -> dict:
        return {
            "rouge_1": self.rouge_1,
            "rouge_2": self.rouge_2,
            "rouge_l": self.rouge_l,
            "rouge_su4": self.rouge_su4,
        }


def rouge_report(candidate: str, references: Sequence[str]) -> RougeReport:
    return RougeReport(
        rouge_1=rouge_n(candidate, references, 1),
        rouge_2=rouge_n(candidate, references, 2),
        rouge_l=rouge_l(candidate, references),
        rouge_su4=rouge_su4(candidate, references),
    )


# ---------------------------------------------------------------------------
# Dataset adapters
# ---------------------------------------------------------------------------

@dataclass
class RankingRecord:
    record_id: str
    query: str
    article: str
    answers: list[str]


@dataclass
class SummarizationRecord:
    record_id: str
    query: str
    documents: list[dict]
    references: list[str]
    budget: int | None = None


@dataclass
class LoadResult:
    records: list
    rejected: list[dict] = field(default_factory=list)

    @property
    def n_rejected(self) -> int:
        return len(self.rejected)


def _reject(rejected: list[dict], index: int, reason: str) -> None:
    logger.warning("rejected record %d: %s", index, reason)
    rejected.append({"index": index, "reason": reason})


def load_dataset(path: str | Path, fmt: str) -> LoadResult:
    """Load a dataset file into typed records with per-record rejection.

    ``covidqa_like``: ``{"cases": [{"id", "query", "article",
    "answers": [str, ...]}]}``.
    ``debatepedia_like``: ``{"cases": [{"id", "query",
    "documents": [str, ...], "references": [str, ...]}]}``.
    ``duc_like``: ``{"topics": [{"id", "query", "documents":
    [{"doc_id", "date", "text"}, ...], "references": [str, ...],
    "budget": int}]}``.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown dataset format: {fmt!r}")
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    records: list = []
    rejected: list[dict] = []
    if fmt == "covidqa_like":
        entries = payload.get("cases")
        if not isinstance(entries, list):
            raise ValueError("covidqa_like file must contain a 'cases' list")
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict):
                _reject(rejected, i, "entry is not an object")
                continue
            query = entry.get("query")
            article = entry.get("article")
            answers = entry.get("answers")
            if not isinstance(query, str) or not query.strip():
                _reject(rejected, i, "missing query")
                continue
            if not isinstance(article, str) or not article.strip():
                _reject(rejected, i, "missing article")
                continue
            if (not isinstance(answers, list) or not answers
                    or not all(isinstance(a, str) and a.strip() for a in answers)):
                _reject(rejected, i, "missing gold answers")
                continue
            records.append(RankingRecord(str(entry.get("id", i)), query,
                                         article, list(answers)))
    else:
        key = "cases" if fmt == "debatepedia_like" else "topics"
        entries = payload.get(key)
        if not isinstance(entries, list):
            raise ValueError(f"{fmt} file must contain a {key!r} list")
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict):
                _reject(rejected, i, "entry is not an object")
                continue
            query = entry.get("query")
            references = entry.get("references")
            documents = entry.get("documents")
            if not isinstance(query, str) or not query.strip():
                _reject(rejected, i, "missing query")
                continue
            if (not isinstance(references, list) or not references
                    or not all(isinstance(r, str) and r.strip() for r in references)):
                _reject(rejected, i, "missing references")
                continue
            if not isinstance(documents, list) or not documents:
                _reject(rejected, i, "missing documents")
                continue
            if fmt == "debatepedia_like":
                if not all(isinstance(d, str) and d.strip() for d in documents):
                    _reject(rejected, i, "documents must be strings")
                    continue
                docs = [{"doc_id": f"{i}-{j}", "date": None, "text": d}
                        for j, d in enumerate(documents)]
                budget = None
            else:
                docs = []
                bad = False
                for j, d in enumerate(documents):
                    if not isinstance(d, dict) or not isinstance(d.get("text"), str):
                        bad = True
                        break
                    docs.append({"doc_id": str(d.get("doc_id", f"{i}-{j}")),
                                 "date": d.get("date"), "text": d["text"]})
                if bad:
                    _reject(rejected, i, "documents must carry text")
                    continue
                budget = entry.get("budget", 250)
            records.append(SummarizationRecord(str(entry.get("id", i)), query,
                                               docs, list(references), budget))
    return LoadResult(records, rejected)


# ---------------------------------------------------------------------------
# Pipeline driver for ranking records
# ---------------------------------------------------------------------------

def normalized_text(text: str) -> str:
    return " ".join(tokenize_normalize(text))


def gold_sentence_refs(paragraphs: Sequence[Paragraph],
                       answers: Sequence[str]) -> set[tuple[int, int]]:
    """Sentence refs whose normalized text contains a gold answer string."""
    gold: set[tuple[int, int]] = set()
    norm_answers = [normalized_text(a) for a in answers if normalized_text(a)]
    for p_idx, paragraph in enumerate(paragraphs):
        for s_idx in range(len(paragraph.sentences)):
            sentence = normalized_text(paragraph.sentence_text(s_idx))
            if any(answer in sentence for answer in norm_answers):
                gold.add((p_idx, s_idx))
    return gold


def split_article(article: str, max_words: int, case_id: str = "case") -> list[Paragraph]:
    """Pack a raw article into standalone paragraphs for the protocol."""
    paragraphs = []
    for i, (text, sentence_offsets) in enumerate(pack_block(article, max_words)):
        paragraphs.append(Paragraph(
            para_id=f"{case_id}:{i:04d}", doc_id=case_id, text=text,
            word_count=len(text.split()), sentences=sentence_offsets))
    return paragraphs


def build_ranking_case(record: RankingRecord, backends: dict[str, object],
                       config: ScoringConfig, max_words: int = 100) -> RankingCase:
    """Run the selection-and-scoring protocol for one article.

    Each paragraph contributes its first evidence sentence (the first
    sentence overlapping a fused span; sentence 0 with no confidence when
    the backends found nothing) scored by the combined re-rank score.
    """
    paragraphs = split_article(record.article, max_words, record.record_id)
    keywords = extract_keywords(record.query)
    candidates = []
    for p_idx, paragraph in enumerate(paragraphs):
        ev, _ = gather_evidence(record.query, paragraph, backends)
        stats = keyword_stats(keywords, paragraph.text)
        match = matching_score(stats, paragraph.word_count, config)
        if ev.generalist_score is None and ev.domain_score is None:
            conf = 0.0
        else:
            conf = confidence_score(ev.generalist_score, ev.domain_score)
        sentence_index = ev.evidence_sentences[0] if ev.evidence_sentences else 0
        candidates.append(ScoredCandidate(
            paragraph_index=p_idx,
            sentence_index=sentence_index,
            score=match + config.alpha * conf,
        ))
    return RankingCase(
        query=record.query,
        candidates=candidates,
        gold=gold_sentence_refs(paragraphs, record.answers),
        n_paragraphs=len(paragraphs),
    )


def build_ranking_cases(records: Sequence[RankingRecord],
                        backends: dict[str, object],
                        config: ScoringConfig | None = None,
                        max_words: int = 100) -> list[RankingCase]:
    config = config or ScoringConfig()
    return [build_ranking_case(r, backends, config, max_words) for r in records]


def format_report_table(report: dict, title: str = "metrics") -> str:
    """Small aligned two-column table for terminal output."""
    rows = list(_flatten(report))
    width = max(len(name) for name, _ in rows) if rows else 0
    lines = [title, "-" * max(len(title), width + 10)]
    for name, value in rows:
        if isinstance(value, float):
            lines.append(f"{name.ljust(width)}  {value:.6f}")
        else:
            lines.append(f"{name.ljust(width)}  {value}")
    return "\n".join(lines)


def _flatten(obj: dict, prefix: str = ""):
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flatten(value, name + ".")
        else:
            yield name, value
