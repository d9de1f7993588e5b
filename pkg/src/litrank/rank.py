"""Answer re-ranking: keyword matching, ensemble confidence, combined score.

The combined score is ``match + alpha * confidence`` where the matching
score rewards keyword frequency (dampened for short paragraphs through a
logistic sigmoid on the word count) and keyword diversity, and the
confidence score fuses the two QA backends' probabilities.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field as dc_field
from enum import Enum
from typing import Protocol, Sequence

from .corpus import Paragraph
from .evidence import EvidenceCandidate
from .index import STOPWORDS, tokenize_normalize

logger = logging.getLogger(__name__)

# Closed-class words excluded from keyword extraction on top of the
# stopword list: pronouns, auxiliaries, modals, question words, and other
# function words that a part-of-speech tagger would not label as noun,
# verb (content), or adjective.
CLOSED_CLASS = frozenset("""
also although among anybody anyone anything around besides beyond can
cannot could done else even ever every everybody everyone everything hers
herself him himself his however instead many may maybe mine must neither
nobody none nothing now often one ones onto others otherwise ought per
perhaps quite rather regarding shall should since somebody someone
something sometimes somewhat soon still therefore thus toward towards
unless unlike upon us versus via whatever whenever whereas wherever
whether whichever whoever whose within without would yet
""".split())


class TieBreak(str, Enum):
    """How equal re-rank scores are ordered."""

    CONFIDENCE_THEN_ID = "confidence_then_id"
    ID_ONLY = "id_only"


@dataclass
class ScoringConfig:
    """Re-ranking hyperparameters.

    ``lambda1``/``lambda2`` weight the frequency and diversity terms of the
    matching score, ``length_cutoff`` centers the sigmoid length penalty
    (in words), and ``alpha`` weights the confidence score in the final sum.
    """

    lambda1: float = 0.2
    lambda2: float = 10.0
    length_cutoff: int = 50
    alpha: float = 0.5
    tie_break: TieBreak = TieBreak.CONFIDENCE_THEN_ID

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "alpha"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.length_cutoff < 0:
            raise ValueError("length_cutoff must be >= 0")
        if isinstance(self.tie_break, str):
            self.tie_break = TieBreak(self.tie_break)

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "length_cutoff": self.length_cutoff,
            "alpha": self.alpha,
            "tie_break": self.tie_break.value,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ScoringConfig":
        return cls(
            lambda1=obj.get("lambda1", 0.2),
            lambda2=obj.get("lambda2", 10.0),
            length_cutoff=obj.get("length_cutoff", 50),
            alpha=obj.get("alpha", 0.5),
            tie_break=TieBreak(obj.get("tie_break", "confidence_then_id")),
        )


@dataclass
class KeywordStats:
    """Keyword occurrence counts for one paragraph."""

    keywords: list[str]
    total_occurrences: int
    distinct_present: int


@dataclass
class RankedSnippet:
    para_id: str
    evidence: EvidenceCandidate
    match_score: float
    confidence: float
    rerank_score: float
    highlight_spans: list[tuple[int, int]] = dc_field(default_factory=list)


class KeywordTagger(Protocol):
    def keywords(self, query: str) -> list[str]: ...


class LexiconKeywordTagger:
    """Default tagger: drop stopwords and closed-class function words.

    Approximates selecting nouns, verbs, and adjectives without a tagging
    model; remote or model-backed taggers can be plugged in through the
    same interface.
    """

    def keywords(self, query: str) -> list[str]:
        out: list[str] = []
        for token in tokenize_normalize(query):
            if token in STOPWORDS or token in CLOSED_CLASS:
                continue
            if token not in out:
                out.append(token)
        return out


_DEFAULT_TAGGER = LexiconKeywordTagger()


def extract_keywords(query: str, tagger: KeywordTagger | None = None) -> list[str]:
    """Ordered, deduplicated keywords selected from the query."""
    return (tagger or _DEFAULT_TAGGER).keywords(query)


def keyword_stats(keywords: Sequence[str], paragraph_text: str) -> KeywordStats:
    """Count keyword occurrences over the paragraph's normalized tokens."""
    counts = Counter(tokenize_normalize(paragraph_text))
    total = sum(counts[k] for k in keywords)
    distinct = sum(1 for k in keywords if counts[k] > 0)
    return KeywordStats(list(keywords), total, distinct)


def sigmoid(x: float) -> float:
    """Numerically stable logistic function."""
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def matching_score(stats: KeywordStats, paragraph_words: int,
                   config: ScoringConfig) -> float:
    """Keyword matching score with the sigmoid length damping.

    ``lambda1 * total_occurrences * sigmoid(words - cutoff) +
    lambda2 * distinct_present``; paragraphs shorter than the cutoff see
    their frequency term scaled down.
    """
    if paragraph_words < 0:
        raise ValueError("paragraph_words must be >= 0")
    return (config.lambda1 * stats.total_occurrences
            * sigmoid(paragraph_words - config.length_cutoff)
            + config.lambda2 * stats.distinct_present)


def confidence_score(generalist_score: float | None,
                     domain_score: float | None) -> float:
    """Ensemble confidence from the two backends' best span scores.

    When both scores are negative (logit-style backends):
    ``0.5 * min(|g|, |d|) - max(|g|, |d|)``; otherwise their sum. With one
    backend missing the present score is used as-is and the degradation
    is logged; both missing is an error.
    """
    if generalist_score is None and domain_score is None:
        raise ValueError("no backend scores present")
    if generalist_score is None or domain_score is None:
        present = "domain_expert" if generalist_score is None else "generalist"
        logger.warning("confidence degraded to single backend (%s)", present)
        return domain_score if generalist_score is None else generalist_score
    if generalist_score < 0 and domain_score < 0:
        low = abs(generalist_score)
        high = abs(domain_score)
        return 0.5 * min(low, high) - max(low, high)
    return generalist_score + domain_score


def rerank(candidates: Sequence[tuple[Paragraph, EvidenceCandidate]],
           query: str, config: ScoringConfig | None = None,
           tagger: KeywordTagger | None = None) -> list[RankedSnippet]:
    """Order candidate paragraphs by the combined re-rank score.

    Ties go to the higher confidence, then to the ascending para_id
    (``TieBreak.ID_ONLY`` skips the confidence step). Paragraphs whose
    evidence carries no backend score at all contribute zero confidence.
    """
    if not candidates:
        raise ValueError("candidates must be nonempty")
    config = config or ScoringConfig()
    keywords = extract_keywords(query, tagger)
    snippets = []
    for paragraph, ev in candidates:
        stats = keyword_stats(keywords, paragraph.text)
        match = matching_score(stats, paragraph.word_count, config)
        if ev.generalist_score is None and ev.domain_score is None:
            conf = 0.0
        else:
            conf = confidence_score(ev.generalist_score, ev.domain_score)
        snippets.append(RankedSnippet(
            para_id=paragraph.para_id,
            evidence=ev,
            match_score=match,
            confidence=conf,
            rerank_score=match + config.alpha * conf,
            highlight_spans=[paragraph.sentences[i] for i in ev.evidence_sentences],
        ))
    if config.tie_break is TieBreak.ID_ONLY:
        snippets.sort(key=lambda s: (-s.rerank_score, s.para_id))
    else:
        snippets.sort(key=lambda s: (-s.rerank_score, -s.confidence, s.para_id))
    return snippets
