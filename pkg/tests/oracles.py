"""Independent brute-force reference implementations used by the tests.

Everything here recomputes results the slow, obvious way (full scans,
window enumeration, memoized recursion) so the package code is checked
against a second route. Tokenization and the stopword lexicon are shared
input conventions; the math and ranking logic are reimplemented.
"""

from __future__ import annotations

import math
from functools import lru_cache

from litrank.index import STOPWORDS, tokenize_normalize, tokenize_with_offsets
from litrank.rank import extract_keywords

FIELD_ORDER = ("body", "title", "abstract")


# ---------------------------------------------------------------------------
# BM25
# ---------------------------------------------------------------------------

def bm25_rank(paragraphs: list[dict], query: str, n: int,
              k1: float = 0.9, b: float = 0.75,
              weights: dict | None = None) -> list[tuple[str, float]]:
    """Score every paragraph by brute force and return the top ``n``.

    ``paragraphs``: dicts with para_id/body/title/abstract. Zero-score
    paragraphs are dropped; ties break on ascending para_id.
    """
    weights = weights or {"body": 1.0, "title": 0.5, "abstract": 0.5}
    tokens = {
        p["para_id"]: {f: tokenize_normalize(p[f]) for f in FIELD_ORDER}
        for p in paragraphs
    }
    total = len(paragraphs)
    lengths = {f: [len(tokens[p["para_id"]][f]) for p in paragraphs]
               for f in FIELD_ORDER}
    avg = {f: (sum(lengths[f]) / total if total else 0.0) for f in FIELD_ORDER}

    query_tokens = tokenize_normalize(query)
    unique_terms = sorted(set(query_tokens))
    dfs = {
        f: {t: sum(1 for p in paragraphs
                   if t in tokens[p["para_id"]][f])
            for t in unique_terms}
        for f in FIELD_ORDER
    }
    scored = []
    for i, p in enumerate(paragraphs):
        pid = p["para_id"]
        score = 0.0
        for term in unique_terms:
            c = 0.0
            for f in FIELD_ORDER:
                tf = tokens[pid][f].count(term)
                if tf == 0:
                    continue
                df = dfs[f][term]
                idf = math.log(1.0 + (total - df + 0.5) / (df + 0.5))
                denom = tf + k1 * (1.0 - b + b * lengths[f][i] / avg[f])
                c += weights[f] * idf * tf / denom
            score += query_tokens.count(term) * c
        if score > 0.0:
            scored.append((pid, score))
    scored.sort(key=lambda kv: (-kv[1], kv[0]))
    return scored[:n]


# ---------------------------------------------------------------------------
# Lexical evidence
# ---------------------------------------------------------------------------

def query_content_words(query: str) -> list[str]:
    seen = []
    for token in tokenize_normalize(query):
        if len(token) >= 2 and token not in STOPWORDS and token not in seen:
            seen.append(token)
    return seen


def lexical_spans(query: str, text: str,
                  sentences: list[tuple[int, int]]) -> list[tuple[int, int, float]]:
    """Enumerate every token window to find the lexical backend's answer."""
    words = query_content_words(query)
    if not words:
        return []
    per_sentence = []
    for s_start, s_end in sentences:
        toks = [(t.norm, t.start + s_start, t.end + s_start)
                for t in tokenize_with_offsets(text[s_start:s_end])]
        present = {w for w in words if any(t[0] == w for t in toks)}
        per_sentence.append((present, toks))
    best_idx = None
    for idx, (present, _) in enumerate(per_sentence):
        if best_idx is None or len(present) > len(per_sentence[best_idx][0]):
            best_idx = idx
    if best_idx is None or not per_sentence[best_idx][0]:
        return []
    present, toks = per_sentence[best_idx]
    best = None  # (width, start_index, end_index)
    for i in range(len(toks)):
        for j in range(i, len(toks)):
            window = {t[0] for t in toks[i:j + 1]}
            if present <= window:
                cand = (j - i, i, j)
                if best is None or cand[0] < best[0]:
                    best = cand
                break  # widening past j only grows the window
    assert best is not None
    _, i, j = best
    score = len(present) / len(words)
    return [(toks[i][1], toks[j][2], score)]


# ---------------------------------------------------------------------------
# Re-rank scoring (independent transcription of the scoring formulas)
# ---------------------------------------------------------------------------

def sigma(x: float) -> float:
    s = 1.0 / (1.0 + math.exp(-abs(x)))
    return s if x >= 0 else 1.0 - s


def match_score(query: str, text: str, words: int,
                lambda1: float = 0.2, lambda2: float = 10.0,
                cutoff: int = 50) -> float:
    keywords = extract_keywords(query)
    tokens = tokenize_normalize(text)
    freq = sum(tokens.count(k) for k in keywords)
    num = sum(1 for k in keywords if k in tokens)
    return lambda1 * freq * sigma(words - cutoff) + lambda2 * num


def conf_score(first: float | None, second: float | None) -> float:
    if first is None and second is None:
        return 0.0
    if first is None:
        return second
    if second is None:
        return first
    if first < 0 and second < 0:
        values = sorted([abs(first), abs(second)])
        return 0.5 * values[0] - values[1]
    return first + second


def rerank_order(entries: list[dict], query: str, alpha: float = 0.5,
                 lambda1: float = 0.2, lambda2: float = 10.0,
                 cutoff: int = 50) -> list[dict]:
    """Entries: {para_id, text, words, generalist, domain}. Returns scored
    entries in final order (score desc, confidence desc, para_id asc)."""
    scored = []
    for entry in entries:
        m = match_score(query, entry["text"], entry["words"],
                        lambda1, lambda2, cutoff)
        c = conf_score(entry.get("generalist"), entry.get("domain"))
        scored.append(dict(entry, match=m, confidence=c,
                           score=m + alpha * c))
    scored.sort(key=lambda e: (-e["score"], -e["confidence"], e["para_id"]))
    return scored


# ---------------------------------------------------------------------------
# Embedding / extractive
# ---------------------------------------------------------------------------

def elementwise_mean(vectors: list[list[float]]) -> list[float]:
    dim = len(vectors[0])
    out = []
    for d in range(dim):
        s = 0.0
        for vec in vectors:
            s += vec[d]
        out.append(s / len(vectors))
    return out


def cosine_sim(u: list[float], v: list[float]) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


def top_k_by_cosine(query_vec: list[float],
                    candidates: list[tuple[int, int, list[float]]],
                    k: int = 3) -> list[tuple[int, int]]:
    """Candidates: (para_rank, sentence_index, vector); returns refs ranked."""
    scored = [(para_rank, sent_idx, cosine_sim(query_vec, vec))
              for para_rank, sent_idx, vec in candidates]
    scored.sort(key=lambda t: (-t[2], t[0], t[1]))
    return [(p, s) for p, s, _ in scored[:k]]


# ---------------------------------------------------------------------------
# ROUGE
# ---------------------------------------------------------------------------

def _count(items) -> dict:
    out: dict = {}
    for item in items:
        out[item] = out.get(item, 0) + 1
    return out


def _prf(overlap: int, cand_total: int, ref_total: int) -> dict:
    precision = overlap / cand_total if cand_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return {"recall": recall, "precision": precision, "f1": f1}


def _best(scores: list[dict]) -> dict:
    return {key: max(s[key] for s in scores)
            for key in ("recall", "precision", "f1")}


def rouge_n(candidate: str, references: list[str], n: int) -> dict:
    cand_tokens = tokenize_normalize(candidate)
    cand_grams = _count(tuple(cand_tokens[i:i + n])
                        for i in range(len(cand_tokens) - n + 1))
    results = []
    for reference in references:
        ref_tokens = tokenize_normalize(reference)
        ref_grams = _count(tuple(ref_tokens[i:i + n])
                           for i in range(len(ref_tokens) - n + 1))
        overlap = 0
        for gram, count in ref_grams.items():
            overlap += min(count, cand_grams.get(gram, 0))
        results.append(_prf(overlap, sum(cand_grams.values()),
                            sum(ref_grams.values())))
    return _best(results)


def lcs_length(a: tuple, b: tuple) -> int:
    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> int:
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + rec(i + 1, j + 1)
        return max(rec(i + 1, j), rec(i, j + 1))

    result = rec(0, 0)
    rec.cache_clear()
    return result


def rouge_l(candidate: str, references: list[str]) -> dict:
    cand_tokens = tuple(tokenize_normalize(candidate))
    results = []
    for reference in references:
        ref_tokens = tuple(tokenize_normalize(reference))
        lcs = lcs_length(cand_tokens, ref_tokens)
        results.append(_prf(lcs, len(cand_tokens), len(ref_tokens)))
    return _best(results)


def skip_units(tokens: list[str], max_skip: int = 4) -> list[tuple]:
    units: list[tuple] = [("u", t) for t in tokens]
    for i in range(len(tokens)):
        for j in range(i + 1, len(tokens)):
            if j - i <= max_skip:
                units.append(("s", tokens[i], tokens[j]))
    return units


def rouge_su4(candidate: str, references: list[str]) -> dict:
    cand_units = _count(skip_units(tokenize_normalize(candidate)))
    results = []
    for reference in references:
        ref_units = _count(skip_units(tokenize_normalize(reference)))
        overlap = 0
        for unit, count in ref_units.items():
            overlap += min(count, cand_units.get(unit, 0))
        results.append(_prf(overlap, sum(cand_units.values()),
                            sum(ref_units.values())))
    return _best(results)


# ---------------------------------------------------------------------------
# End-to-end ranking protocol
# ---------------------------------------------------------------------------

def normalize_join(text: str) -> str:
    return " ".join(tokenize_normalize(text))


def case_rank_of_gold(query: str, article_paragraphs: list[dict],
                      answers: list[str], alpha: float = 0.5) -> int | None:
    """Re-derive the per-article protocol and find the first gold rank.

    ``article_paragraphs``: dicts with text/words/sentences (paragraph-
    relative offsets). Both QA roles are the builtin lexical backend, so
    fused evidence equals the single lexical span and the ensemble
    confidence doubles the coverage score.
    """
    candidates = []
    for p_idx, para in enumerate(article_paragraphs):
        spans = lexical_spans(query, para["text"], para["sentences"])
        if spans:
            start, end, coverage = spans[0]
            sentence_index = None
            for s_idx, (a, b) in enumerate(para["sentences"]):
                if start < b and a < end:
                    sentence_index = s_idx
                    break
            conf = conf_score(coverage, coverage)
        else:
            sentence_index = 0
            conf = 0.0
        m = match_score(query, para["text"], para["words"])
        candidates.append((p_idx, sentence_index, m + alpha * conf))
    order = sorted(candidates, key=lambda c: (-c[2], c[0], c[1]))

    norm_answers = [normalize_join(a) for a in answers if normalize_join(a)]
    gold = set()
    for p_idx, para in enumerate(article_paragraphs):
        for s_idx, (a, b) in enumerate(para["sentences"]):
            sent = normalize_join(para["text"][a:b])
            if any(ans in sent for ans in norm_answers):
                gold.add((p_idx, s_idx))
    for rank, (p_idx, s_idx, _) in enumerate(order, start=1):
        if (p_idx, s_idx) in gold:
            return rank
    return None


def ranking_metrics(ranks: list[int | None]) -> dict:
    n = len(ranks)
    mrr = sum((1.0 / r) for r in ranks if r is not None) / n
    p1 = sum(1 for r in ranks if r == 1) / n
    r3 = sum(1 for r in ranks if r is not None and r <= 3) / n
    return {"mrr": mrr, "p_at_1": p1, "r_at_3": r3}
