"""Comment-similarity metrics and attack-evaluation rates.

All text metrics report on a 0-100 scale. Inputs may be raw strings or
token sequences; either way they pass through ``normalize`` first
(lowercase, whitespace split, trailing punctuation stripped from each
token, empty tokens dropped).
"""
from __future__ import annotations

import math
import string
from collections import Counter
from typing import List, Sequence, Tuple, Union

Text = Union[str, Sequence[str]]

_PUNCT = string.punctuation


def normalize(text: Text) -> List[str]:
    words = text.split() if isinstance(text, str) else [w for tok in text for w in str(tok).split()]
    out = []
    for w in words:
        w = w.lower().rstrip(_PUNCT)
        if w:
            out.append(w)
    return out


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _bleu_stats(cand: Sequence[str], ref: Sequence[str], max_n: int = 4) -> List[Tuple[int, int]]:
    stats = []
    for n in range(1, max_n + 1):
        c, r = _ngrams(cand, n), _ngrams(ref, n)
        matched = sum(min(cnt, r[g]) for g, cnt in c.items())
        stats.append((matched, max(len(cand) - n + 1, 0)))
    return stats


def _combine(stats: Sequence[Tuple[int, int]], cand_len: int, ref_len: int) -> float:
    if cand_len == 0 or stats[0][0] == 0:
        return 0.0
    log_p = 0.0
    for n, (matched, total) in enumerate(stats, start=1):
        if n == 1:
            log_p += math.log(matched / total)
        else:
            log_p += math.log((matched + 1) / (total + 1))
    log_p /= len(stats)
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return 100.0 * bp * math.exp(log_p)


def bleu(candidate: Text, reference: Text) -> float:
    """Smoothed sentence-level BLEU-4.

    Unigram precision is unsmoothed; n>1 precisions get add-one smoothing.
    Includes the brevity penalty. An empty candidate scores 0.
    """
    cand, ref = normalize(candidate), normalize(reference)
    return _combine(_bleu_stats(cand, ref), len(cand), len(ref))


def corpus_bleu(candidates: Sequence[Text], references: Sequence[Text]) -> float:
    """Corpus BLEU-4 over pooled n-gram counts, smoothed like ``bleu``."""
    if len(candidates) != len(references):
        raise ValueError("candidates and references differ in length")
    totals = [[0, 0] for _ in range(4)]
    c_len = r_len = 0
    for c, r in zip(candidates, references):
        cand, ref = normalize(c), normalize(r)
        c_len += len(cand)
        r_len += len(ref)
        for n, (m, t) in enumerate(_bleu_stats(cand, ref)):
            totals[n][0] += m
            totals[n][1] += t
    return _combine([tuple(t) for t in totals], c_len, r_len)


def _lcs(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Text, reference: Text, beta: float = 1.2) -> float:
    """LCS F-measure; ``beta`` weights recall (beta^2 = 1.44)."""
    cand, ref = normalize(candidate), normalize(reference)
    if not cand or not ref:
        return 0.0
    lcs = _lcs(cand, ref)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(cand), lcs / len(ref)
    return 100.0 * (1 + beta ** 2) * p * r / (r + beta ** 2 * p)


def _align(cand: Sequence[str], ref: Sequence[str]) -> List[Tuple[int, int]]:
    # each candidate token takes the earliest unused identical reference token
    used = set()
    pairs = []
    for i, w in enumerate(cand):
        for j, v in enumerate(ref):
            if j not in used and v == w:
                used.add(j)
                pairs.append((i, j))
                break
    return pairs


def meteor_lite(candidate: Text, reference: Text, alpha: float = 0.9, gamma: float = 0.5,
                beta: float = 3.0) -> float:
    """METEOR restricted to exact unigram matches.

    Fmean = P*R / (alpha*P + (1-alpha)*R), i.e. 10PR/(R+9P) at the default
    alpha; penalty = gamma * (chunks/matches)^beta. No stemming or synonyms.
    """
    cand, ref = normalize(candidate), normalize(reference)
    if not cand or not ref:
        return 0.0
    pairs = _align(cand, ref)
    m = len(pairs)
    if m == 0:
        return 0.0
    chunks = 1
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if not (i1 == i0 + 1 and j1 == j0 + 1):
            chunks += 1
    p, r = m / len(cand), m / len(ref)
    fmean = p * r / (alpha * p + (1 - alpha) * r)
    penalty = gamma * (chunks / m) ** beta
    return 100.0 * fmean * (1 - penalty)


def relative_degradation(bleu_y: float, bleu_y_adv: float) -> float:
    """(BLEU(y) - BLEU(y')) / BLEU(y); 0 when the baseline BLEU is 0 (see ``is_degenerate``)."""
    if bleu_y == 0:
        return 0.0
    return (bleu_y - bleu_y_adv) / bleu_y


def is_degenerate(bleu_y: float) -> bool:
    return bleu_y == 0


def valid_rate(valid_count: int, total: int) -> float:
    if total <= 0:
        raise ValueError("valid_rate needs at least one example")
    return valid_count / total


def success_rate(r_d: float, v_r: float) -> float:
    return r_d * v_r
