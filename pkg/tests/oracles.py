"""Slow, obviously-correct reference implementations used as test oracles.

They share no code with the package: counting is done by explicit loops.
"""

from __future__ import annotations

import math
from itertools import combinations


def ngram_list(tokens, n):
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def rouge_n_oracle(cand, ref, n):
    c, r = ngram_list(cand, n), ngram_list(ref, n)
    overlap = 0
    for g in set(c):
        overlap += min(c.count(g), r.count(g))
    return _prf(overlap, len(c), len(r))


def lcs_oracle(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[-1][-1]


def rouge_l_oracle(cand, ref):
    return _prf(lcs_oracle(cand, ref), len(cand), len(ref))


def _prf(overlap, n_cand, n_ref):
    if n_cand == 0 or n_ref == 0:
        return 0.0, 0.0, 0.0
    p, r = overlap / n_cand, overlap / n_ref
    return p, r, (0.0 if p + r == 0 else 2 * p * r / (p + r))


def fragments_oracle(article, summary):
    """Greedy fragment matching as a plain double loop over every source start.

    Unlike the original Newsroom script, the source index is not advanced past
    a matched run, so a longer match starting inside it is still found.
    """
    out = []
    i = 0
    while i < len(summary):
        best, best_j = [], -1
        j = 0
        while j < len(article):
            if summary[i] == article[j]:
                ii, jj = i, j
                while ii < len(summary) and jj < len(article) and summary[ii] == article[jj]:
                    ii += 1
                    jj += 1
                if len(best) < ii - i:
                    best, best_j = summary[i:ii], j
            j += 1
        if best:
            out.append((tuple(best), best_j, i))
        i += max(len(best), 1)
    return out


def tau_b_oracle(x, y):
    conc = disc = tx = ty = 0
    pairs = list(combinations(range(len(x)), 2))
    for i, j in pairs:
        dx, dy = x[i] - x[j], y[i] - y[j]
        if dx == 0:
            tx += 1
        if dy == 0:
            ty += 1
        if dx * dy > 0:
            conc += 1
        elif dx * dy < 0:
            disc += 1
    n0 = len(pairs)
    denom = (n0 - tx) * (n0 - ty)
    return math.nan if denom == 0 else (conc - disc) / math.sqrt(denom)


def cts_oracle(query_tokens, pool, k):
    """pool: list of (tokens, position).  Exhaustive score, then full sort."""
    scored = []
    for tokens, position in pool:
        r1 = rouge_n_oracle(tokens, query_tokens, 1)[1]
        r2 = rouge_n_oracle(tokens, query_tokens, 2)[1]
        scored.append(((r1 + r2) / 2, position))
    scored.sort(key=lambda s: (-s[0], s[1]))
    return scored[: min(k, 10)]
