"""Independent reference implementations used by the tests."""
import itertools
import math
from fractions import Fraction

import numpy as np


def naive_entropy(block):
    counts = {}
    for v in np.asarray(block).ravel().tolist():
        counts[v] = counts.get(v, 0) + 1
    n = sum(counts.values())
    return -sum(c / n * math.log2(c / n) for c in counts.values())


def brute_origins(dim, tile, overlap):
    s = max(1, int(np.floor(tile * (1 - overlap) + 0.5)))
    return [p for p in range(dim) if p + tile <= dim and (p % s == 0 or p == dim - tile)]


def weight_oracle(scores, labels, m=100):
    """Exhaustive simplex search in exact rational arithmetic.

    Ranking: most correct, then smallest mean |1/2 - score| over the wrong
    images, then largest mean signed margin, then closest to uniform, then
    lexicographically largest vector.
    """
    scores = [[Fraction(float(v)) for v in row] for row in scores]
    k, n = len(scores), len(scores[0])
    half = Fraction(1, 2)
    best, best_key = None, None
    for combo in itertools.product(range(m + 1), repeat=k):
        if sum(combo) != m:
            continue
        w = [Fraction(c, m) for c in combo]
        wrong = []
        margin = Fraction(0)
        for j in range(n):
            s = sum(w[i] * scores[i][j] for i in range(k))
            margin += (s - half) if labels[j] else (half - s)
            if (s >= half) != bool(labels[j]):
                wrong.append(abs(half - s))
        e = sum(wrong, Fraction(0)) / len(wrong) if wrong else Fraction(0)
        spread = sum((wi - Fraction(1, k)) ** 2 for wi in w)
        key = (len(wrong), e, -margin / n, spread, tuple(-c for c in combo))
        if best_key is None or key < best_key:
            best, best_key = combo, key
    return np.array(best) / m
