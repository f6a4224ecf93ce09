"""Reference implementations the library is checked against.

Each oracle is written from the behavioural description alone, in plain
Python, without calling into relmem.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import sqlite3


def cosine(a, b) -> float:
    dot = sum(float(x) * float(y) for x, y in zip(a, b))
    na = math.sqrt(sum(float(x) * float(x) for x in a))
    nb = math.sqrt(sum(float(y) * float(y) for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


def brute_force_search(records: dict[str, list[float]], query, k: int) -> list[str]:
    scored = [(-cosine(vec, query), rid) for rid, vec in records.items()]
    scored.sort()
    return [rid for _, rid in scored[:k]]


def trigram_counts(text: str) -> dict[str, int]:
    folded = " ".join(text.lower().split())
    padded = f" {folded} "
    counts: dict[str, int] = {}
    for i in range(len(padded) - 2):
        gram = padded[i : i + 3]
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def hashed_trigram_vector(text: str, dim: int = 256) -> list[float]:
    vec = [0.0] * dim
    for gram, n in trigram_counts(text).items():
        bucket = int.from_bytes(hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest(), "little") % dim
        vec[bucket] += n
    norm = math.sqrt(sum(v * v for v in vec))
    return [v / norm for v in vec]


def distinct_text_values(path: str, table: str, column: str) -> set[str]:
    conn = sqlite3.connect(path)
    try:
        rows = conn.execute(f'SELECT DISTINCT "{column}" FROM "{table}"').fetchall()
    finally:
        conn.close()
    return {r[0] for r in rows if isinstance(r[0], str) and r[0].strip()}


def multiset_equal(a_rows, b_rows) -> bool:
    return sorted(map(repr, a_rows)) == sorted(map(repr, b_rows))


def injective_match_brute(golds, retrieved, equal) -> bool:
    """Try every assignment of distinct retrieved results to the gold classes."""
    classes = []
    for g in golds:
        if not any(equal(g, c) for c in classes):
            classes.append(g)
    if len(classes) > len(retrieved):
        return False
    for perm in itertools.permutations(range(len(retrieved)), len(classes)):
        if all(equal(c, retrieved[j]) for c, j in zip(classes, perm)):
            return True
    return False


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f
