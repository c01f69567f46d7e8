"""Compiled 5-path census used by ``count_motifs`` on larger graphs."""

from __future__ import annotations

import numpy as np
from numba import njit

from .graph import TemporalBipartiteGraph
from .motif import MotifBudgetExceeded, path_tables


def _tables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    classes, alternatives = path_tables()
    width = max(len(a) for a in alternatives)
    alt = np.zeros((16, max(width, 1), 6), dtype=np.int64)
    n_alt = np.zeros(16, dtype=np.int64)
    for p, alts in enumerate(alternatives):
        n_alt[p] = len(alts)
        for j, seq in enumerate(alts):
            alt[p, j] = seq
    return np.array([int(c) for c in classes], dtype=np.int64), n_alt, alt


@njit(cache=True)
def _has(nbrs, offsets, node, other):
    lo = offsets[node]
    hi = offsets[node + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        x = nbrs[mid]
        if x == other:
            return True
        if x < other:
            lo = mid + 1
        else:
            hi = mid
    return False


@njit(cache=True)
def _census(offsets, nbrs, n_users, cls_of, n_alt, alt, budget, totals, per_user):
    seq = np.empty(6, dtype=np.int64)
    found = 0
    for v0 in range(n_users):
        seq[0] = v0
        for a in range(offsets[v0], offsets[v0 + 1]):
            w0 = nbrs[a]
            seq[1] = w0
            for b in range(offsets[w0], offsets[w0 + 1]):
                v1 = nbrs[b]
                if v1 == v0:
                    continue
                seq[2] = v1
                for c in range(offsets[v1], offsets[v1 + 1]):
                    w1 = nbrs[c]
                    if w1 == w0:
                        continue
                    seq[3] = w1
                    b0 = 1 if _has(nbrs, offsets, v0, w1) else 0
                    for d in range(offsets[w1], offsets[w1 + 1]):
                        v2 = nbrs[d]
                        if v2 == v0 or v2 == v1:
                            continue
                        seq[4] = v2
                        b3 = 8 if _has(nbrs, offsets, v2, w0) else 0
                        for e in range(offsets[v2], offsets[v2 + 1]):
                            w2 = nbrs[e]
                            if w2 == w0 or w2 == w1:
                                continue
                            seq[5] = w2
                            pattern = b0 | b3
                            if _has(nbrs, offsets, v0, w2):
                                pattern |= 2
                            if _has(nbrs, offsets, v1, w2):
                                pattern |= 4
                            smaller = False
                            for j in range(n_alt[pattern]):
                                for k in range(6):
                                    x = seq[alt[pattern, j, k]]
                                    if x != seq[k]:
                                        if x < seq[k]:
                                            smaller = True
                                        break
                                if smaller:
                                    break
                            if smaller:
                                continue
                            found += 1
                            if budget >= 0 and found > budget:
                                return -1
                            cls = cls_of[pattern]
                            totals[cls] += 1
                            per_user[v0, cls] += 1
                            per_user[v1, cls] += 1
                            per_user[v2, cls] += 1
    return found


def count_paths(graph: TemporalBipartiteGraph, max_candidates: int | None):
    offsets, nbrs, _ = graph._csr
    cls_of, n_alt, alt = _tables()
    totals = np.zeros(8, dtype=np.int64)
    per_user = np.zeros((graph.primary_count, 8), dtype=np.int64)
    budget = -1 if max_candidates is None else int(max_candidates)
    status = _census(np.ascontiguousarray(offsets, dtype=np.int64), np.ascontiguousarray(nbrs, dtype=np.int64),
                     graph.primary_count, cls_of, n_alt, alt, budget, totals, per_user)
    if status < 0:
        raise MotifBudgetExceeded(max_candidates)
    return totals[:7].tolist(), per_user[:, :7].tolist()
