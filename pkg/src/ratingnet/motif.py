"""Exact 6-node bipartite motif census and the chord-class clustering coefficients.

Every set of three users and three items is classified by its induced
subgraph: a spanning 6-cycle with ``k`` chords (``SIGMA0`` .. ``SIGMA3``), a
spanning 5-path that is not closed into a cycle, with ``k`` extra induced
edges (``KAPPA0`` .. ``KAPPA2``), or nothing of interest (``NONE``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from typing import Sequence

from .graph import TemporalBipartiteGraph


class MotifBudgetExceeded(RuntimeError):
    def __init__(self, limit: int) -> None:
        super().__init__(f"motif enumeration exceeded the budget of {limit} candidate node sets")
        self.limit = limit


class MotifClass(enum.IntEnum):
    SIGMA0 = 0
    SIGMA1 = 1
    SIGMA2 = 2
    SIGMA3 = 3
    KAPPA0 = 4
    KAPPA1 = 5
    KAPPA2 = 6
    NONE = 7


@dataclass(frozen=True)
class MotifCounts:
    sigma: tuple[int, int, int, int] = (0, 0, 0, 0)
    kappa: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self) -> None:
        if len(self.sigma) != 4 or len(self.kappa) != 3:
            raise ValueError("MotifCounts needs 4 sigma and 3 kappa counters")
        if min(self.sigma) < 0 or min(self.kappa) < 0:
            raise ValueError("motif counters must be nonnegative")

    @classmethod
    def from_vector(cls, v: Sequence[int]) -> "MotifCounts":
        """Build from the 7-vector ``sigma0..sigma3, kappa0..kappa2``."""
        v = [int(x) for x in v]
        return cls(tuple(v[:4]), tuple(v[4:7]))  # type: ignore[arg-type]

    def as_vector(self) -> tuple[int, ...]:
        return self.sigma + self.kappa

    def __add__(self, other: "MotifCounts") -> "MotifCounts":
        return MotifCounts.from_vector([a + b for a, b in zip(self.as_vector(), other.as_vector())])


@dataclass(frozen=True)
class ClusteringProfile:
    icc: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if len(self.icc) != 4 or any(not 0.0 <= x <= 1.0 for x in self.icc):
            raise ValueError(f"clustering coefficients must be four values in [0, 1], got {self.icc}")


# -- spanning path / cycle checks on a 3x3 biadjacency -------------------------


def _as_biadjacency(biadj: Sequence[Sequence[bool]]) -> tuple[tuple[bool, ...], ...]:
    rows = tuple(tuple(bool(x) for x in row) for row in biadj)
    if len(rows) != 3 or any(len(r) != 3 for r in rows):
        raise ValueError("expected a 3x3 biadjacency (3 users x 3 items)")
    return rows


def hamiltonian_path_exists(biadj: Sequence[Sequence[bool]]) -> bool:
    """True iff the 3+3 bipartite graph has a spanning path.

    ``biadj[i][j]`` says whether user ``i`` is adjacent to item ``j``.  A
    spanning path of six alternating nodes always has one user end and one
    item end, so trying u-i-u-i-u-i orders covers every path.
    """
    a = _as_biadjacency(biadj)
    for u in permutations(range(3)):
        for w in permutations(range(3)):
            if (a[u[0]][w[0]] and a[u[1]][w[0]] and a[u[1]][w[1]]
                    and a[u[2]][w[1]] and a[u[2]][w[2]]):
                return True
    return False


def hamiltonian_cycle_exists(biadj: Sequence[Sequence[bool]]) -> bool:
    """True iff the 3+3 bipartite graph contains a spanning 6-cycle."""
    a = _as_biadjacency(biadj)
    for u in permutations(range(3)):
        for w in permutations(range(3)):
            if (a[u[0]][w[0]] and a[u[1]][w[0]] and a[u[1]][w[1]]
                    and a[u[2]][w[1]] and a[u[2]][w[2]] and a[u[0]][w[2]]):
                return True
    return False


def _mask_to_biadjacency(mask: int) -> tuple[tuple[bool, ...], ...]:
    return tuple(tuple(bool(mask >> (3 * i + j) & 1) for j in range(3)) for i in range(3))


def _classify_biadjacency(a: tuple[tuple[bool, ...], ...]) -> MotifClass:
    edges = sum(sum(row) for row in a)
    if edges >= 6 and hamiltonian_cycle_exists(a):
        return MotifClass(edges - 6)
    if 5 <= edges <= 7 and hamiltonian_path_exists(a):
        return MotifClass(MotifClass.KAPPA0 + edges - 5)
    return MotifClass.NONE


@lru_cache(maxsize=1)
def _class_table() -> tuple[MotifClass, ...]:
    """Class of every one of the 512 possible 3x3 biadjacency bitmasks."""
    return tuple(_classify_biadjacency(_mask_to_biadjacency(m)) for m in range(512))


def classify_mask(mask: int) -> MotifClass:
    """Bit ``3*i + j`` of ``mask`` is the edge between user ``i`` and item ``j``."""
    return _class_table()[mask]


def classify_subset(
    graph: TemporalBipartiteGraph, users: Sequence[int], items: Sequence[int]
) -> MotifClass:
    if len(set(users)) != 3 or len(set(items)) != 3:
        raise ValueError("need three distinct users and three distinct items")
    for v in users:
        if not graph.is_primary(v):
            raise ValueError(f"node {v} is not a user")
    for w in items:
        if graph.is_primary(w):
            raise ValueError(f"node {w} is not an item")
    return classify_mask(_subset_mask(graph.adjacency, users, items))


def _subset_mask(adj, users: Sequence[int], items: Sequence[int]) -> int:
    mask = 0
    for i, v in enumerate(users):
        nv = adj[v]
        for j, w in enumerate(items):
            if w in nv:
                mask |= 1 << (3 * i + j)
    return mask


# -- census --------------------------------------------------------------------
#
# A walk v0 w0 v1 w1 v2 w2 is written as six positions 0..5.  Besides its five
# path edges, the six nodes have four more user-item pairs; which of those are
# edges (a 4-bit pattern) fixes the class of the node set and the list of its
# other spanning paths.  A node set is counted only from its lexicographically
# smallest spanning path, so no record of visited sets is needed.

PATH_EDGES = ((0, 1), (2, 1), (2, 3), (4, 3), (4, 5))
EXTRA_PAIRS = ((0, 3), (0, 5), (2, 5), (4, 1))


@lru_cache(maxsize=1)
def path_tables() -> tuple[tuple[MotifClass, ...], tuple[tuple[tuple[int, ...], ...], ...]]:
    """(class per pattern, alternative spanning paths per pattern as position sequences)."""
    classes = []
    alternatives = []
    for pattern in range(16):
        edges = set(PATH_EDGES)
        edges.update(pair for bit, pair in enumerate(EXTRA_PAIRS) if pattern >> bit & 1)
        mask = 0
        for u, w in edges:
            mask |= 1 << (3 * (u // 2) + w // 2)
        classes.append(classify_mask(mask))
        alts = []
        for us in permutations((0, 2, 4)):
            for ws in permutations((1, 3, 5)):
                seq = (us[0], ws[0], us[1], ws[1], us[2], ws[2])
                if seq == (0, 1, 2, 3, 4, 5):
                    continue
                if all((seq[k], seq[k + 1]) in edges or (seq[k + 1], seq[k]) in edges for k in range(5)):
                    alts.append(seq)
        alternatives.append(tuple(alts))
    return tuple(classes), tuple(alternatives)


def _count_python(graph: TemporalBipartiteGraph, max_candidates: int | None):
    adj = graph.adjacency
    classes, alternatives = path_tables()
    cls_of = [int(c) for c in classes]
    totals = [0] * 7
    per_user = [[0] * 7 for _ in range(graph.primary_count)]
    found = 0
    for v0 in range(graph.primary_count):
        a0 = adj[v0]
        for w0 in a0:
            for v1 in adj[w0]:
                if v1 == v0:
                    continue
                a1 = adj[v1]
                for w1 in a1:
                    if w1 == w0:
                        continue
                    b0 = 1 if w1 in a0 else 0
                    for v2 in adj[w1]:
                        if v2 == v0 or v2 == v1:
                            continue
                        a2 = adj[v2]
                        b3 = 8 if w0 in a2 else 0
                        for w2 in a2:
                            if w2 == w0 or w2 == w1:
                                continue
                            pattern = b0 | b3 | (2 if w2 in a0 else 0) | (4 if w2 in a1 else 0)
                            alts = alternatives[pattern]
                            if alts:
                                seq = (v0, w0, v1, w1, v2, w2)
                                if any(tuple(seq[i] for i in alt) < seq for alt in alts):
                                    continue
                            found += 1
                            if max_candidates is not None and found > max_candidates:
                                raise MotifBudgetExceeded(max_candidates)
                            cls = cls_of[pattern]
                            totals[cls] += 1
                            per_user[v0][cls] += 1
                            per_user[v1][cls] += 1
                            per_user[v2][cls] += 1
    return totals, per_user


NUMBA_MIN_EDGES = 300


def count_motifs(
    graph: TemporalBipartiteGraph,
    max_candidates: int | None = None,
    engine: str = "auto",
) -> tuple[MotifCounts, dict[int, MotifCounts]]:
    """Exact global and per-user motif counts.

    Every classified node set contains a spanning 5-path, so the candidates
    are the node sets of all simple user-to-item 5-paths, each counted once.
    ``per_user`` has an entry for every user of the graph.

    ``engine`` is ``"python"``, ``"numba"`` or ``"auto"`` (numba for graphs
    with at least NUMBA_MIN_EDGES edges when it is importable).  Raises
    MotifBudgetExceeded once more than ``max_candidates`` node sets are found.
    """
    if engine == "auto":
        engine = "numba" if graph.edge_count >= NUMBA_MIN_EDGES and _numba_available() else "python"
    if engine == "python":
        totals, per_user = _count_python(graph, max_candidates)
    elif engine == "numba":
        from ._kernel import count_paths

        totals, per_user = count_paths(graph, max_candidates)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return (
        MotifCounts.from_vector(totals),
        {v: MotifCounts.from_vector(c) for v, c in enumerate(per_user)},
    )


@lru_cache(maxsize=1)
def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def icc_from_counts(counts: MotifCounts) -> ClusteringProfile:
    s0, s1, s2, s3 = counts.sigma
    k0, k1, k2 = counts.kappa
    return ClusteringProfile((
        _ratio(6 * s0, 6 * s0 + k0),
        _ratio(7 * s1, 7 * s1 + s0 + k1),
        _ratio(4 * s2, 4 * s2 + s1 + k2),
        _ratio(3 * s3, 3 * s3 + s2),
    ))


def local_profiles(per_user: dict[int, MotifCounts]) -> dict[int, ClusteringProfile]:
    return {v: icc_from_counts(c) for v, c in per_user.items()}


def opsahl_cstar(graph: TemporalBipartiteGraph) -> float:
    """Closed over all user-ended 4-paths ``v0 w1 v2 w3 v4``.

    A path is counted once (``v0 < v4``) and is closed when some third item
    links its two end users.
    """
    adj = graph.adjacency
    total = closed = 0
    for v2 in range(graph.primary_count):
        items = sorted(adj[v2])
        for a, w1 in enumerate(items):
            for w3 in items[a + 1:]:
                # an unordered item pair around v2 gives ordered end pairs (v0, v4)
                for v0 in adj[w1]:
                    if v0 == v2:
                        continue
                    for v4 in adj[w3]:
                        if v4 == v2 or v4 == v0:
                            continue
                        total += 1
                        common = adj[v0] & adj[v4]
                        if len(common - {w1, w3}) > 0:
                            closed += 1
    return _ratio(closed, total)
