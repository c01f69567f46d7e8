"""Immutable temporal bipartite graph.

Nodes share one integer index space: users (primary nodes) occupy
``0 .. primary_count - 1`` and items (secondary nodes) follow at
``primary_count .. node_count - 1``.  Edges are stored as parallel numpy
arrays holding the user index, the item index (in the secondary range
``0 .. secondary_count - 1``), the rating and the timestamp.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class UnknownNodeError(KeyError):
    pass


class UnratedItemError(ValueError):
    pass


@dataclass(frozen=True)
class TimeWindow:
    """Half-open interval ``[start, end)`` of timestamps."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"window start {self.start} is after end {self.end}")

    def intersect(self, other: "TimeWindow") -> "TimeWindow":
        start = max(self.start, other.start)
        return TimeWindow(start, max(start, min(self.end, other.end)))


class TemporalBipartiteGraph:
    def __init__(
        self,
        user_ids: Sequence[str],
        item_ids: Sequence[str],
        edge_user: Iterable[int],
        edge_item: Iterable[int],
        edge_rating: Iterable[float],
        edge_time: Iterable[int],
        duplicates: int = 0,
    ) -> None:
        self.user_ids = tuple(user_ids)
        self.item_ids = tuple(item_ids)
        self.duplicates = int(duplicates)
        users = np.asarray(edge_user, dtype=np.int64).reshape(-1)
        items = np.asarray(edge_item, dtype=np.int64).reshape(-1)
        ratings = np.asarray(edge_rating, dtype=np.float64).reshape(-1)
        times = np.asarray(edge_time, dtype=np.int64).reshape(-1)
        if not (len(users) == len(items) == len(ratings) == len(times)):
            raise ValueError("edge arrays must have equal length")
        if len(users):
            if users.min() < 0 or users.max() >= len(self.user_ids):
                raise ValueError("edge user index out of range")
            if items.min() < 0 or items.max() >= len(self.item_ids):
                raise ValueError("edge item index out of range")
        # canonical order (user, item) makes structural equality an array comparison
        order = np.lexsort((items, users))
        self.edge_user = users[order]
        self.edge_item = items[order]
        self.edge_rating = ratings[order]
        self.edge_time = times[order]
        for arr in (self.edge_user, self.edge_item, self.edge_rating, self.edge_time):
            arr.setflags(write=False)
        if len(users) > 1:
            same = (np.diff(self.edge_user) == 0) & (np.diff(self.edge_item) == 0)
            if same.any():
                raise ValueError("parallel edges are not allowed")

    # -- sizes -------------------------------------------------------------

    @property
    def primary_count(self) -> int:
        return len(self.user_ids)

    @property
    def secondary_count(self) -> int:
        return len(self.item_ids)

    @property
    def node_count(self) -> int:
        return len(self.user_ids) + len(self.item_ids)

    @property
    def edge_count(self) -> int:
        return len(self.edge_user)

    # -- node addressing ---------------------------------------------------

    def is_primary(self, node: int) -> bool:
        self._check(node)
        return node < self.primary_count

    def item_node(self, item_index: int) -> int:
        return self.primary_count + int(item_index)

    @cached_property
    def _user_lookup(self) -> dict[str, int]:
        return {uid: i for i, uid in enumerate(self.user_ids)}

    @cached_property
    def _item_lookup(self) -> dict[str, int]:
        p = self.primary_count
        return {iid: p + j for j, iid in enumerate(self.item_ids)}

    def user(self, user_id: str) -> int:
        try:
            return self._user_lookup[user_id]
        except KeyError:
            raise UnknownNodeError(f"unknown user id {user_id!r}") from None

    def item(self, item_id: str) -> int:
        try:
            return self._item_lookup[item_id]
        except KeyError:
            raise UnknownNodeError(f"unknown item id {item_id!r}") from None

    def label(self, node: int) -> str:
        self._check(node)
        if node < self.primary_count:
            return self.user_ids[node]
        return self.item_ids[node - self.primary_count]

    def _check(self, node: int) -> None:
        if not 0 <= node < self.node_count:
            raise UnknownNodeError(f"node {node} not in graph of {self.node_count} nodes")

    # -- adjacency ---------------------------------------------------------

    @cached_property
    def _csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(offsets, neighbour nodes, edge ids) with neighbours sorted ascending."""
        p = self.primary_count
        src = np.concatenate([self.edge_user, self.edge_item + p])
        dst = np.concatenate([self.edge_item + p, self.edge_user])
        eid = np.concatenate([np.arange(self.edge_count)] * 2)
        order = np.lexsort((dst, src))
        counts = np.bincount(src, minlength=self.node_count)
        offsets = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        return offsets, dst[order], eid[order]

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        """Neighbour sets per node, for the combinatorial hot loops."""
        offsets, nbrs, _ = self._csr
        flat = nbrs.tolist()
        return tuple(frozenset(flat[offsets[v]:offsets[v + 1]]) for v in range(self.node_count))

    def degree(self, node: int) -> int:
        self._check(node)
        offsets = self._csr[0]
        return int(offsets[node + 1] - offsets[node])

    def neighbors(self, node: int) -> list[int]:
        self._check(node)
        offsets, nbrs, _ = self._csr
        return nbrs[offsets[node]:offsets[node + 1]].tolist()

    def incident_edges(self, node: int) -> np.ndarray:
        """Edge ids incident to ``node``, ordered by neighbour index."""
        self._check(node)
        offsets, _, eids = self._csr
        return eids[offsets[node]:offsets[node + 1]]

    def item_edges_by_time(self, item_node: int) -> np.ndarray:
        """Edge ids of an item ordered by (timestamp, user index)."""
        if self.is_primary(item_node):
            raise ValueError(f"node {item_node} is a user, not an item")
        eids = self.incident_edges(item_node)
        order = np.lexsort((self.edge_user[eids], self.edge_time[eids]))
        return eids[order]

    def degrees(self) -> np.ndarray:
        return np.diff(self._csr[0])

    # -- equality ----------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TemporalBipartiteGraph):
            return NotImplemented
        return (
            self.user_ids == other.user_ids
            and self.item_ids == other.item_ids
            and self.duplicates == other.duplicates
            and np.array_equal(self.edge_user, other.edge_user)
            and np.array_equal(self.edge_item, other.edge_item)
            and np.array_equal(self.edge_rating, other.edge_rating)
            and np.array_equal(self.edge_time, other.edge_time)
        )

    __hash__ = None  # type: ignore[assignment]

    def __getstate__(self) -> dict:
        # drop cached adjacency; it is rebuilt lazily in worker processes
        keep = ("user_ids", "item_ids", "duplicates", "edge_user", "edge_item", "edge_rating", "edge_time")
        return {k: self.__dict__[k] for k in keep}

    def __setstate__(self, state: dict) -> None:
        self.__dict__.update(state)

    def __repr__(self) -> str:
        return (
            f"TemporalBipartiteGraph(primary={self.primary_count}, "
            f"secondary={self.secondary_count}, edges={self.edge_count})"
        )

    def _with_edges(self, mask: np.ndarray) -> "TemporalBipartiteGraph":
        return TemporalBipartiteGraph(
            self.user_ids,
            self.item_ids,
            self.edge_user[mask],
            self.edge_item[mask],
            self.edge_rating[mask],
            self.edge_time[mask],
            duplicates=self.duplicates,
        )


def windowed_view(graph: TemporalBipartiteGraph, window: TimeWindow) -> TemporalBipartiteGraph:
    """Edges with ``start <= t < end``; the node set (and so every index) is kept."""
    mask = (graph.edge_time >= window.start) & (graph.edge_time < window.end)
    return graph._with_edges(mask)


def without_item(graph: TemporalBipartiteGraph, item_node: int) -> TemporalBipartiteGraph:
    """Drop every edge of one item; the item stays as an isolated node."""
    if graph.is_primary(item_node):
        raise ValueError(f"node {item_node} is a user, not an item")
    return graph._with_edges(graph.edge_item != item_node - graph.primary_count)


def induced_subgraph(
    graph: TemporalBipartiteGraph, nodes: Iterable[int]
) -> tuple[TemporalBipartiteGraph, list[int]]:
    """Subgraph on ``nodes`` with compact indices.

    Returns the subgraph and ``node_map`` where ``node_map[local] = original``.
    Users keep their relative order, as do items.
    """
    chosen = sorted(set(nodes))
    for v in chosen:
        graph._check(v)
    p = graph.primary_count
    users = [v for v in chosen if v < p]
    items = [v for v in chosen if v >= p]
    user_pos = np.full(p, -1, dtype=np.int64)
    user_pos[np.asarray(users, dtype=np.int64)] = np.arange(len(users))
    item_pos = np.full(graph.secondary_count, -1, dtype=np.int64)
    item_pos[np.asarray(items, dtype=np.int64) - p] = np.arange(len(items))
    lu = user_pos[graph.edge_user]
    li = item_pos[graph.edge_item]
    mask = (lu >= 0) & (li >= 0)
    sub = TemporalBipartiteGraph(
        [graph.user_ids[v] for v in users],
        [graph.item_ids[v - p] for v in items],
        lu[mask],
        li[mask],
        graph.edge_rating[mask],
        graph.edge_time[mask],
    )
    return sub, users + items


def first_rating(graph: TemporalBipartiteGraph, item_node: int) -> tuple[int, float, int]:
    """(user node, rating, timestamp) of the earliest rating; ties go to the lower user index."""
    eids = graph.item_edges_by_time(item_node)
    if len(eids) == 0:
        raise UnratedItemError(f"item {graph.label(item_node)!r} has no ratings")
    e = eids[0]
    return int(graph.edge_user[e]), float(graph.edge_rating[e]), int(graph.edge_time[e])


def bounded_bfs(graph: TemporalBipartiteGraph, root: int, max_depth: int) -> dict[int, int]:
    """Hop distance of every node within ``max_depth`` of ``root``, in BFS order."""
    graph._check(root)
    adj = graph.adjacency
    dist = {root: 0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        d = dist[v]
        if d == max_depth:
            continue
        for u in sorted(adj[v]):
            if u not in dist:
                dist[u] = d + 1
                queue.append(u)
    return dist


def item_window_stats(
    graph: TemporalBipartiteGraph, item_node: int, window: TimeWindow
) -> tuple[int, float]:
    """Rating count and mean rating of an item inside ``window`` (mean 0 when empty)."""
    eids = graph.incident_edges(item_node)
    t = graph.edge_time[eids]
    inside = eids[(t >= window.start) & (t < window.end)]
    n = len(inside)
    if n == 0:
        return 0, 0.0
    return n, float(graph.edge_rating[inside].mean())
