"""Time-windowed ego networks around the first rater of an item."""

from __future__ import annotations

from dataclasses import dataclass

from .graph import (
    TemporalBipartiteGraph,
    TimeWindow,
    bounded_bfs,
    first_rating,
    induced_subgraph,
    windowed_view,
    without_item,
)

EGO_DEPTH = 3


@dataclass(frozen=True, eq=False)
class EgoNetwork:
    ego: int  # local index of the ego inside ``graph``
    graph: TemporalBipartiteGraph
    node_map: tuple[int, ...]  # local index -> node of the source graph
    anchor_time: int
    first_rating: float
    item: int

    @property
    def ego_node(self) -> int:
        """The ego as a node of the source graph."""
        return self.node_map[self.ego]


def extract_ego_network(
    graph: TemporalBipartiteGraph,
    item: int,
    lookback: int,
    depth: int = EGO_DEPTH,
) -> EgoNetwork:
    """Ego network of the first rater of ``item``.

    Only ratings in ``[t0 - lookback, t0)`` are kept and the item itself is
    removed before the depth-limited traversal.
    """
    ego, r, t0 = first_rating(graph, item)
    view = without_item(windowed_view(graph, TimeWindow(max(0, t0 - lookback), t0)), item)
    reached = bounded_bfs(view, ego, depth)
    sub, node_map = induced_subgraph(view, reached)
    return EgoNetwork(
        ego=node_map.index(ego),
        graph=sub,
        node_map=tuple(node_map),
        anchor_time=t0,
        first_rating=r,
        item=item,
    )


def ego_stats(ego_net: EgoNetwork | TemporalBipartiteGraph) -> tuple[int, float, float]:
    """(node count, mean degree 2E/N, bipartite density E/(p*s))."""
    g = ego_net.graph if isinstance(ego_net, EgoNetwork) else ego_net
    size = g.node_count
    mean_degree = 2 * g.edge_count / size if size else 0.0
    cap = g.primary_count * g.secondary_count
    density = g.edge_count / cap if cap else 0.0
    return size, mean_degree, density
