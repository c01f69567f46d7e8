"""Chord-class clustering in bipartite rating networks and first-rater popularity prediction."""

from .graph import TemporalBipartiteGraph, TimeWindow
from .ingest import PROFILES, DatasetProfile, RatingEvent, build_graph
from .motif import ClusteringProfile, MotifClass, MotifCounts, count_motifs, icc_from_counts
from .pipeline import EvalReport, evaluate, predict_item

__all__ = [
    "PROFILES",
    "ClusteringProfile",
    "DatasetProfile",
    "EvalReport",
    "MotifClass",
    "MotifCounts",
    "RatingEvent",
    "TemporalBipartiteGraph",
    "TimeWindow",
    "build_graph",
    "count_motifs",
    "evaluate",
    "icc_from_counts",
    "predict_item",
]

__version__ = "0.1.0"
