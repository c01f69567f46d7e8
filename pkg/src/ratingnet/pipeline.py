"""Dataset-level analysis: outcomes, per-item prediction, evaluation, diagnostics."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .ego import EgoNetwork, extract_ego_network
from .graph import (
    TemporalBipartiteGraph,
    TimeWindow,
    UnratedItemError,
    first_rating,
    item_window_stats,
)
from .ingest import DatasetProfile, natural_key
from .model import (
    LogisticParams,
    Prediction,
    calibrate_popularity,
    calibrate_rating_curve,
    delta_profile,
    popularity_score,
    predict_average_rating,
    predict_rating_count,
)
from .motif import MotifBudgetExceeded, count_motifs, local_profiles

log = logging.getLogger(__name__)


class ItemBudgetExceeded(MotifBudgetExceeded):
    def __init__(self, item_id: str, limit: int) -> None:
        RuntimeError.__init__(
            self, f"item {item_id!r}: motif enumeration exceeded the budget of {limit} candidate node sets"
        )
        self.item_id = item_id
        self.limit = limit


@dataclass(frozen=True)
class ModelParams:
    popularity: LogisticParams
    rating_curve: LogisticParams

    @classmethod
    def for_profile(cls, profile: DatasetProfile) -> "ModelParams":
        return cls(
            calibrate_popularity(profile.popular_min_avg, profile.popular_min_ratings, profile.baseline_score),
            calibrate_rating_curve(profile.popular_min_ratings, profile.baseline_score),
        )


@dataclass(frozen=True)
class ItemOutcome:
    item: str
    t0: int
    n_actual: int
    mu_actual: float
    rho_actual: float


@dataclass(frozen=True)
class EvalRow:
    outcome: ItemOutcome
    prediction: Prediction
    abs_err: float
    pop_success: bool
    n_success: bool


def rated_items(graph: TemporalBipartiteGraph) -> list[int]:
    """Item nodes with at least one rating, in natural id order."""
    p = graph.primary_count
    deg = graph.degrees()
    items = [p + j for j in range(graph.secondary_count) if deg[p + j] > 0]
    return sorted(items, key=lambda v: natural_key(graph.label(v)))


def _first_times(graph: TemporalBipartiteGraph) -> np.ndarray:
    first = np.full(graph.secondary_count, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(first, graph.edge_item, graph.edge_time)
    return first


def select_items(
    graph: TemporalBipartiteGraph,
    first_from: int | None = None,
    first_to: int | None = None,
) -> list[int]:
    """Rated items whose first rating falls in ``[first_from, first_to)``."""
    first = _first_times(graph)
    p = graph.primary_count
    out = []
    for v in rated_items(graph):
        t = first[v - p]
        if first_from is not None and t < first_from:
            continue
        if first_to is not None and t >= first_to:
            continue
        out.append(v)
    return out


def critical_period_average(graph: TemporalBipartiteGraph, window: int) -> float:
    """Mean number of ratings items get in ``[t0, t0 + window)`` after their first rating."""
    if graph.edge_count == 0:
        raise ValueError("graph has no rated items")
    first = _first_times(graph)
    inside = graph.edge_time < first[graph.edge_item] + window
    counts = np.bincount(graph.edge_item[inside], minlength=graph.secondary_count)
    rated = np.bincount(graph.edge_item, minlength=graph.secondary_count) > 0
    return float(counts[rated].mean())


def actual_outcome(
    graph: TemporalBipartiteGraph,
    item: int,
    profile: DatasetProfile,
    params: ModelParams | None = None,
) -> ItemOutcome:
    params = params or ModelParams.for_profile(profile)
    _, _, t0 = first_rating(graph, item)
    n, mu = item_window_stats(graph, item, TimeWindow(t0, t0 + profile.critical_window))
    return ItemOutcome(graph.label(item), t0, n, mu, popularity_score(mu, n, params.popularity))


def predict_from_ego(
    ego_net: EgoNetwork,
    profile: DatasetProfile,
    params: ModelParams | None = None,
    max_candidates: int | None = None,
) -> tuple[float, float, float]:
    """(n_hat, mu_hat, rho_hat) computed from the ego network alone."""
    params = params or ModelParams.for_profile(profile)
    _, per_user = count_motifs(ego_net.graph, max_candidates=max_candidates)
    profiles = local_profiles(per_user)
    deltas = delta_profile(profiles[ego_net.ego], list(profiles.values()))
    r = ego_net.first_rating
    n_hat = predict_rating_count(r, deltas)
    if profile.implicit_rating is not None:
        mu_hat = profile.implicit_rating
    else:
        mu_hat = predict_average_rating(n_hat, r, params.rating_curve, profile.rating_scale)
    return n_hat, mu_hat, popularity_score(mu_hat, n_hat, params.popularity)


def predict_item(
    graph: TemporalBipartiteGraph,
    item: int,
    profile: DatasetProfile,
    params: ModelParams | None = None,
    max_candidates: int | None = None,
) -> Prediction:
    """Predict an item's critical-period outcome from its first rating.

    Apart from the first rating itself, only edges strictly before it are
    consulted: everything downstream sees the windowed ego network only.
    """
    ego_net = extract_ego_network(graph, item, profile.lookback_window)
    item_id = graph.label(item)
    try:
        n_hat, mu_hat, rho_hat = predict_from_ego(ego_net, profile, params, max_candidates)
    except MotifBudgetExceeded as exc:
        raise ItemBudgetExceeded(item_id, exc.limit) from exc
    return Prediction(
        item=item_id,
        ego=graph.label(ego_net.ego_node),
        first_rating=ego_net.first_rating,
        t0=ego_net.anchor_time,
        n_hat=n_hat,
        mu_hat=mu_hat,
        rho_hat=rho_hat,
    )


def outcome_as_prediction(
    graph: TemporalBipartiteGraph,
    item: int,
    profile: DatasetProfile,
    params: ModelParams | None = None,
    max_candidates: int | None = None,
) -> Prediction:
    """Closed-loop predictor that returns the realised outcome; for harness checks."""
    out = actual_outcome(graph, item, profile, params)
    ego, r, t0 = first_rating(graph, item)
    return Prediction(out.item, graph.label(ego), r, t0, float(out.n_actual), out.mu_actual, out.rho_actual)


Predictor = Callable[..., Prediction]


@dataclass
class EvalReport:
    rows: list[EvalRow]
    config: dict[str, object] = field(default_factory=dict)

    CSV_COLUMNS = (
        "item_id", "n", "mu", "rho", "n_hat", "mu_hat", "rho_hat", "abs_err", "pop_success", "n_success",
    )

    @property
    def items_evaluated(self) -> int:
        return len(self.rows)

    @property
    def pop_successes(self) -> int:
        return sum(r.pop_success for r in self.rows)

    @property
    def n_successes(self) -> int:
        return sum(r.n_success for r in self.rows)

    @property
    def pop_success_rate(self) -> float:
        return self.pop_successes / len(self.rows) if self.rows else 0.0

    @property
    def n_success_rate(self) -> float:
        return self.n_successes / len(self.rows) if self.rows else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for r in self.rows:
            o, p = r.outcome, r.prediction
            w.writerow([
                o.item, o.n_actual, repr(o.mu_actual), repr(o.rho_actual),
                repr(p.n_hat), repr(p.mu_hat), repr(p.rho_hat), repr(r.abs_err),
                int(r.pop_success), int(r.n_success),
            ])
        return buf.getvalue()

    def summary_lines(self) -> list[str]:
        lines = [
            f"items={self.items_evaluated}",
            f"pop_successes={self.pop_successes}",
            f"pop_success_rate={self.pop_success_rate!r}",
            f"n_successes={self.n_successes}",
            f"n_success_rate={self.n_success_rate!r}",
        ]
        lines += [f"{k}={v}" for k, v in self.config.items()]
        return lines


# worker-process state, set once per process by _init_worker
_WORKER: dict[str, object] = {}


def _init_worker(graph, profile, params, max_candidates, predictor) -> None:
    _WORKER.update(graph=graph, profile=profile, params=params,
                   max_candidates=max_candidates, predictor=predictor)


def _evaluate_one(item: int) -> tuple[ItemOutcome, Prediction]:
    g, profile, params = _WORKER["graph"], _WORKER["profile"], _WORKER["params"]
    outcome = actual_outcome(g, item, profile, params)  # type: ignore[arg-type]
    pred = _WORKER["predictor"](g, item, profile, params, _WORKER["max_candidates"])  # type: ignore[operator]
    return outcome, pred


def evaluate(
    graph: TemporalBipartiteGraph,
    items: Iterable[int],
    profile: DatasetProfile,
    rho_tol: float = 0.05,
    n_band: tuple[int, float] = (5, 0.5),
    workers: int = 1,
    max_candidates: int | None = None,
    predictor: Predictor = predict_item,
) -> EvalReport:
    """Predict every item and score it against its realised outcome.

    Popularity succeeds when ``|rho_hat - rho| < rho_tol``; the count succeeds
    when ``|n_hat - n| <= max(n_band[0], n_band[1] * n)``.  Rows come back in
    natural item-id order whatever the worker count.
    """
    if not rho_tol > 0:
        raise ValueError("rho_tol must be positive")
    items = sorted(set(items), key=lambda v: natural_key(graph.label(v)))
    params = ModelParams.for_profile(profile)
    band_abs, band_rel = n_band
    init = (graph, profile, params, max_candidates, predictor)
    if workers <= 1 or len(items) <= 1:
        _init_worker(*init)
        results = [_evaluate_one(v) for v in items]
    else:
        chunk = max(1, len(items) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=init) as pool:
            results = list(pool.map(_evaluate_one, items, chunksize=chunk))

    rows = []
    for outcome, pred in results:
        err = abs(pred.rho_hat - outcome.rho_actual)
        n_ok = abs(pred.n_hat - outcome.n_actual) <= max(band_abs, band_rel * outcome.n_actual)
        rows.append(EvalRow(outcome, pred, err, err < rho_tol, bool(n_ok)))
    config = {
        "profile": profile.name,
        "critical_window": profile.critical_window,
        "lookback_window": profile.lookback_window,
        "popular_min_ratings": profile.popular_min_ratings,
        "popular_min_avg": repr(float(profile.popular_min_avg)),
        "baseline_score": repr(float(profile.baseline_score)),
        "rho_tol": repr(float(rho_tol)),
        "n_band_abs": band_abs,
        "n_band_rel": repr(float(band_rel)),
    }
    return EvalReport(rows, config)


@dataclass(frozen=True)
class DecayPoint:
    offset: int  # seconds since the first rating
    gap: int | None  # seconds since the previous rating
    running_mean: float


def decay_profile(graph: TemporalBipartiteGraph, item: int) -> list[DecayPoint]:
    eids = graph.item_edges_by_time(item)
    if len(eids) == 0:
        raise UnratedItemError(f"item {graph.label(item)!r} has no ratings")
    times = graph.edge_time[eids].tolist()
    ratings = graph.edge_rating[eids].tolist()
    out = []
    total = 0.0
    for k, (t, r) in enumerate(zip(times, ratings)):
        total += r
        gap = None if k == 0 else t - times[k - 1]
        out.append(DecayPoint(t - times[0], gap, total / (k + 1)))
    return out


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation, 0 when either side has zero variance."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if len(a) != len(b):
        raise ValueError("series lengths differ")
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt((a * a).sum() * (b * b).sum())
    if den == 0:
        return 0.0
    return float(np.clip((a * b).sum() / den, -1.0, 1.0))


@dataclass
class Diagnostics:
    columns: tuple[str, ...]
    rows: list[tuple]
    correlations: dict[str, float]

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
        return buf.getvalue()

    def correlations_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("predictor", "target", "pearson"))
        for name, value in self.correlations.items():
            target = "mu" if name == "n_vs_mu_all_items" else "n"
            w.writerow((name, target, repr(value)))
        return buf.getvalue()


def diagnostic_correlations(
    graph: TemporalBipartiteGraph,
    items: Sequence[int],
    profile: DatasetProfile,
    lookback_multiples: Sequence[int] = (1, 3, 10),
) -> Diagnostics:
    """Ego degree and second-neighbour counts against realised rating counts."""
    if len(items) < 2:
        raise ValueError("need at least two items for correlations")
    params = ModelParams.for_profile(profile)
    L = profile.lookback_window
    deg_cols = [f"ego_degree_{m}L" for m in lookback_multiples]
    columns = ("item_id", "n", "mu", *deg_cols, "ego_degree_all", "second_neighbours")
    rows = []
    for item in items:
        out = actual_outcome(graph, item, profile, params)
        ego, _, t0 = first_rating(graph, item)
        eids = graph.incident_edges(ego)
        times = graph.edge_time[eids]
        degs = [int(((times >= t0 - m * L) & (times < t0)).sum()) for m in lookback_multiples]
        deg_all = int((times < t0).sum())
        recent = eids[(times >= t0 - L) & (times < t0)]
        second: set[int] = set()
        for e in recent:
            w = graph.item_node(graph.edge_item[e])
            for ue in graph.incident_edges(w):
                t = graph.edge_time[ue]
                if t0 - L <= t < t0:
                    second.add(int(graph.edge_user[ue]))
        second.discard(ego)
        rows.append((out.item, out.n_actual, out.mu_actual, *degs, deg_all, len(second)))
    n_col = [r[1] for r in rows]
    correlations = {}
    for k, name in enumerate(columns[3:], start=3):
        correlations[name] = pearson([r[k] for r in rows], n_col)
    everything = [actual_outcome(graph, v, profile, params) for v in rated_items(graph)]
    correlations["n_vs_mu_all_items"] = pearson(
        [o.n_actual for o in everything], [o.mu_actual for o in everything]
    )
    return Diagnostics(columns, rows, correlations)
