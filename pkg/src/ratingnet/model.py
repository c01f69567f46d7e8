"""Logistic popularity score, rating-count and average-rating predictors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .motif import ClusteringProfile

# weights of the four coefficient distances, icc0 .. icc3
DELTA_WEIGHTS = (2.0, 3.0, 4.0, 5.0)
NEUTRAL_RATING = 3.0


@dataclass(frozen=True)
class LogisticParams:
    c: float
    k: float

    def __post_init__(self) -> None:
        if not self.k > 0:
            raise ValueError(f"logistic steepness k must be positive, got {self.k}")


@dataclass(frozen=True)
class DeltaProfile:
    delta: tuple[float, float, float, float]
    below_mean: tuple[bool, bool, bool, bool]

    def __post_init__(self) -> None:
        if any(d < 0 for d in self.delta):
            raise ValueError("distances must be nonnegative")


@dataclass(frozen=True)
class Prediction:
    item: str
    ego: str
    first_rating: float
    t0: int
    n_hat: float
    mu_hat: float
    rho_hat: float


def _logistic(z: float) -> float:
    # split by sign so neither branch overflows
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def calibrate_popularity(mu_star: float, n_star: float, epsilon: float) -> LogisticParams:
    """Parameters putting the score at 0.5 for ``mu_star * n_star`` and at ``epsilon`` for 0."""
    if not mu_star * n_star > 0:
        raise ValueError("mu_star * n_star must be positive")
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 0.5)")
    c = mu_star * n_star
    return LogisticParams(c=c, k=math.log(1.0 / epsilon - 1.0) / c)


def popularity_score(mu: float, n: float, params: LogisticParams) -> float:
    return _logistic(params.k * (mu * n - params.c))


def calibrate_rating_curve(n_star: float, epsilon: float) -> LogisticParams:
    """Parameters of the 1..5 rating curve with value ``1 + epsilon`` at 0 and 4 at ``n_star``."""
    if not n_star >= 1:
        raise ValueError("n_star must be at least 1")
    if not 0 < epsilon < 2:
        raise ValueError("epsilon must lie in (0, 2)")
    ck = math.log(4.0 / epsilon - 1.0)
    k = (ck + math.log(3.0)) / n_star
    return LogisticParams(c=ck / k, k=k)


def rating_curve(n: float, params: LogisticParams) -> float:
    return 1.0 + 4.0 * _logistic(params.k * (n - params.c))


def delta_profile(
    ego: ClusteringProfile,
    population: Sequence[ClusteringProfile],
    ddof: int = 0,
) -> DeltaProfile:
    """Distance of the ego from the population mean, in standard deviations.

    ``ddof=0`` is the population standard deviation.  A zero spread gives a
    distance of 0; ties with the mean count as below it.
    """
    if len(population) == 0:
        raise ValueError("population of clustering profiles is empty")
    values = np.array([p.icc for p in population], dtype=np.float64)
    mean = values.mean(axis=0)
    sd = values.std(axis=0, ddof=ddof) if len(population) > ddof else np.zeros(4)
    delta = []
    below = []
    for k in range(4):
        x = ego.icc[k]
        delta.append(abs(x - mean[k]) / sd[k] if sd[k] > 0 else 0.0)
        below.append(bool(x <= mean[k]))
    return DeltaProfile(tuple(float(d) for d in delta), tuple(below))  # type: ignore[arg-type]


def predict_rating_count(first_rating: float, deltas: DeltaProfile) -> float:
    """Weighted sum of distances scaled by the first rating over 3.

    A coefficient below the mean multiplies its distance by the weight, one
    above the mean divides by it.
    """
    total = 0.0
    for d, w, below in zip(deltas.delta, DELTA_WEIGHTS, deltas.below_mean):
        total += w * d if below else d / w
    return max(0.0, first_rating / NEUTRAL_RATING * total)


def predict_average_rating(
    n_hat: float,
    first_rating: float,
    params: LogisticParams,
    scale: tuple[float, float] = (1.0, 5.0),
) -> float:
    mu = (rating_curve(n_hat, params) + first_rating) / 2.0
    return min(max(mu, scale[0]), scale[1])
