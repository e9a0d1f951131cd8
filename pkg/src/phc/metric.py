"""Distance and centroid primitives used by every clustering stage.

Only Euclidean distance ships, but the metric is passed around as a value
so an alternative (L1, cosine, ...) can be plugged in without touching the
algorithms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class Centroid:
    """Arithmetic mean of a set of feature vectors plus the contributing count."""

    values: np.ndarray
    count: int


@dataclass(frozen=True)
class Metric:
    name: str
    pairwise: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, a: np.ndarray, b: np.ndarray) -> float:
        return distance(a, b, metric=self)


def _l2_pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return cdist(a, b, metric="euclidean")


L2 = Metric(name="l2", pairwise=_l2_pairwise)

METRICS: dict[str, Metric] = {"l2": L2}


def get_metric(name: str) -> Metric:
    try:
        return METRICS[name]
    except KeyError:
        known = ", ".join(sorted(METRICS))
        raise ValueError(f"unknown metric {name!r} (available: {known})") from None


def distance(a, b, metric: Metric = L2) -> float:
    """Distance between two feature vectors of equal dimension."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(metric.pairwise(a[None, :], b[None, :])[0, 0])


def centroid(rows: Sequence) -> Centroid:
    """Component-wise mean of a non-empty list of equal-dimension vectors."""
    if len(rows) == 0:
        raise ValueError("centroid of an empty row set is undefined")
    matrix = np.asarray([np.asarray(r, dtype=float) for r in rows])
    if matrix.ndim != 2:
        raise ValueError("rows must share one dimensionality")
    return Centroid(values=matrix.mean(axis=0), count=len(rows))
