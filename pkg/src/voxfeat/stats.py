"""Pearson correlation maps and per-group boxplot statistics."""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from .core import FEATURE_NAMES, LABEL_NAMES


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation coefficient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D and of equal length")
    if x.size < 2:
        raise ValueError("need at least 2 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        raise ValueError("zero variance input")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True, eq=False)
class CorrelationMap:
    variables: tuple[str, ...]
    matrix: np.ndarray

    def entry(self, a: str, b: str) -> float:
        return float(self.matrix[self.variables.index(a), self.variables.index(b)])

    def to_csv(self, path: str | os.PathLike | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("variable", *self.variables))
        for name, row in zip(self.variables, self.matrix):
            writer.writerow((name, *(f"{v:.9g}" for v in row)))
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="\n")
        return text


def correlation_map(
    features: np.ndarray,
    labels: np.ndarray,
    feature_names: Sequence[str] = FEATURE_NAMES,
    label_names: Sequence[str] = LABEL_NAMES,
) -> CorrelationMap:
    """Pearson matrix over ``[labels | features]`` columns (labels first).

    Labels enter as their raw numeric codes (Pa, GC 1-4, symmetry 0/1).
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if features.ndim != 2 or labels.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ValueError("features and labels must be 2-D with matching row counts")
    data = np.hstack([labels, features])
    names = (*label_names, *feature_names)
    if data.shape[1] != len(names):
        raise ValueError("column names do not match the data")
    for j, name in enumerate(names):
        if np.ptp(data[:, j]) == 0:
            raise ValueError(f"constant column {name!r}")
    k = data.shape[1]
    m = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            m[i, j] = m[j, i] = pearson(data[:, i], data[:, j])
    return CorrelationMap(tuple(names), m)


@dataclass(frozen=True)
class BoxplotStats:
    group: Hashable
    n: int
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]


def boxplot_stats(values: Sequence[float], group: Hashable = None) -> BoxplotStats:
    """Five-number box summary with 1.5 IQR whiskers.

    Quartiles interpolate linearly between order statistics at position
    ``p * (n - 1)`` (so 1..7 gives q1 = 2.5, q3 = 5.5).
    """
    v = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
    if v.size == 0:
        raise ValueError(f"empty group {group!r}")
    q1, med, q3 = np.percentile(v, [25, 50, 75], method="linear")
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    outliers = v[(v < lo_fence) | (v > hi_fence)]
    return BoxplotStats(
        group=group,
        n=int(v.size),
        median=float(med),
        q1=float(q1),
        q3=float(q3),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        outliers=tuple(float(o) for o in outliers),
    )


def grouped_boxplots(values: Sequence[float], groups: Sequence[Hashable]) -> list[BoxplotStats]:
    """One :func:`boxplot_stats` per distinct group, groups in sorted order."""
    values = np.asarray(values, dtype=np.float64)
    groups = np.asarray(groups)
    if values.shape[0] != groups.shape[0]:
        raise ValueError("values and groups differ in length")
    return [boxplot_stats(values[groups == g], g.item() if hasattr(g, "item") else g) for g in np.unique(groups)]
