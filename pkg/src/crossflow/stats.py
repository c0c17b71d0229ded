"""Rank correlation and two-cluster classification.

Spearman correlation uses average ranks for ties, an exact permutation
p-value for small samples, and the t approximation otherwise; an absolute
coefficient of at least 0.4 counts as significant.  Clustering is plain
Lloyd iteration with k = 2 (normal versus anomalous) and deterministic
farthest-point initialization.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import t as t_dist

SIGNIFICANT_ABS_R = 0.4
EXACT_PERMUTATION_MAX_N = 10


class DegenerateDataError(ValueError):
    pass


@dataclass(frozen=True)
class SpearmanResult:
    r: Optional[float]
    p: Optional[float]
    significant: bool
    n: int

    def defined(self) -> bool:
        return self.r is not None


def rank_average_ties(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        return None
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


def spearman(xs: Sequence[float], ys: Sequence[float]) -> SpearmanResult:
    """Rank correlation with tie-aware ranks.

    Constant series have no defined rank correlation; the result reports r
    and p as None rather than raising.
    """
    if len(xs) != len(ys):
        raise ValueError("series lengths differ")
    n = len(xs)
    if n < 3:
        raise ValueError("need at least 3 observations")
    rx = rank_average_ties(xs)
    ry = rank_average_ties(ys)
    r = _pearson(rx, ry)
    if r is None:
        return SpearmanResult(None, None, False, n)
    if n <= EXACT_PERMUTATION_MAX_N:
        p = _exact_permutation_p(rx, ry, abs(r))
    else:
        tv = r * math.sqrt((n - 2) / max(1e-300, 1.0 - r * r))
        p = 2.0 * float(t_dist.sf(abs(tv), n - 2))
    return SpearmanResult(r, min(p, 1.0), abs(r) >= SIGNIFICANT_ABS_R, n)


def _exact_permutation_p(
    rx: Sequence[float], ry: Sequence[float], observed_abs: float
) -> float:
    """Exact two-sided p over all permutations of one rank vector.

    Only the cross term of the correlation varies across permutations, so
    each permutation costs one dot product, evaluated in vectorized chunks.
    """
    n = len(rx)
    x = np.asarray(rx, dtype=float)
    y = np.asarray(ry, dtype=float)
    mx, my = x.mean(), y.mean()
    sxx = float(((x - mx) ** 2).sum())
    syy = float(((y - my) ** 2).sum())
    denom = math.sqrt(sxx * syy)
    xc = x - mx
    total = 0
    at_least = 0
    chunk: list[tuple] = []

    def flush() -> None:
        nonlocal total, at_least
        if not chunk:
            return
        arr = np.asarray(chunk, dtype=float) - my
        rs = np.abs(arr @ xc) / denom
        total += len(chunk)
        at_least += int((rs >= observed_abs - 1e-12).sum())
        chunk.clear()

    for perm in itertools.permutations(y.tolist()):
        chunk.append(perm)
        if len(chunk) >= 50000:
            flush()
    flush()
    return at_least / total


@dataclass(frozen=True)
class KMeansResult:
    labels: tuple[int, ...]
    centers: tuple[tuple[float, ...], ...]
    inertia: float
    iterations: int


def _dist2(a: Sequence[float], b: Sequence[float]) -> float:
    return sum((x - y) ** 2 for x, y in zip(a, b))


def kmeans2(
    points: Sequence[Sequence[float]],
    seed: int = 0,
    max_iter: int = 200,
) -> KMeansResult:
    """Two-cluster Lloyd iteration with farthest-point initialization.

    The seeded RNG picks the first center among the points; the second is
    the point farthest from it.  Iteration stops when assignments no longer
    change; each returned center is the mean of its cluster.
    """
    pts = [tuple(float(v) for v in p) for p in points]
    if len(set(pts)) < 2:
        raise DegenerateDataError("k-means with k=2 needs two distinct points")
    dims = {len(p) for p in pts}
    if len(dims) != 1:
        raise ValueError("points must share dimensionality")

    rng = random.Random(seed)
    c0 = pts[rng.randrange(len(pts))]
    c1 = max(pts, key=lambda p: (_dist2(p, c0), p))
    centers = [c0, c1]

    labels = [-1] * len(pts)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_labels = [
            min((_dist2(p, c), i) for i, c in enumerate(centers))[1]
            for p in pts
        ]
        for cluster in (0, 1):
            if cluster not in new_labels:
                # re-seat an empty cluster at the farthest point
                far = max(
                    range(len(pts)),
                    key=lambda i: _dist2(pts[i], centers[new_labels[i]]),
                )
                new_labels[far] = cluster
        if new_labels == labels:
            break
        labels = new_labels
        for cluster in (0, 1):
            member = [p for p, l in zip(pts, labels) if l == cluster]
            centers[cluster] = tuple(
                sum(col) / len(member) for col in zip(*member)
            )
    inertia = sum(_dist2(p, centers[l]) for p, l in zip(pts, labels))
    return KMeansResult(tuple(labels), (tuple(centers[0]), tuple(centers[1])), inertia, iterations)
