"""Agglomerative clustering of units on test-implied dissimilarities.

The dissimilarity between units i and j is the partially aggregated
statistic max over gridpoints of S_ij(u, h) - lambda(h); it can be negative.
The number of groups, when not overridden, is the smallest K whose partition
keeps every within-group dissimilarity at or below the critical value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PanelFormatError
from .multiscale import LocalStatTable

LINKAGES = ("complete", "single", "average")


@dataclass(frozen=True, eq=False)
class Dissimilarity:
    """Symmetric zero-diagonal matrix of pairwise multiscale distances."""

    d: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError(f"dissimilarity must be square, got {d.shape}")
        if not np.array_equal(d, d.T):
            raise ValueError("dissimilarity must be exactly symmetric")
        if np.any(np.diag(d) != 0.0):
            raise ValueError("dissimilarity diagonal must be zero")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n_units(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class Merge:
    """One agglomeration step: the two clusters merged and the linkage height."""

    left: tuple[int, ...]
    right: tuple[int, ...]
    height: float


@dataclass(frozen=True, eq=False)
class ClusterResult:
    k_hat: int
    membership: tuple[int, ...]
    dendrogram: tuple[Merge, ...]
    q_alpha: float


@dataclass(frozen=True, eq=False)
class GroupDifferenceReport:
    """Per ordered group pair (k, k'): gridpoints/intervals with a significant
    difference between some cross-group unit pair."""

    intervals: dict[tuple[int, int], tuple[tuple[float, float, float, float], ...]]


def dissimilarity_matrix(table: LocalStatTable) -> Dissimilarity:
    """d_ij = max over gridpoints of (S_ij - lambda); exact max, symmetric."""
    n = max(max(p) for p in table.pairs) + 1
    if len(table.pairs) != n * (n - 1) // 2:
        raise ValueError("table must cover every unit pair")
    d = np.zeros((n, n))
    best = (table.s_hat - table.lam[None, :]).max(axis=1)
    for (i, j), value in zip(table.pairs, best):
        d[i, j] = d[j, i] = value
    return Dissimilarity(d=d)


def _linkage_distance(d: np.ndarray, a: tuple[int, ...], b: tuple[int, ...], linkage: str) -> float:
    block = d[np.ix_(a, b)]
    if linkage == "complete":
        return float(block.max())
    if linkage == "single":
        return float(block.min())
    return float(block.mean())


def hac_cluster(d: Dissimilarity, linkage: str = "complete") -> tuple[Merge, ...]:
    """Naive agglomerative merge sequence with deterministic tie-breaking.

    Ties are broken by the lexicographically smallest (cluster, cluster) pair,
    comparing sorted member tuples.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; choose {LINKAGES}")
    n = d.n_units
    if n < 2:
        raise PanelFormatError("clustering requires at least two units")
    clusters: list[tuple[int, ...]] = [(i,) for i in range(n)]
    merges: list[Merge] = []
    while len(clusters) > 1:
        best = None
        for ai in range(len(clusters)):
            for bi in range(ai + 1, len(clusters)):
                a, b = clusters[ai], clusters[bi]
                first, second = (a, b) if a < b else (b, a)
                key = (_linkage_distance(d.d, a, b, linkage), first, second)
                if best is None or key < best[0]:
                    best = (key, ai, bi)
        (height, first, second), ai, bi = best
        merges.append(Merge(left=first, right=second, height=height))
        merged = tuple(sorted(clusters[ai] + clusters[bi]))
        clusters = [c for k, c in enumerate(clusters) if k not in (ai, bi)]
        clusters.append(merged)
    return tuple(merges)


def partition_at(dendrogram: tuple[Merge, ...], n_units: int, k: int) -> list[tuple[int, ...]]:
    """Partition into exactly k groups by replaying the first n-k merges."""
    if not 1 <= k <= n_units:
        raise ValueError(f"k={k} outside [1, {n_units}]")
    clusters: list[tuple[int, ...]] = [(i,) for i in range(n_units)]
    for merge in dendrogram[: n_units - k]:
        clusters = [c for c in clusters if c != merge.left and c != merge.right]
        clusters.append(tuple(sorted(merge.left + merge.right)))
    return sorted(clusters, key=lambda c: c[0])


def _max_within(d: np.ndarray, groups) -> float:
    # max over i != j only: dissimilarities may be negative, so the zero
    # diagonal must not participate
    worst = -np.inf
    for g in groups:
        for a in range(len(g)):
            for b in range(a + 1, len(g)):
                worst = max(worst, float(d[g[a], g[b]]))
    return worst


def select_k(
    dendrogram: tuple[Merge, ...],
    d: Dissimilarity,
    q_alpha: float,
    k_override: int | None = None,
) -> ClusterResult:
    """Smallest K with max within-group dissimilarity <= q_alpha, or the
    override; labels are assigned by each group's smallest member index."""
    n = d.n_units
    if k_override is not None:
        if not 1 <= k_override <= n:
            raise ValueError(f"k_override={k_override} outside [1, {n}]")
        k_hat = k_override
    else:
        k_hat = n
        for k in range(1, n + 1):
            if _max_within(d.d, partition_at(dendrogram, n, k)) <= q_alpha:
                k_hat = k
                break
    groups = partition_at(dendrogram, n, k_hat)
    membership = [0] * n
    for label, group in enumerate(groups, start=1):
        for i in group:
            membership[i] = label
    return ClusterResult(
        k_hat=k_hat,
        membership=tuple(membership),
        dendrogram=dendrogram,
        q_alpha=q_alpha,
    )


def group_difference_intervals(
    result: ClusterResult, table: LocalStatTable, q_alpha: float
) -> GroupDifferenceReport:
    """Gridpoints with S_ij(u, h) > q_alpha (strict, no lambda) for some unit
    pair straddling the group pair, reported as intervals [u-h, u+h]."""
    out: dict[tuple[int, int], set] = {}
    grid = table.grid
    for p, (i, j) in enumerate(table.pairs):
        ki, kj = result.membership[i], result.membership[j]
        if ki == kj:
            continue
        hit_points = np.nonzero(table.s_hat[p] > q_alpha)[0]
        if hit_points.size == 0:
            continue
        key = (min(ki, kj), max(ki, kj))
        hits = out.setdefault(key, set())
        for g in hit_points:
            u, h = float(grid.u[g]), float(grid.h[g])
            hits.add((u, h, u - h, u + h))
    return GroupDifferenceReport(
        intervals={
            key: tuple(sorted(vals, key=lambda t: (t[2], t[3])))
            for key, vals in sorted(out.items())
        }
    )
