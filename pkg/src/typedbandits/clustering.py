"""k-means clustering of empirical reward vectors and recovery diagnostics.

Supports the explore-cluster-exploit schemes: Lloyd's algorithm with
k-means++ seeding and restarts, bottleneck matching of estimated centers
to a reference parameter set over all label permutations, and a Monte
Carlo estimator of the probability that clustering pilot users misses the
true centers by a given margin.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .core import ParameterSet

__all__ = ["ClusterModel", "MatchResult", "kmeans", "match_clusters", "estimate_g"]

DEFAULT_RESTARTS = 5
_MAX_EXHAUSTIVE_N = 10


@dataclass(frozen=True)
class ClusterModel:
    """Fitted centers, point-to-cluster assignment, and total inertia."""

    centers: np.ndarray            # (n_clusters, K)
    assignment: dict[int, int]     # point index -> cluster index
    inertia: float
    labels: np.ndarray             # (n_points,) int32, same data as assignment
    n_iter: int


@dataclass(frozen=True)
class MatchResult:
    """Best bijection of cluster labels onto reference types.

    ``permutation[c]`` is the type matched to cluster c; ``max_deviation``
    is the bottleneck coordinate deviation at that bijection, minimal over
    all N! bijections.
    """

    permutation: tuple[int, ...]
    max_deviation: float


def _fit(points: np.ndarray, n_clusters: int, rng: np.random.Generator,
         restarts: int, max_iters: int):
    """Seeded multi-restart fit; consumes one uniform per (restart, center)."""
    uniforms = rng.random((restarts, n_clusters))
    centers, labels, inertia, n_iter = _kernels.kmeans_fit(
        np.ascontiguousarray(points, dtype=np.float64), n_clusters,
        uniforms, max_iters)
    return np.asarray(centers), np.asarray(labels), float(inertia), int(n_iter)


def kmeans(points: Sequence[Sequence[float]] | np.ndarray, n_clusters: int,
           seed: int, max_iters: int = 100,
           restarts: int = DEFAULT_RESTARTS) -> ClusterModel:
    """Cluster K-vectors into `n_clusters` groups, deterministic given seed.

    Runs `restarts` independent k-means++ seedings of Lloyd's algorithm
    and keeps the lowest-inertia fit.  Each restart stops when the
    assignment is stable or after `max_iters` update rounds.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array of K-vectors")
    if not 1 <= n_clusters <= pts.shape[0]:
        raise ValueError(
            f"need at least n_clusters={n_clusters} points, have {pts.shape[0]}")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    rng = np.random.default_rng(seed)
    centers, labels, inertia, n_iter = _fit(pts, n_clusters, rng,
                                            restarts, max_iters)
    return ClusterModel(
        centers=centers,
        assignment={i: int(c) for i, c in enumerate(labels)},
        inertia=inertia,
        labels=labels,
        n_iter=n_iter,
    )


def match_clusters(centers: np.ndarray, truth: ParameterSet) -> MatchResult:
    """Exhaustively match cluster centers to the reference types.

    Minimizes the bottleneck deviation max over (type, arm) of the
    absolute difference between the matched center entry and the true
    entry, over all N! bijections; ties resolve to the lexicographically
    lowest cluster-to-type permutation.  Exhaustive search is capped at
    N <= 10.
    """
    cen = np.asarray(centers, dtype=np.float64)
    if cen.shape != truth.means.shape:
        raise ValueError("centers and reference parameters must share a shape")
    n = truth.n_types
    if n > _MAX_EXHAUSTIVE_N:
        raise ValueError(f"exhaustive matching is limited to N <= {_MAX_EXHAUSTIVE_N}")
    best_perm = None
    best_dev = np.inf
    for perm in itertools.permutations(range(n)):
        dev = max(
            float(np.abs(cen[c] - truth.means[perm[c]]).max()) for c in range(n)
        )
        if dev < best_dev:
            best_dev = dev
            best_perm = perm
    return MatchResult(permutation=best_perm, max_deviation=best_dev)


def estimate_g(truth: ParameterSet, delta: float, m0: int, tau: int,
               reps: int, seed: int) -> float:
    """Monte Carlo probability that pilot clustering misses by >= delta.

    Each replication simulates `m0` users with types uniform over the
    reference set, each playing `tau` uniformly random arms with Bernoulli
    rewards; their empirical mean vectors (zero on unpulled arms) are
    clustered into N groups and the replication counts as a failure when
    the bottleneck matching deviation is at least `delta`.  Replication r
    derives its streams from seed + r (simulation on sub-stream 0,
    clustering seeding on sub-stream 1), so replications are independent
    and order-insensitive.
    """
    if delta <= 0.0:
        raise ValueError("delta must be > 0")
    if reps < 1:
        raise ValueError("need at least one replication")
    if tau < truth.k_arms:
        raise ValueError("tau must be at least the number of arms")
    if m0 < truth.n_types:
        raise ValueError("need at least one pilot per cluster")
    n, k = truth.n_types, truth.k_arms
    failures = 0
    for rep in range(reps):
        sim_rng = np.random.default_rng([seed + rep, 0])
        fit_rng = np.random.default_rng([seed + rep, 1])
        types = sim_rng.integers(0, n, size=m0)
        points = np.zeros((m0, k))
        for i in range(m0):
            arms = sim_rng.integers(0, k, size=tau)
            rewards = sim_rng.random(tau) < truth.means[types[i]][arms]
            counts = np.bincount(arms, minlength=k).astype(np.float64)
            sums = np.bincount(arms, weights=rewards, minlength=k)
            points[i] = np.divide(sums, counts, out=np.zeros(k),
                                  where=counts > 0)
        centers, _, _, _ = _fit(points, n, fit_rng, DEFAULT_RESTARTS, 100)
        if match_clusters(centers, truth).max_deviation >= delta:
            failures += 1
    return failures / reps
