"""Independent Monte Carlo oracle for the clustering-recovery threshold.

Estimates the probability that clustering 40 pilot users (100 uniform
pulls each, two types drawn uniformly) misses the true centers by at
least 0.05 in bottleneck deviation.  Shares no code with the package: the
k-means++ seeding, Lloyd iterations, and permutation matching below are
self-contained.  The acceptance suite pins the package estimator against
the value this script prints (recorded in tests/test_acceptance.py).

Usage: python scripts/calibrate_g_threshold.py [reps] [seed]
"""

import itertools
import sys

import numpy as np

TRUTH = np.array([[0.6, 0.5, 0.5, 0.5], [0.5, 0.6, 0.5, 0.5]])
DELTA = 0.05
M0 = 40
TAU = 100
RESTARTS = 5


def lloyd(points, centers, max_iters=100):
    labels = None
    for _ in range(max_iters):
        d2 = ((points[:, None, :] - centers[None]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(centers.shape[0]):
            members = labels == c
            if members.any():
                centers[c] = points[members].mean(axis=0)
    d2 = ((points[:, None, :] - centers[None]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return centers, labels, float(d2[np.arange(len(points)), labels].sum())


def kmeans_best_of(points, n_clusters, rng):
    best = None
    for _ in range(RESTARTS):
        centers = np.empty((n_clusters, points.shape[1]))
        d2 = None
        for c in range(n_clusters):
            if c == 0 or d2.sum() <= 0:
                idx = rng.integers(len(points))
            else:
                idx = rng.choice(len(points), p=d2 / d2.sum())
            centers[c] = points[idx]
            nd = ((points - centers[c]) ** 2).sum(axis=1)
            d2 = nd if d2 is None else np.minimum(d2, nd)
        fit = lloyd(points, centers)
        if best is None or fit[2] < best[2]:
            best = fit
    return best[0]


def bottleneck_deviation(centers, truth):
    best = np.inf
    for perm in itertools.permutations(range(truth.shape[0])):
        dev = max(np.abs(centers[c] - truth[perm[c]]).max()
                  for c in range(truth.shape[0]))
        best = min(best, dev)
    return best


def main(reps: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(reps):
        types = rng.integers(0, 2, M0)
        points = np.zeros((M0, TRUTH.shape[1]))
        for i in range(M0):
            arms = rng.integers(0, TRUTH.shape[1], TAU)
            rewards = rng.random(TAU) < TRUTH[types[i]][arms]
            counts = np.bincount(arms, minlength=TRUTH.shape[1])
            sums = np.bincount(arms, weights=rewards, minlength=TRUTH.shape[1])
            points[i] = np.divide(sums, counts,
                                  out=np.zeros(TRUTH.shape[1]),
                                  where=counts > 0)
        centers = kmeans_best_of(points, 2, rng)
        if bottleneck_deviation(centers, TRUTH) >= DELTA:
            failures += 1
    return failures / reps


if __name__ == "__main__":
    reps = int(sys.argv[1]) if len(sys.argv) > 1 else 2_000
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 20_240_601
    estimate = main(reps, seed)
    se = (estimate * (1 - estimate) / reps) ** 0.5
    print(f"g(delta={DELTA}, m0={M0}) oracle estimate: {estimate:.4f} "
          f"(se {se:.4f}, reps {reps}, seed {seed})")
