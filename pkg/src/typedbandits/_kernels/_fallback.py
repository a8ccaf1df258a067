"""Pure-numpy implementations of the hot kernels.

Selected at import time by :mod:`typedbandits._kernels` when the compiled
extension is unavailable (or when ``TYPEDBANDITS_PURE_PYTHON`` is set).
Semantics match ``_speedups.pyx`` operation for operation; the only
tolerated difference is floating-point summation order inside the k-means
center update, so k-means results agree across backends to within a few
ulps rather than bit for bit.
"""

import numpy as np

BACKEND_NAME = "python"


def match_type(means, empirical, eps):
    """Index of the lowest row of `means` whose entries are all strictly
    within `eps` of `empirical`, or -1 when no row matches."""
    hit = np.all(np.abs(means - empirical) < eps, axis=1)
    idx = int(np.argmax(hit))
    return idx if hit[idx] else -1


def ucb_argmax(means, counts, log_t, subset):
    """Arm in `subset` (ascending indices) maximizing the optimism index
    mean + sqrt(2*log_t/count); ties go to the lowest arm index."""
    vals = means[subset] + np.sqrt((2.0 * log_t) / counts[subset])
    return int(subset[int(np.argmax(vals))])


def _assign(points, centers):
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1).astype(np.int32)
    inertia = float(d2[np.arange(points.shape[0]), labels].sum())
    return labels, inertia


def _seed_centers(points, n_clusters, uniforms):
    # k-means++ seeding; `uniforms` supplies one draw per center so both
    # backends consume identical randomness.
    n = points.shape[0]
    centers = np.empty((n_clusters, points.shape[1]), dtype=np.float64)
    d2 = None
    for c in range(n_clusters):
        if c == 0:
            idx = min(int(uniforms[0] * n), n - 1)
        else:
            total = float(d2.sum())
            if total > 0.0:
                target = uniforms[c] * total
                idx = int(np.searchsorted(np.cumsum(d2), target, side="right"))
                idx = min(idx, n - 1)
            else:
                # All points coincide with chosen centers; any pick is exact.
                idx = min(int(uniforms[c] * n), n - 1)
        centers[c] = points[idx]
        nd = ((points - centers[c]) ** 2).sum(axis=1)
        d2 = nd if d2 is None else np.minimum(d2, nd)
    return centers


def _lloyd(points, centers, max_iters):
    labels, inertia = _assign(points, centers)
    iters = 0
    for it in range(1, max_iters + 1):
        new_centers = centers.copy()
        for c in range(centers.shape[0]):
            member = labels == c
            if member.any():
                new_centers[c] = points[member].mean(axis=0)
        centers = new_centers
        new_labels, new_inertia = _assign(points, centers)
        assert new_inertia <= inertia + 1e-9 * max(1.0, inertia)
        stable = bool(np.array_equal(new_labels, labels))
        labels, inertia, iters = new_labels, new_inertia, it
        if stable:
            break
    return centers, labels, inertia, iters


def kmeans_fit(points, n_clusters, uniforms, max_iters):
    """k-means++ seeded Lloyd iterations, one restart per row of `uniforms`,
    keeping the strictly lowest-inertia solution.

    Returns (centers, labels, inertia, n_iter_of_best_restart).
    """
    best = None
    for r in range(uniforms.shape[0]):
        centers = _seed_centers(points, n_clusters, uniforms[r])
        fit = _lloyd(points, centers, max_iters)
        if best is None or fit[2] < best[2]:
            best = fit
    return best


def pool_ucb_select(counts, sums, labels, cluster):
    """One UCB step on the pooled stats of `cluster`'s member rows.

    Pools member rows of the per-user (n, K) count/sum matrices, pulls the
    lowest-indexed never-pulled arm if one exists, otherwise runs the UCB
    index with t = pooled total pull count.
    """
    member = labels == cluster
    pooled_c = counts[member].sum(axis=0)
    pooled_s = sums[member].sum(axis=0)
    a = int(np.argmin(pooled_c))
    if pooled_c[a] == 0.0:
        return a
    log_t = np.log(pooled_c.sum())
    vals = pooled_s / pooled_c + np.sqrt((2.0 * log_t) / pooled_c)
    return int(np.argmax(vals))
