# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: type matching, UCB argmax, k-means, cluster pooling.

Mirrors typedbandits._kernels._fallback; keep the two in sync.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, log, sqrt

cnp.import_array()

BACKEND_NAME = "cython"


cpdef int match_type(const double[:, ::1] means, const double[::1] empirical, double eps):
    cdef Py_ssize_t n = means.shape[0], k = means.shape[1]
    cdef Py_ssize_t x, a
    cdef double d
    cdef bint ok
    for x in range(n):
        ok = True
        for a in range(k):
            d = empirical[a] - means[x, a]
            if d < 0.0:
                d = -d
            if d >= eps:
                ok = False
                break
        if ok:
            return <int> x
    return -1


cpdef int ucb_argmax(const double[::1] means, const double[::1] counts, double log_t,
                     const long[::1] subset):
    cdef Py_ssize_t m = subset.shape[0]
    cdef Py_ssize_t i
    cdef long a, best
    cdef double v, bestv
    best = subset[0]
    bestv = means[best] + sqrt((2.0 * log_t) / counts[best])
    for i in range(1, m):
        a = subset[i]
        v = means[a] + sqrt((2.0 * log_t) / counts[a])
        if v > bestv:
            bestv = v
            best = a
    return <int> best


cdef double _sq_dist(const double[:, ::1] points, Py_ssize_t i,
                     const double[:, ::1] centers, Py_ssize_t c) nogil:
    cdef Py_ssize_t a
    cdef double d, s = 0.0
    for a in range(points.shape[1]):
        d = points[i, a] - centers[c, a]
        s += d * d
    return s


cdef double _assign(const double[:, ::1] points, const double[:, ::1] centers,
                    int[::1] labels) nogil:
    cdef Py_ssize_t n = points.shape[0], nc = centers.shape[0]
    cdef Py_ssize_t i, c
    cdef int best
    cdef double d, bestd, inertia = 0.0
    for i in range(n):
        best = 0
        bestd = _sq_dist(points, i, centers, 0)
        for c in range(1, nc):
            d = _sq_dist(points, i, centers, c)
            if d < bestd:
                bestd = d
                best = <int> c
        labels[i] = best
        inertia += bestd
    return inertia


cdef void _seed_centers(const double[:, ::1] points, const double[::1] uniforms,
                        double[:, ::1] centers, double[::1] d2):
    cdef Py_ssize_t n = points.shape[0], k = points.shape[1]
    cdef Py_ssize_t nc = centers.shape[0]
    cdef Py_ssize_t c, i, a, idx
    cdef double total, target, running, nd
    for c in range(nc):
        if c == 0:
            idx = <Py_ssize_t> (uniforms[0] * n)
            if idx > n - 1:
                idx = n - 1
        else:
            total = 0.0
            for i in range(n):
                total += d2[i]
            if total > 0.0:
                target = uniforms[c] * total
                running = 0.0
                idx = n - 1
                for i in range(n):
                    running += d2[i]
                    if running > target:
                        idx = i
                        break
            else:
                idx = <Py_ssize_t> (uniforms[c] * n)
                if idx > n - 1:
                    idx = n - 1
        for a in range(k):
            centers[c, a] = points[idx, a]
        for i in range(n):
            nd = _sq_dist(points, i, centers, c)
            if c == 0 or nd < d2[i]:
                d2[i] = nd


def kmeans_fit(const double[:, ::1] points, int n_clusters,
               const double[:, ::1] uniforms, int max_iters):
    """k-means++ seeded Lloyd iterations, one restart per row of `uniforms`,
    keeping the strictly lowest-inertia solution.

    Returns (centers, labels, inertia, n_iter_of_best_restart).
    """
    cdef Py_ssize_t n = points.shape[0], k = points.shape[1]
    cdef Py_ssize_t restarts = uniforms.shape[0]
    cdef Py_ssize_t r, it, i, c, a
    cdef double inertia, new_inertia, best_inertia = INFINITY
    cdef int best_iters = 0
    cdef bint stable

    centers_arr = np.empty((n_clusters, k), dtype=np.float64)
    best_centers = np.empty((n_clusters, k), dtype=np.float64)
    labels_arr = np.empty(n, dtype=np.int32)
    best_labels = np.empty(n, dtype=np.int32)
    d2_arr = np.empty(n, dtype=np.float64)
    csize_arr = np.zeros(n_clusters, dtype=np.int64)

    cdef double[:, ::1] centers = centers_arr
    cdef double[:, ::1] bcenters = best_centers
    cdef int[::1] labels = labels_arr
    cdef int[::1] blabels = best_labels
    cdef double[::1] d2 = d2_arr
    cdef long[::1] csize = csize_arr

    for r in range(restarts):
        _seed_centers(points, uniforms[r], centers, d2)
        inertia = _assign(points, centers, labels)
        iters = 0
        for it in range(1, max_iters + 1):
            # Center update; empty clusters keep their previous center.
            for c in range(n_clusters):
                csize[c] = 0
            for i in range(n):
                csize[labels[i]] += 1
            for c in range(n_clusters):
                if csize[c] > 0:
                    for a in range(k):
                        centers[c, a] = 0.0
            for i in range(n):
                c = labels[i]
                for a in range(k):
                    centers[c, a] += points[i, a]
            for c in range(n_clusters):
                if csize[c] > 0:
                    for a in range(k):
                        centers[c, a] /= csize[c]
            stable = True
            new_inertia = _reassign(points, centers, labels, &stable)
            if new_inertia > inertia + 1e-9 * (1.0 if inertia < 1.0 else inertia):
                raise AssertionError("Lloyd iteration increased inertia")
            inertia = new_inertia
            iters = it
            if stable:
                break
        if inertia < best_inertia:
            best_inertia = inertia
            best_iters = iters
            bcenters[:, :] = centers
            blabels[:] = labels

    return best_centers, best_labels, best_inertia, best_iters


cdef double _reassign(const double[:, ::1] points, const double[:, ::1] centers,
                      int[::1] labels, bint* stable) nogil:
    cdef Py_ssize_t n = points.shape[0], nc = centers.shape[0]
    cdef Py_ssize_t i, c
    cdef int best
    cdef double d, bestd, inertia = 0.0
    for i in range(n):
        best = 0
        bestd = _sq_dist(points, i, centers, 0)
        for c in range(1, nc):
            d = _sq_dist(points, i, centers, c)
            if d < bestd:
                bestd = d
                best = <int> c
        if best != labels[i]:
            stable[0] = False
            labels[i] = best
        inertia += bestd
    return inertia


def pool_ucb_select(const double[:, ::1] counts, const double[:, ::1] sums,
                    const int[::1] labels, int cluster):
    """One UCB step on the pooled stats of `cluster`'s member rows.

    Pools member rows of the per-user (n, K) count/sum matrices, pulls the
    lowest-indexed never-pulled arm if one exists, otherwise runs the UCB
    index with t = pooled total pull count.
    """
    cdef Py_ssize_t n = counts.shape[0], k = counts.shape[1]
    cdef Py_ssize_t i, a
    cdef double log_t, v, bestv, total = 0.0
    cdef int best

    pooled_c_arr = np.zeros(k, dtype=np.float64)
    pooled_s_arr = np.zeros(k, dtype=np.float64)
    cdef double[::1] pc = pooled_c_arr
    cdef double[::1] ps = pooled_s_arr

    for i in range(n):
        if labels[i] == cluster:
            for a in range(k):
                pc[a] += counts[i, a]
                ps[a] += sums[i, a]
    for a in range(k):
        if pc[a] == 0.0:
            return <int> a
        total += pc[a]
    log_t = log(total)
    best = 0
    bestv = ps[0] / pc[0] + sqrt((2.0 * log_t) / pc[0])
    for a in range(1, k):
        v = ps[a] / pc[a] + sqrt((2.0 * log_t) / pc[a])
        if v > bestv:
            bestv = v
            best = <int> a
    return best
