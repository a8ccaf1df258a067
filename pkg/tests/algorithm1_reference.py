"""Independent line-by-line transcription of the known-type selection rule.

Used only as a test oracle.  Deliberately shares no code with the
package: neighborhoods, confusion sets, the elite set, and the selection
branches are all re-derived here from their definitions in plain Python.
Arms and slots are 1-indexed internally, mirroring the pseudo-code, and
translated at the boundary.

Two conventions are pinned to match the package (both are underdetermined
by the pseudo-code): the log argument of the optimism index is the
learner's completed pull count, and index ties resolve to the lowest arm.
"""

import math


def ref_epsilon_star(theta):
    """Half the minimum gap between distinct values, 0.5 if fewer than two."""
    values = sorted({theta[x][a] for x in range(len(theta))
                     for a in range(len(theta[0]))})
    gaps = [b - a for a, b in zip(values, values[1:])]
    return min(gaps) / 2.0 if gaps else 0.5


def ref_best_arm(theta, x):
    """1-indexed optimal arm of row x (assumed unique)."""
    row = theta[x - 1]
    best = 1
    for a in range(2, len(row) + 1):
        if row[a - 1] > row[best - 1]:
            best = a
    return best


def ref_confusion_empty(theta, x):
    """Is {z : theta_z(a*_x) = theta_x(a*_x), a*_z != a*_x} empty?"""
    n = len(theta)
    a_star = ref_best_arm(theta, x)
    for z in range(1, n + 1):
        if (theta[z - 1][a_star - 1] == theta[x - 1][a_star - 1]
                and ref_best_arm(theta, z) != a_star):
            return False
    return True


def ref_elite(theta):
    return sorted({ref_best_arm(theta, x) for x in range(1, len(theta) + 1)})


def ref_select(theta, eps, counts, sums):
    """Arm (1-indexed) chosen for the next slot given pull history.

    ``counts``/``sums`` are 1-indexed-by-position lists of per-arm pull
    counts and reward sums.
    """
    k = len(theta[0])
    n = len(theta)
    completed = sum(counts)
    t = completed + 1  # the slot being decided
    if t <= k:
        return t  # pull each arm once
    means = [sums[a] / counts[a] for a in range(k)]

    def in_nbd(x):
        return all(abs(means[a] - theta[x - 1][a]) < eps for a in range(k))

    # C1(x) for some x: match with empty confusion set
    for x in range(1, n + 1):
        if in_nbd(x) and ref_confusion_empty(theta, x):
            return ref_best_arm(theta, x)
    # C2(x) for some x: match with non-empty confusion set -> UCB on elite
    for x in range(1, n + 1):
        if in_nbd(x):
            log_term = math.log(completed)
            best, best_val = None, -math.inf
            for a in ref_elite(theta):
                val = means[a - 1] + math.sqrt(2.0 * log_term / counts[a - 1])
                if val > best_val:
                    best, best_val = a, val
            return best
    # C3: round-robin among all arms
    return ((t - 1) % k) + 1
