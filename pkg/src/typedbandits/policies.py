"""Single-learner arm-selection policies.

Provides the running pull-count/mean record (ArmStats), the plain UCB
index and selection rules (optionally restricted to an arm subset), and
the known-type selection policy that classifies the learner's empirical
vector against a reference parameter set each step.  The known-type
policy is parameterized by a confusion-set tolerance so the exact,
tolerance-widened, and estimated-parameter variants share one
implementation.

Time convention: the UCB index uses ln(t) with t equal to this learner's
number of completed pulls, matching the worked selection examples used in
the tests; the initial sweep and round-robin positions likewise derive
from the completed-pull counter.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional

import numpy as np

from . import _kernels
from .core import (
    ParameterSet,
    confusion_set,
    derive_structure,
    epsilon_star_of_values,
)

__all__ = ["ArmStats", "KtPolicyConfig", "ucb_index", "ucb_select", "ucb_step",
           "kt_select", "record"]


class ArmStats:
    """Running pull counts, reward sums, and empirical means for one learner.

    ``t`` counts recorded pulls, so ``t == counts.sum()`` for a learner
    that records every pull.  ``means[a]`` is ``sums[a] / counts[a]`` and 0
    while arm a is unpulled.  Counts are stored as float64 (exact for any
    realistic horizon) so the kernels operate on one dtype.
    """

    __slots__ = ("t", "counts", "sums", "means")

    def __init__(self, n_arms: int):
        if n_arms < 1:
            raise ValueError("need at least one arm")
        self.t = 0
        self.counts = np.zeros(n_arms, dtype=np.float64)
        self.sums = np.zeros(n_arms, dtype=np.float64)
        self.means = np.zeros(n_arms, dtype=np.float64)

    @property
    def n_arms(self) -> int:
        return self.counts.shape[0]

    def record(self, arm: int, reward: float) -> "ArmStats":
        """Record one Bernoulli reward for `arm`; returns self."""
        if reward != 0 and reward != 1:
            raise ValueError(f"reward must be 0 or 1, got {reward!r}")
        if not 0 <= arm < self.counts.shape[0]:
            raise ValueError(f"arm {arm} out of range")
        self.t += 1
        self.counts[arm] += 1.0
        self.sums[arm] += reward
        self.means[arm] = self.sums[arm] / self.counts[arm]
        return self


def record(stats: ArmStats, arm: int, reward: float) -> ArmStats:
    """Functional spelling of :meth:`ArmStats.record` (mutates in place)."""
    return stats.record(arm, reward)


def ucb_index(mean: float, count: int, t: int) -> float:
    """Optimism index mean + sqrt(2 ln t / count) for one arm."""
    if count < 1:
        raise ValueError("arm is unpulled; pull each arm once before indexing")
    return mean + math.sqrt(2.0 * math.log(t) / count)


def _as_subset_array(subset: Iterable[int], n_arms: int) -> np.ndarray:
    arr = np.unique(np.asarray(list(subset), dtype=np.int64))
    if arr.size == 0:
        raise ValueError("arm subset is empty")
    if arr[0] < 0 or arr[-1] >= n_arms:
        raise ValueError("arm subset contains out-of-range indices")
    return arr


def ucb_select(stats: ArmStats, subset: Iterable[int]) -> int:
    """Arm of `subset` with the largest UCB index at t = stats.t.

    Every arm in the subset must have been pulled; ties break to the
    lowest arm index.
    """
    arr = _as_subset_array(subset, stats.n_arms)
    if (stats.counts[arr] < 1.0).any():
        raise ValueError("subset contains an unpulled arm")
    return int(_kernels.ucb_argmax(stats.means, stats.counts,
                                   math.log(stats.t), arr))


def ucb_step(stats: ArmStats, subset: Optional[Iterable[int]] = None) -> int:
    """One step of a UCB policy: pull the lowest-indexed unpulled arm of
    the subset if any remains, otherwise the UCB argmax."""
    if subset is None:
        arr = np.arange(stats.n_arms, dtype=np.int64)
    else:
        arr = _as_subset_array(subset, stats.n_arms)
    first = arr[int(np.argmin(stats.counts[arr]))]
    if stats.counts[first] == 0.0:
        return int(first)
    return int(_kernels.ucb_argmax(stats.means, stats.counts,
                                   math.log(stats.t), arr))


class KtPolicyConfig:
    """Frozen reference data for the known-type selection policy.

    Holds the reference parameter set (true or estimated), the confusion
    tolerance ``delta`` (0 selects the exact confusion sets), the match
    radius ``epsilon_star``, and per-type caches: the optimal arm of each
    reference row, the elite arm set, and whether each type's confusion
    set is non-empty.  With exact reference parameters the radius defaults
    to the derived one; estimated parameters pass their own.
    """

    __slots__ = ("reference_params", "delta", "epsilon_star",
                 "best_arm", "elite", "confusion_nonempty")

    def __init__(self, reference_params: ParameterSet, delta: float = 0.0,
                 epsilon_star: Optional[float] = None):
        if delta < 0.0:
            raise ValueError("delta must be >= 0")
        self.reference_params = reference_params
        self.delta = float(delta)
        means = reference_params.means
        if delta == 0.0:
            derived = derive_structure(reference_params)  # validates uniqueness
            self.best_arm = np.asarray(derived.best_arm, dtype=np.int64)
            default_eps = derived.epsilon_star
        else:
            # Tolerance-widened sets never dereference optimal arms of other
            # rows, so tied maxima are acceptable; break ties low.
            self.best_arm = means.argmax(axis=1).astype(np.int64)
            default_eps = epsilon_star_of_values(means.ravel())
        eps = default_eps if epsilon_star is None else float(epsilon_star)
        if eps <= 0.0:
            raise ValueError("epsilon_star must be > 0")
        self.epsilon_star = eps
        self.elite = np.unique(self.best_arm)
        self.confusion_nonempty = np.array(
            [bool(confusion_set(reference_params, x, delta))
             for x in range(reference_params.n_types)],
            dtype=bool,
        )

    @property
    def n_arms(self) -> int:
        return self.reference_params.k_arms


def kt_select(stats: ArmStats, config: KtPolicyConfig) -> int:
    """One selection step of the known-type policy.

    While fewer than K pulls are recorded, sweeps arms 0..K-1 once each.
    Afterwards the empirical mean vector is matched against the reference
    rows within epsilon_star: a match with empty confusion set plays that
    type's optimal arm; a match with non-empty confusion set plays one UCB
    step on the elite arms; no match plays round-robin.
    """
    k = config.n_arms
    if stats.n_arms != k:
        raise ValueError("stats and reference parameters disagree on arm count")
    t = stats.t
    if t < k:
        return t
    x = _kernels.match_type(config.reference_params.means, stats.means,
                            config.epsilon_star)
    if x >= 0:
        if config.confusion_nonempty[x]:
            return int(_kernels.ucb_argmax(stats.means, stats.counts,
                                           math.log(t), config.elite))
        return int(config.best_arm[x])
    return t % k
