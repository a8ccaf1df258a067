"""Multi-user orchestrators that cluster users while learning.

Three schemes share one state object:

* explore-cluster-exploit with uniform pilots: the first ``m0`` users are
  pilots and play uniformly random arms; their empirical vectors are
  clustered into N estimated parameter vectors, and later users run the
  known-type policy against those estimates;
* the same scheme with pilots playing per-user UCB instead of uniform;
* continuous clustering: once enough users exist, all users' empirical
  vectors are reclustered on a fixed stride and each decision is one UCB
  step on the pooled stats of the current user's cluster.

Every user keeps a private ArmStats record; the state mirrors those
records into flat (capacity, K) matrices so reclustering and pooling read
contiguous memory.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .clustering import DEFAULT_RESTARTS, _fit
from .core import ParameterSet
from .policies import ArmStats, KtPolicyConfig, kt_select, ucb_step

__all__ = [
    "ClusteredConfig",
    "UserRecord",
    "ClusteredState",
    "estimated_epsilon_star",
    "alg2_step",
    "alg3_step",
    "alg4_step",
    "reward_update",
    "ucb_on_types_step",
    "PILOT_KINDS",
    "CONTINUOUS_KIND",
]

logger = logging.getLogger(__name__)

PILOT_KINDS = ("unif-cluster-et", "ucb-cluster-et")
CONTINUOUS_KIND = "cluster-ucb-continuous"

_INITIAL_CAPACITY = 64


@dataclass
class ClusteredConfig:
    """Knobs shared by the clustered schemes.

    ``m0`` and ``delta`` configure the explore-cluster-exploit schemes;
    ``m_th`` (None means never cluster) and ``recluster_every`` configure
    continuous clustering.  ``recluster_every > 1`` trades fidelity of the
    every-slot reclustering for speed and is off by default.
    """

    m0: Optional[int] = None
    delta: Optional[float] = None
    m_th: Optional[int] = None
    recluster_every: int = 1
    restarts: int = DEFAULT_RESTARTS
    max_iters: int = 100

    def __post_init__(self):
        if self.m0 is not None and self.m0 < 1:
            raise ValueError("m0 must be >= 1")
        if self.delta is not None and self.delta < 0.0:
            raise ValueError("delta must be >= 0")
        if self.recluster_every < 1:
            raise ValueError("recluster_every must be >= 1")


@dataclass
class UserRecord:
    """One user's identity, pull record, and pilot membership."""

    user_id: object
    stats: ArmStats
    is_pilot: bool
    row: int


def estimated_epsilon_star(centers: np.ndarray, delta: float) -> float:
    """Match radius for a noisy estimated parameter matrix.

    Classification matches a user's empirical vector against whole rows,
    so the radius that keeps per-row match regions disjoint is half the
    smallest sup-norm separation between rows.  (On exact parameter sets
    whose rows differ by at least the global value gap this coincides with
    the half-minimum-value-gap rule.)  The result is floored at ``delta``
    so near-identical estimated rows cannot collapse the radius to zero.
    """
    cen = np.asarray(centers, dtype=np.float64)
    n = cen.shape[0]
    sep = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            sep = min(sep, float(np.abs(cen[i] - cen[j]).max()))
    if not np.isfinite(sep):  # single row: nothing to separate
        sep = 1.0
    eps = max(float(delta), sep / 2.0)
    return eps if eps > 0.0 else 1e-9


class ClusteredState:
    """Mutable per-run state shared by the clustered schemes.

    Owned by exactly one run; the policy RNG drives the uniform pilot
    arms and the clustering RNG drives k-means seeding, so the two
    randomness sources stay on separate streams.
    """

    def __init__(self, n_types: int, n_arms: int, config: ClusteredConfig,
                 policy_rng: np.random.Generator,
                 kmeans_rng: np.random.Generator):

        if config.m_th is not None and config.m_th < n_types:
            raise ValueError(
                f"m_th={config.m_th} below the {n_types} clusters k-means needs")
        self.n_types = n_types
        self.n_arms = n_arms
        self.config = config
        self.policy_rng = policy_rng
        self.kmeans_rng = kmeans_rng

        self.users: dict[object, UserRecord] = {}
        self.pilot_set: list[object] = []
        self._pilot_lookup: set[object] = set()
        self.estimated_params: Optional[ParameterSet] = None
        self.kt_config: Optional[KtPolicyConfig] = None

        cap = _INITIAL_CAPACITY
        self._counts = np.zeros((cap, n_arms), dtype=np.float64)
        self._sums = np.zeros((cap, n_arms), dtype=np.float64)
        self._means = np.zeros((cap, n_arms), dtype=np.float64)

        self._labels: Optional[np.ndarray] = None
        self._steps = 0
        self._last_cluster_step = -10**18
        self._warned_unclustered = False

    # -- user bookkeeping -------------------------------------------------

    def _grow(self):
        cap = self._counts.shape[0] * 2
        for name in ("_counts", "_sums", "_means"):
            old = getattr(self, name)
            new = np.zeros((cap, self.n_arms), dtype=old.dtype)
            new[: old.shape[0]] = old
            setattr(self, name, new)
        # Rebind every user's stats views onto the reallocated matrices.
        for rec in self.users.values():
            rec.stats.counts = self._counts[rec.row]
            rec.stats.sums = self._sums[rec.row]
            rec.stats.means = self._means[rec.row]

    def _ensure_user(self, user_id, pilot_eligible: bool) -> UserRecord:
        rec = self.users.get(user_id)
        if rec is not None:
            return rec
        row = len(self.users)
        if row >= self._counts.shape[0]:
            self._grow()
        stats = ArmStats.__new__(ArmStats)
        stats.t = 0
        stats.counts = self._counts[row]
        stats.sums = self._sums[row]
        stats.means = self._means[row]
        is_pilot = bool(
            pilot_eligible
            and self.config.m0 is not None
            and len(self.pilot_set) < self.config.m0
        )
        rec = UserRecord(user_id=user_id, stats=stats, is_pilot=is_pilot, row=row)
        self.users[user_id] = rec
        if is_pilot:
            self.pilot_set.append(user_id)
            self._pilot_lookup.add(user_id)
        return rec

    @property
    def n_users(self) -> int:
        return len(self.users)

    def total_pulls(self) -> int:
        return sum(rec.stats.t for rec in self.users.values())

    # -- clustering -------------------------------------------------------

    def _recluster_pilots(self):
        rows = [self.users[u].row for u in self.pilot_set]
        points = self._means[rows]
        centers, _, _, _ = _fit(points, self.n_types, self.kmeans_rng,
                                self.config.restarts, self.config.max_iters)
        self.estimated_params = ParameterSet(np.clip(centers, 0.0, 1.0))
        delta = self.config.delta
        self.kt_config = KtPolicyConfig(
            self.estimated_params, delta,
            epsilon_star=estimated_epsilon_star(centers, delta),
        )

    def _recluster_all(self):
        n = self.n_users
        _, labels, _, _ = _fit(self._means[:n], self.n_types, self.kmeans_rng,
                               self.config.restarts, self.config.max_iters)
        self._labels = np.asarray(labels)
        self._last_cluster_step = self._steps

    def _et_select(self, rec: UserRecord) -> int:
        if self.kt_config is None:
            # Possible when a non-pilot arrives before the last pilot has
            # produced any reward; the pseudo-flow never defines this slot.
            if not self._warned_unclustered:
                logger.warning(
                    "non-pilot user %r arrived before any clustering; "
                    "falling back to a uniform arm", rec.user_id)
                self._warned_unclustered = True
            return int(self.policy_rng.integers(self.n_arms))
        return kt_select(rec.stats, self.kt_config)


def alg2_step(state: ClusteredState, user_id) -> int:
    """Select an arm under the uniform-pilot explore-cluster-exploit scheme.

    New users fill the pilot set up to ``m0``; pilot users always play a
    uniformly random arm; every other user plays the known-type policy
    against the current estimated parameter vectors, driven by that
    user's own pull record.
    """
    if state.config.m0 is None or state.config.delta is None:
        raise ValueError("explore-cluster-exploit schemes need m0 and delta")
    rec = state._ensure_user(user_id, pilot_eligible=True)
    if rec.is_pilot:
        return int(state.policy_rng.integers(state.n_arms))
    return state._et_select(rec)


def alg3_step(state: ClusteredState, user_id) -> int:
    """Same as :func:`alg2_step` but pilots play per-user UCB."""
    if state.config.m0 is None or state.config.delta is None:
        raise ValueError("explore-cluster-exploit schemes need m0 and delta")
    rec = state._ensure_user(user_id, pilot_eligible=True)
    if rec.is_pilot:
        return ucb_step(rec.stats)
    return state._et_select(rec)


def alg4_step(state: ClusteredState, user_id) -> int:
    """Select an arm under continuous clustering.

    While fewer than ``m_th`` users exist (or always, when ``m_th`` is
    None) each user runs their own UCB.  Afterwards all users' empirical
    vectors are reclustered into N groups every ``recluster_every`` steps
    (and whenever a new user appears), and the decision is one UCB step on
    the current user's cluster, pooling every member's counts and sums
    with t equal to the pooled total.
    """
    rec = state._ensure_user(user_id, pilot_eligible=False)
    m_th = state.config.m_th
    if m_th is None or state.n_users < m_th:
        return ucb_step(rec.stats)
    state._steps += 1
    stale = (
        state._labels is None
        or state._labels.shape[0] < state.n_users
        or state._steps - state._last_cluster_step >= state.config.recluster_every
    )
    if stale:
        state._recluster_all()
    n = state.n_users
    return int(_kernels.pool_ucb_select(
        state._counts[:n], state._sums[:n], state._labels,
        int(state._labels[rec.row])))


def reward_update(state: ClusteredState, user_id, arm: int, reward: float,
                  kind: str) -> ClusteredState:
    """Record a reward for the user that was just served.

    For the explore-cluster-exploit kinds, once the pilot set is full,
    every reward earned by a pilot triggers a fresh clustering of the
    pilots' empirical vectors and a rebuild of the estimated parameter
    vectors.  Returns the (mutated) state.
    """
    rec = state.users.get(user_id)
    if rec is None:
        raise ValueError(f"unknown user {user_id!r}")
    rec.stats.record(arm, reward)
    if kind in PILOT_KINDS:
        if (
            state.config.m0 is not None
            and len(state.pilot_set) >= state.config.m0
            and user_id in state._pilot_lookup
        ):
            state._recluster_pilots()
    elif kind != CONTINUOUS_KIND:
        raise ValueError(f"unknown clustered scheme {kind!r}")
    return state


def ucb_on_types_step(user_types: dict, type_stats: dict[int, ArmStats],
                      user_id) -> int:
    """One UCB step on the pooled stats of the user's (known) type."""
    try:
        x = user_types[user_id]
    except KeyError:
        raise ValueError(f"no known type for user {user_id!r}") from None
    return ucb_step(type_stats[x])
