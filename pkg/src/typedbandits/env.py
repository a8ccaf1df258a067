"""Simulated world: arrivals, Bernoulli rewards, and pseudo-regret traces.

Users arrive in strictly sequential sessions: user u occupies slots
[u*tau + 1, (u+1)*tau] and their hidden type is drawn i.i.d. from the
configured distribution.  A run is driven by one root seed from which
four independent sub-streams derive as ``default_rng([seed, tag])`` with
fixed tags: 0 for type draws, 1 for rewards, 2 for policy randomness, and
3 for k-means seeding.  Changing a policy's internal randomness therefore
never perturbs the environment, and traces are reproducible bit for bit
given (parameters, arrival config, algorithm spec, seed).

Regret is pseudo-regret: each step accrues the true mean gap of the
chosen arm under the arriving user's type, so the oracle policy accrues
exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .clustered import (
    CONTINUOUS_KIND,
    PILOT_KINDS,
    ClusteredConfig,
    ClusteredState,
    alg2_step,
    alg3_step,
    alg4_step,
    reward_update,
    ucb_on_types_step,
)
from .core import DerivedStructure, ParameterSet, derive_structure
from .policies import ArmStats, KtPolicyConfig, kt_select, ucb_step

__all__ = [
    "ArrivalConfig",
    "SingleUserConfig",
    "AlgorithmSpec",
    "RunTrace",
    "generate_arrivals",
    "sample_reward",
    "run_experiment",
    "registered_algorithms",
    "STREAM_TYPES",
    "STREAM_REWARDS",
    "STREAM_POLICY",
    "STREAM_KMEANS",
]

STREAM_TYPES = 0
STREAM_REWARDS = 1
STREAM_POLICY = 2
STREAM_KMEANS = 3


def _stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng([seed, tag])


@dataclass(frozen=True)
class ArrivalConfig:
    """Sequential-session arrival process.

    ``num_users`` users each stay for exactly ``tau`` slots; types are
    i.i.d. from ``type_probs``.
    """

    num_users: int
    tau: int
    type_probs: tuple[float, ...]

    def __post_init__(self):
        if self.num_users < 1 or self.tau < 1:
            raise ValueError("num_users and tau must be >= 1")
        probs = np.asarray(self.type_probs, dtype=np.float64)
        if (probs < 0).any():
            raise ValueError("type probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("type probabilities must sum to 1")
        object.__setattr__(self, "type_probs", tuple(float(p) for p in probs))

    @property
    def horizon(self) -> int:
        return self.num_users * self.tau


@dataclass(frozen=True)
class SingleUserConfig:
    """One learner facing a single hidden type for a fixed horizon."""

    true_type_distribution: tuple[float, ...]
    horizon: int

    def as_arrival(self) -> ArrivalConfig:
        return ArrivalConfig(num_users=1, tau=self.horizon,
                             type_probs=self.true_type_distribution)


@dataclass(frozen=True)
class AlgorithmSpec:
    """Registered algorithm name plus its per-algorithm parameters."""

    name: str
    params: dict = field(default_factory=dict)


@dataclass
class RunTrace:
    """Per-step record of one seeded run.

    ``regret_increment[i]`` is the true-mean gap of the arm chosen at slot
    ``t[i] = i + 1``; ``cumulative_regret`` is its running sum.
    """

    t: np.ndarray
    user: np.ndarray
    true_type: np.ndarray
    arm: np.ndarray
    reward: np.ndarray
    regret_increment: np.ndarray
    cumulative_regret: np.ndarray

    @property
    def final_regret(self) -> float:
        return float(self.cumulative_regret[-1])


def _draw_types(config: ArrivalConfig, seed: int) -> np.ndarray:
    rng = _stream(seed, STREAM_TYPES)
    n_types = len(config.type_probs)
    return rng.choice(n_types, size=config.num_users,
                      p=np.asarray(config.type_probs))


def generate_arrivals(config: ArrivalConfig, seed: int):
    """Materialize the arrival sequence as (slot, user_id, true_type) tuples,
    slots numbered from 1."""
    types = _draw_types(config, seed)
    out = []
    for u in range(config.num_users):
        x = int(types[u])
        for s in range(u * config.tau + 1, (u + 1) * config.tau + 1):
            out.append((s, u, x))
    return out


def sample_reward(params: ParameterSet, x: int, a: int,
                  rng: np.random.Generator) -> int:
    """One Bernoulli(theta_x(a)) draw; P(1) equals the stored mean exactly."""
    return int(rng.random() < params.means[x, a])


# -- policy adapters -----------------------------------------------------
#
# Each adapter exposes select(user_id) -> arm and update(user_id, arm,
# reward).  Construction receives the environment context so policies can
# cache the derived structure, the user-type table (oracle baselines), and
# their RNG streams.


class _Context:
    def __init__(self, params: ParameterSet, derived: DerivedStructure,
                 user_types: np.ndarray, seed: int):
        self.params = params
        self.derived = derived
        self.user_types = user_types
        self.policy_rng = _stream(seed, STREAM_POLICY)
        self.kmeans_rng = _stream(seed, STREAM_KMEANS)


class _Oracle:
    def __init__(self, ctx: _Context, params: dict):
        self._best = ctx.derived.best_arm
        self._types = ctx.user_types

    def select(self, user_id):
        return int(self._best[self._types[user_id]])

    def update(self, user_id, arm, reward):
        pass


class _FixedArm:
    def __init__(self, ctx: _Context, params: dict):
        if "arm" not in params:
            raise ValueError("fixed-arm needs an 'arm' parameter")
        self._arm = int(params["arm"])

    def select(self, user_id):
        return self._arm

    def update(self, user_id, arm, reward):
        pass


class _SingleUcb:
    """One shared UCB learner, optionally restricted to the elite arms."""

    def __init__(self, ctx: _Context, params: dict):
        k = ctx.params.k_arms
        if params.get("elite_only", False):
            self._subset = np.array(sorted(ctx.derived.elite), dtype=np.int64)
        else:
            self._subset = np.arange(k, dtype=np.int64)
        self._stats = ArmStats(k)

    def select(self, user_id):
        return ucb_step(self._stats, self._subset)

    def update(self, user_id, arm, reward):
        self._stats.record(arm, reward)


class _SingleKt:
    """One shared known-type learner against the true parameter set."""

    def __init__(self, ctx: _Context, params: dict):
        self._config = KtPolicyConfig(ctx.params,
                                      delta=float(params.get("delta", 0.0)))
        self._stats = ArmStats(ctx.params.k_arms)

    def select(self, user_id):
        return kt_select(self._stats, self._config)

    def update(self, user_id, arm, reward):
        self._stats.record(arm, reward)


class _PerUserUcb:
    def __init__(self, ctx: _Context, params: dict):
        self._k = ctx.params.k_arms
        self._stats: dict = {}

    def select(self, user_id):
        stats = self._stats.get(user_id)
        if stats is None:
            stats = self._stats[user_id] = ArmStats(self._k)
        return ucb_step(stats)

    def update(self, user_id, arm, reward):
        self._stats[user_id].record(arm, reward)


class _UcbOnTypes:
    def __init__(self, ctx: _Context, params: dict):
        self._types = {u: int(x) for u, x in enumerate(ctx.user_types)}
        self._stats = {x: ArmStats(ctx.params.k_arms)
                       for x in range(ctx.params.n_types)}

    def select(self, user_id):
        return ucb_on_types_step(self._types, self._stats, user_id)

    def update(self, user_id, arm, reward):
        self._stats[self._types[user_id]].record(arm, reward)


class _Clustered:
    def __init__(self, ctx: _Context, params: dict, kind: str):
        self._kind = kind
        if kind in PILOT_KINDS:
            if "m0" not in params or "delta" not in params:
                raise ValueError(f"{kind} needs 'm0' and 'delta' parameters")
            config = ClusteredConfig(
                m0=int(params["m0"]), delta=float(params["delta"]),
                recluster_every=int(params.get("recluster_every", 1)))
        else:
            m_th = params.get("m_th", ctx.params.n_types)
            config = ClusteredConfig(
                m_th=None if m_th is None else int(m_th),
                recluster_every=int(params.get("recluster_every", 1)))
        self._state = ClusteredState(
            n_types=ctx.params.n_types, n_arms=ctx.params.k_arms,
            config=config, policy_rng=ctx.policy_rng,
            kmeans_rng=ctx.kmeans_rng)
        self._step = {
            "unif-cluster-et": alg2_step,
            "ucb-cluster-et": alg3_step,
            CONTINUOUS_KIND: alg4_step,
        }[kind]

    @property
    def state(self) -> ClusteredState:
        return self._state

    def select(self, user_id):
        return self._step(self._state, user_id)

    def update(self, user_id, arm, reward):
        reward_update(self._state, user_id, arm, reward, self._kind)


_REGISTRY = {
    "oracle": _Oracle,
    "fixed-arm": _FixedArm,
    "ucb": _SingleUcb,
    "ucb-kt": _SingleKt,
    "per-user-ucb": _PerUserUcb,
    "ucb-on-types": _UcbOnTypes,
    "unif-cluster-et": lambda ctx, p: _Clustered(ctx, p, "unif-cluster-et"),
    "ucb-cluster-et": lambda ctx, p: _Clustered(ctx, p, "ucb-cluster-et"),
    "cluster-ucb-continuous": lambda ctx, p: _Clustered(ctx, p, CONTINUOUS_KIND),
}


def registered_algorithms() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def _normalize_spec(algorithm) -> AlgorithmSpec:
    if isinstance(algorithm, AlgorithmSpec):
        return algorithm
    if isinstance(algorithm, str):
        return AlgorithmSpec(name=algorithm)
    if isinstance(algorithm, (tuple, list)) and len(algorithm) == 2:
        return AlgorithmSpec(name=algorithm[0], params=dict(algorithm[1]))
    if isinstance(algorithm, dict):
        return AlgorithmSpec(name=algorithm["name"],
                             params=dict(algorithm.get("params", {})))
    raise ValueError(f"cannot interpret algorithm spec {algorithm!r}")


def build_policy(spec, params: ParameterSet, derived: DerivedStructure,
                 user_types: np.ndarray, seed: int):
    spec = _normalize_spec(spec)
    try:
        factory = _REGISTRY[spec.name]
    except KeyError:
        known = ", ".join(registered_algorithms())
        raise ValueError(f"unknown algorithm {spec.name!r}; known: {known}") from None
    ctx = _Context(params, derived, user_types, seed)
    return factory(ctx, spec.params)


def run_experiment(params: ParameterSet,
                   arrivals: Union[ArrivalConfig, SingleUserConfig],
                   algorithm, seed: int) -> RunTrace:
    """Drive one seeded run of `algorithm` through the arrival process.

    Regret uses true means (pseudo-regret), not realized rewards.  The
    trace is reproducible bit for bit given (params, arrivals, algorithm
    spec, seed); see the module docstring for the stream derivation.
    """
    if isinstance(arrivals, SingleUserConfig):
        arrivals = arrivals.as_arrival()
    if len(arrivals.type_probs) != params.n_types:
        raise ValueError("arrival type distribution does not match N")
    derived = derive_structure(params)
    user_types = _draw_types(arrivals, seed)
    policy = build_policy(algorithm, params, derived, user_types, seed)

    tau = arrivals.tau
    horizon = arrivals.horizon
    uniforms = _stream(seed, STREAM_REWARDS).random(horizon)
    means_rows = params.means.tolist()
    gaps_rows = derived.gaps.tolist()

    t_arr = np.arange(1, horizon + 1, dtype=np.int64)
    user_arr = np.empty(horizon, dtype=np.int32)
    type_arr = np.empty(horizon, dtype=np.int16)
    arm_arr = np.empty(horizon, dtype=np.int16)
    reward_arr = np.empty(horizon, dtype=np.int8)
    inc_arr = np.empty(horizon, dtype=np.float64)

    select = policy.select
    update = policy.update
    theta_row = gap_row = None
    current_user = -1
    x = -1
    for i in range(horizon):
        u = i // tau
        if u != current_user:
            current_user = u
            x = int(user_types[u])
            theta_row = means_rows[x]
            gap_row = gaps_rows[x]
        arm = select(u)
        reward = 1 if uniforms[i] < theta_row[arm] else 0
        update(u, arm, reward)
        user_arr[i] = u
        type_arr[i] = x
        arm_arr[i] = arm
        reward_arr[i] = reward
        inc_arr[i] = gap_row[arm]

    return RunTrace(
        t=t_arr, user=user_arr, true_type=type_arr, arm=arm_arr,
        reward=reward_arr, regret_increment=inc_arr,
        cumulative_regret=np.cumsum(inc_arr),
    )
