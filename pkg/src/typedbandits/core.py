"""Parameter-set data model and the structural quantities derived from it.

A parameter set is an N x K matrix of expected Bernoulli rewards: row x is
the mean-reward vector of user type x over the K arms.  Everything the
known-type policies consume is derived here: per-type optimal arms and
gaps, the uniform neighborhood radius used for empirical matching, the
elite arm set, and the confusion sets that decide whether a type can be
distinguished by pulling its optimal arm alone.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels

__all__ = [
    "ParameterSet",
    "DerivedStructure",
    "ConditionVerdict",
    "derive_structure",
    "confusion_set",
    "classify_condition",
    "bernoulli_kl",
    "epsilon_star_of_values",
]


@dataclass(frozen=True)
class ParameterSet:
    """Immutable N x K matrix of expected Bernoulli rewards in [0, 1].

    ``unique_optima`` records whether every row attains its maximum at
    exactly one arm; structural derivation requires it, construction does
    not (estimated parameter sets produced by clustering may carry ties).
    """

    means: np.ndarray
    n_types: int
    k_arms: int
    unique_optima: bool

    def __init__(self, means: Sequence[Sequence[float]] | np.ndarray):
        arr = np.array(means, dtype=np.float64, order="C")
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("parameter set must be a non-empty 2-D matrix")
        if not np.isfinite(arr).all():
            raise ValueError("parameter set entries must be finite")
        if (arr < 0.0).any() or (arr > 1.0).any():
            raise ValueError("parameter set entries must lie in [0, 1]")
        arr.setflags(write=False)
        row_max = arr.max(axis=1)
        unique = bool(((arr == row_max[:, None]).sum(axis=1) == 1).all())
        object.__setattr__(self, "means", arr)
        object.__setattr__(self, "n_types", int(arr.shape[0]))
        object.__setattr__(self, "k_arms", int(arr.shape[1]))
        object.__setattr__(self, "unique_optima", unique)

    def row(self, x: int) -> np.ndarray:
        return self.means[x]


@dataclass(frozen=True)
class DerivedStructure:
    """Per-parameter-set cache of optimal arms, gaps, and match radius.

    ``epsilon_star`` is half the smallest difference between distinct
    values appearing anywhere in the means matrix, the largest uniform
    radius for which open neighborhoods of distinct values are disjoint.
    """

    best_arm: np.ndarray      # (N,) int64
    best_value: np.ndarray    # (N,) float64
    gaps: np.ndarray          # (N, K) float64, gaps[x, a] = best_value[x] - means[x, a]
    epsilon_star: float
    elite: frozenset[int]


@dataclass(frozen=True)
class ConditionVerdict:
    """Outcome of classifying an empirical mean vector against the types.

    ``tag`` is "C1" (matched a type with empty confusion set), "C2"
    (matched a type with non-empty confusion set), or "C3" (no match);
    ``matched_type`` is present exactly for C1/C2.
    """

    tag: str
    matched_type: Optional[int] = None

    def __post_init__(self):
        if self.tag not in ("C1", "C2", "C3"):
            raise ValueError(f"unknown condition tag {self.tag!r}")
        if (self.matched_type is None) == (self.tag in ("C1", "C2")):
            raise ValueError("matched_type must be present iff tag is C1 or C2")


def epsilon_star_of_values(values: Iterable[float]) -> float:
    """Half the minimum gap between distinct values; 0.5 when fewer than
    two distinct values exist (disjointness is then vacuous)."""
    distinct = np.unique(np.asarray(list(values), dtype=np.float64))
    if distinct.size < 2:
        return 0.5
    return float(np.diff(distinct).min() / 2.0)


def derive_structure(params: ParameterSet) -> DerivedStructure:
    """Compute optimal arms, gaps, elite set, and the match radius.

    Raises ValueError when some row has a tied maximum (the standing
    uniqueness assumption) and warns on duplicated rows, which make the
    matched type ambiguous and fall back to the lowest-index rule.
    """
    if not params.unique_optima:
        tied = [
            x for x in range(params.n_types)
            if (params.means[x] == params.means[x].max()).sum() > 1
        ]
        raise ValueError(f"rows {tied} have tied maxima; optimal arms must be unique")
    means = params.means
    best_arm = means.argmax(axis=1).astype(np.int64)
    best_value = means.max(axis=1)
    gaps = best_value[:, None] - means
    if np.unique(means, axis=0).shape[0] < params.n_types:
        warnings.warn(
            "parameter set contains duplicate rows; classification ties "
            "resolve to the lowest type index",
            UserWarning,
            stacklevel=2,
        )
    best_arm.setflags(write=False)
    best_value.setflags(write=False)
    gaps.setflags(write=False)
    return DerivedStructure(
        best_arm=best_arm,
        best_value=best_value,
        gaps=gaps,
        epsilon_star=epsilon_star_of_values(means.ravel()),
        elite=frozenset(int(a) for a in best_arm),
    )


def confusion_set(params: ParameterSet, x: int, delta: float = 0.0) -> set[int]:
    """Types that cannot be told apart from `x` by pulling x's optimal arm.

    With ``delta = 0`` this is the exact set: types z whose mean on x's
    optimal arm equals x's, yet whose own optimal arm differs.  With
    ``delta > 0`` it is the tolerance-widened set: z belongs when for some
    arm a' that is within 2*delta of x's best value, z's mean on a' lies
    within 2*delta of x's, and some other arm of z comes within 2*delta of
    beating z's mean on a'.  The query type itself is never a member.
    Comparison of stored values is exact; callers wanting tolerance use
    ``delta > 0``.
    """
    if not 0 <= x < params.n_types:
        raise ValueError(f"type index {x} out of range for N={params.n_types}")
    if delta < 0.0:
        raise ValueError("delta must be >= 0")
    means = params.means
    if delta == 0.0:
        # The exact set needs well-defined optimal arms on every row.
        if not params.unique_optima:
            raise ValueError("exact confusion set requires unique row maxima")
        row = means[x]
        a_star = int(row.argmax())
        out: set[int] = set()
        for z in range(params.n_types):
            if z == x:
                continue
            zrow = means[z]
            if zrow[a_star] == row[a_star] and int(zrow.argmax()) != a_star:
                out.add(z)
        return out
    two_delta = 2.0 * delta
    row = means[x]
    threshold = row.max() - two_delta
    candidates = [a for a in range(params.k_arms) if row[a] >= threshold]
    out = set()
    for z in range(params.n_types):
        if z == x:
            continue
        zrow = means[z]
        for a_prime in candidates:
            if abs(zrow[a_prime] - row[a_prime]) > two_delta:
                continue
            cutoff = zrow[a_prime] - two_delta
            if any(zrow[a] > cutoff for a in range(params.k_arms) if a != a_prime):
                out.add(z)
                break
    return out


def classify_condition(
    derived: DerivedStructure,
    params: ParameterSet,
    empirical: Sequence[float] | np.ndarray,
    pulled_all: bool = True,
    delta: float = 0.0,
) -> ConditionVerdict:
    """Classify an empirical mean vector against the known types.

    Returns C1(x) when every arm's empirical mean falls strictly within
    epsilon_star of type x's value and x's confusion set (at `delta`) is
    empty, C2(x) when the match holds but the confusion set is non-empty,
    and C3 when no type matches.  When several types match (possible only
    for duplicate rows) the lowest index wins.  Callers must have pulled
    every arm at least once, which the policies' initial sweep enforces.
    """
    emp = np.ascontiguousarray(empirical, dtype=np.float64)
    if emp.shape != (params.k_arms,):
        raise ValueError(f"empirical vector must have length {params.k_arms}")
    if not pulled_all:
        raise ValueError("classification requires every arm pulled at least once")
    x = _kernels.match_type(params.means, emp, derived.epsilon_star)
    if x < 0:
        return ConditionVerdict(tag="C3")
    if confusion_set(params, x, delta):
        return ConditionVerdict(tag="C2", matched_type=int(x))
    return ConditionVerdict(tag="C1", matched_type=int(x))


def bernoulli_kl(p: float, q: float) -> float:
    """KL divergence between Bernoulli(p) and Bernoulli(q), natural log.

    Follows the 0*log(0) = 0 convention for p in {0, 1}; returns +inf
    (rather than raising) when q is 0 or 1 while p differs, since the
    divergence is genuinely infinite there.
    """
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError("Bernoulli parameters must lie in [0, 1]")
    if p == q:
        return 0.0
    if q == 0.0 or q == 1.0:
        return math.inf
    terms = 0.0
    if p > 0.0:
        terms += p * math.log(p / q)
    if p < 1.0:
        terms += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return terms
