"""Numeric evaluators for the regret bounds attached to the policies.

All evaluators are pure functions returning a BoundReport whose named
terms sum to the reported value:

* ``gamma``: the expected-excursion constant 2 e^{-2 eps^2} / (1 - e^{-2
  eps^2})^2 controlling how long an empirical Bernoulli mean can sit
  outside an eps-neighborhood of its true value;
* ``thm1_bound``: the known-type policy's regret bound, constant when the
  confusion set of the true type is empty and logarithmic in the horizon
  otherwise, with the additive constant assembled explicitly from the
  per-arm excursion terms;
* ``thm3_bound``: the three-term bound for the uniform-pilot
  explore-cluster-exploit scheme (pilot cost, clustering-failure cost,
  and the per-session known-type bound at doubled tolerance);
* ``eq1_lower_bound``: the asymptotic lower-bound constant min over
  simplex weights of the worst-case gap-to-information ratio, solved by
  bisection with an inner linear feasibility check.

The additive constant in ``thm1_bound`` is a concrete, conservative
instantiation: per suboptimal arm the expected pull count is bounded by
1 + (K+2) gamma(eps*) when the confusion set is empty, and the non-empty
case adds pi^2/3 per suboptimal elite arm next to its 8/gap log-term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .core import ParameterSet, bernoulli_kl, confusion_set, derive_structure

__all__ = ["BoundReport", "gamma", "thm1_bound", "thm3_bound", "eq1_lower_bound"]


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound: its value, echoed inputs, and named sub-terms."""

    kind: str
    value: float
    inputs: dict = field(default_factory=dict)
    terms: dict = field(default_factory=dict)


def gamma(epsilon: float) -> float:
    """Excursion constant 2 e^{-2 eps^2} / (1 - e^{-2 eps^2})^2."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be > 0")
    e = math.exp(-2.0 * epsilon * epsilon)
    return 2.0 * e / (1.0 - e) ** 2


def thm1_bound(params: ParameterSet, x: int, horizon: int,
               delta: float = 0.0) -> BoundReport:
    """Known-type policy regret bound for true type `x` at `horizon`.

    When the confusion set of x (at tolerance `delta`) is empty the bound
    is the constant gamma_A(x); otherwise it adds sum over suboptimal
    elite arms of (8/gap) ln T plus pi^2/3 times their summed gaps.
    """
    derived = derive_structure(params)
    if horizon < params.k_arms:
        raise ValueError("horizon must cover the initial sweep (T >= K)")
    k = params.k_arms
    a_star = int(derived.best_arm[x])
    gaps_x = derived.gaps[x]
    g_star = gamma(derived.epsilon_star)
    sum_gaps = float(gaps_x.sum())  # gap at a_star is 0
    gamma_a = sum_gaps * (1.0 + (k + 2) * g_star)
    confusion = confusion_set(params, x, delta)
    inputs = {
        "type": x, "horizon": horizon, "delta": delta,
        "epsilon_star": derived.epsilon_star,
        "confusion_set": sorted(confusion),
    }
    if not confusion:
        return BoundReport(
            kind="thm1", value=gamma_a, inputs=inputs,
            terms={"log_term": 0.0, "gamma_a": gamma_a, "pi_term": 0.0})
    elite_sub = [a for a in sorted(derived.elite) if a != a_star]
    if any(gaps_x[a] == 0.0 for a in elite_sub):
        raise ValueError(
            "degenerate gap: a non-optimal elite arm ties the optimal value")
    log_term = sum(8.0 / gaps_x[a] for a in elite_sub) * math.log(horizon)
    pi_term = (math.pi ** 2 / 3.0) * sum(gaps_x[a] for a in elite_sub)
    return BoundReport(
        kind="thm1", value=log_term + gamma_a + pi_term, inputs=inputs,
        terms={"log_term": log_term, "gamma_a": gamma_a, "pi_term": pi_term})


def thm3_bound(params: ParameterSet, m0: int, tau: int, delta: float,
               g_value: float, horizon: int) -> BoundReport:
    """Three-term bound for the uniform-pilot explore-cluster-exploit scheme.

    Term 1 charges the m0 pilot sessions their uniform-play gap; term 2
    charges the post-pilot horizon the worst gap weighted by the
    clustering-failure probability `g_value`; term 3 charges each
    remaining session the known-type bound at doubled tolerance, weighted
    by 1 - g_value.
    """
    if not 0.0 <= g_value <= 1.0:
        raise ValueError("g_value must lie in [0, 1]")
    if horizon < m0 * tau:
        raise ValueError("horizon must cover the pilot phase (T >= m0*tau)")
    derived = derive_structure(params)
    n, k = params.n_types, params.k_arms
    per_type_gap_sums = derived.gaps.sum(axis=1)
    term1 = m0 * float(per_type_gap_sums.mean()) * tau / k
    term2 = g_value * (horizon - m0 * tau) * float(derived.gaps.max())
    per_session = float(np.mean(
        [thm1_bound(params, x, tau, 2.0 * delta).value for x in range(n)]))
    term3 = (1.0 - g_value) * (horizon / tau - m0) * per_session
    return BoundReport(
        kind="thm3", value=term1 + term2 + term3,
        inputs={"m0": m0, "tau": tau, "delta": delta, "g": g_value,
                "horizon": horizon},
        terms={"pilot_term": term1, "clustering_failure_term": term2,
               "post_cluster_term": term3})


def _feasible(c: float, gaps: np.ndarray, info: np.ndarray) -> bool:
    """Does some simplex weight vector alpha satisfy, for every confounder z,
    sum_a alpha_a * gaps_a <= c * sum_a alpha_a * info_{z,a}?

    Solved as an LP: minimize s subject to alpha (gaps - c*info_z) <= s for
    all z, alpha on the simplex; feasible iff the optimum is <= 0.
    """
    m = gaps.shape[0]
    n_z = info.shape[0]
    # Variables: alpha_0..alpha_{m-1}, s.
    cost = np.zeros(m + 1)
    cost[m] = 1.0
    a_ub = np.hstack([gaps[None, :] - c * info, -np.ones((n_z, 1))])
    b_ub = np.zeros(n_z)
    a_eq = np.zeros((1, m + 1))
    a_eq[0, :m] = 1.0
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                  bounds=[(0.0, None)] * m + [(None, None)],
                  method="highs")
    if not res.success:
        raise RuntimeError(f"feasibility LP failed: {res.message}")
    return bool(res.fun <= 1e-10)


def eq1_lower_bound(params: ParameterSet, x: int, tol: float = 1e-4) -> float:
    """Asymptotic per-ln(T) lower-bound constant for true type `x`.

    Minimizes over simplex weights on the non-optimal arms the maximum
    over the confusion set of (weighted gap sum) / (weighted KL sum),
    by bisection on the bound value with an inner linear feasibility
    check, to absolute tolerance `tol`.  Raises when the confusion set is
    empty (the bound is vacuous); returns +inf when some confounder is
    information-zero on every non-optimal arm.
    """
    derived = derive_structure(params)
    confusion = sorted(confusion_set(params, x, 0.0))
    if not confusion:
        raise ValueError(f"confusion set of type {x} is empty; bound is vacuous")
    a_star = int(derived.best_arm[x])
    arms = [a for a in range(params.k_arms) if a != a_star]
    gaps = derived.gaps[x][arms]
    info = np.empty((len(confusion), len(arms)))
    for i, z in enumerate(confusion):
        for j, a in enumerate(arms):
            kl = bernoulli_kl(params.means[x, a], params.means[z, a])
            if math.isinf(kl):
                raise ValueError(
                    "means must be strictly inside (0, 1) wherever a KL "
                    "against a differing value is needed")
            info[i, j] = kl
    if (info.sum(axis=1) == 0.0).any():
        return math.inf

    positive = info > 0.0
    hi = 10.0 * float((gaps[None, :] / np.where(positive, info, np.inf)).max())
    lo = 0.0
    for _ in range(64):
        if _feasible(hi, gaps, info):
            break
        lo, hi = hi, hi * 2.0
    else:
        raise RuntimeError("could not bracket the lower-bound value")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _feasible(mid, gaps, info):
            hi = mid
        else:
            lo = mid
    return hi
