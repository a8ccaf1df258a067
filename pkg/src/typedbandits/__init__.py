"""Bandit simulation for populations with a small number of user types.

The library covers three layers: structural computations on a known
parameter set (optimal arms, gaps, confusion sets), single-learner
policies including the known-type selection family, and multi-user
orchestrators that cluster users while learning.  Numeric evaluators for
the associated regret bounds and a reproducible experiment harness sit on
top.  Hot numeric kernels run through a compiled extension when present
(``typedbandits._kernels.BACKEND`` reports which backend is active).
"""

from ._kernels import BACKEND as kernel_backend
from .bounds import BoundReport, eq1_lower_bound, gamma, thm1_bound, thm3_bound
from .clustered import (
    ClusteredConfig,
    ClusteredState,
    UserRecord,
    alg2_step,
    alg3_step,
    alg4_step,
    reward_update,
    ucb_on_types_step,
)
from .clustering import ClusterModel, MatchResult, estimate_g, kmeans, match_clusters
from .core import (
    ConditionVerdict,
    DerivedStructure,
    ParameterSet,
    bernoulli_kl,
    classify_condition,
    confusion_set,
    derive_structure,
)
from .env import (
    AlgorithmSpec,
    ArrivalConfig,
    RunTrace,
    SingleUserConfig,
    generate_arrivals,
    run_experiment,
    sample_reward,
)
from .policies import ArmStats, KtPolicyConfig, kt_select, ucb_index, ucb_select, ucb_step

__version__ = "0.1.0"

__all__ = [
    "kernel_backend",
    "ParameterSet", "DerivedStructure", "ConditionVerdict",
    "derive_structure", "confusion_set", "classify_condition", "bernoulli_kl",
    "ArmStats", "KtPolicyConfig", "ucb_index", "ucb_select", "ucb_step", "kt_select",
    "ClusterModel", "MatchResult", "kmeans", "match_clusters", "estimate_g",
    "ClusteredConfig", "ClusteredState", "UserRecord",
    "alg2_step", "alg3_step", "alg4_step", "reward_update", "ucb_on_types_step",
    "ArrivalConfig", "SingleUserConfig", "AlgorithmSpec", "RunTrace",
    "generate_arrivals", "sample_reward", "run_experiment",
    "BoundReport", "gamma", "thm1_bound", "thm3_bound", "eq1_lower_bound",
    "__version__",
]
