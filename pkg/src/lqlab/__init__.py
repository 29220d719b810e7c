"""Monotone vs non-monotone dynamic programming on the scalar LQ problem.

Solvers for the stationary optimality equation with selectable differencing,
tabular and linear-function-approximation Q-learning on the discretized
problem, monotonicity diagnostics, and a batch CLI; everything is validated
against the closed-form quadratic solution.
"""

from ._backend import backend_name
from .errors import ConfigError, DivergedError, NoPositiveRootError, NotConvergedError
from .grid import Grid1D, PolicyField, ValueField
from .hjb import (
    CENTRAL,
    DOWNWIND,
    UPWIND,
    ConvergenceLog,
    HamiltonianResult,
    SchemeConfig,
    auto_relaxation_rate,
    hamiltonian_minimize,
    monotone_mesh_bound,
    policy_iteration,
    value_iteration,
)
from .model import (
    DiscreteMdp,
    LqProblem,
    RiccatiSolution,
    analytic_policy,
    analytic_value,
    mdp_step,
    riccati_solve,
)
from .monotone import (
    CoefficientReport,
    DivergenceMonitor,
    MonotonicityReport,
    coefficient_check,
    probe_operator_monotonicity,
    relative_sup_error,
    sup_error,
)
from .qlearn import QLearnConfig, QTable, greedy_extract, q_update, rollout_return
from .qlearn import train as q_train
from .linfa import fa_train, fa_update, features, greedy_action, step_bound

__version__ = "0.1.0"

__all__ = [
    "CENTRAL",
    "CoefficientReport",
    "ConfigError",
    "ConvergenceLog",
    "DOWNWIND",
    "DiscreteMdp",
    "DivergedError",
    "DivergenceMonitor",
    "Grid1D",
    "HamiltonianResult",
    "LqProblem",
    "MonotonicityReport",
    "NoPositiveRootError",
    "NotConvergedError",
    "PolicyField",
    "QLearnConfig",
    "QTable",
    "RiccatiSolution",
    "SchemeConfig",
    "UPWIND",
    "ValueField",
    "analytic_policy",
    "analytic_value",
    "auto_relaxation_rate",
    "backend_name",
    "coefficient_check",
    "fa_train",
    "fa_update",
    "features",
    "greedy_action",
    "greedy_extract",
    "hamiltonian_minimize",
    "mdp_step",
    "monotone_mesh_bound",
    "policy_iteration",
    "probe_operator_monotonicity",
    "q_train",
    "q_update",
    "relative_sup_error",
    "riccati_solve",
    "rollout_return",
    "step_bound",
    "sup_error",
    "value_iteration",
]
