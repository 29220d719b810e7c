"""Tabular Q-learning on the discretized problem.

The update ``Q(s,a) <- (1-lr) Q(s,a) + lr [cost + discount * min_a' Q(s',a')]``
bootstraps with a minimum because the running quadratic is a cost.  For
``0 <= lr <= 1`` both coefficients reading the table are nonnegative, which
is the tabular form of the monotonicity property studied by the analysis
module; larger steps are over-relaxation and are exactly the regimes the
stress tests sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from ._pure import greedy_index
from .errors import ConfigError, DivergedError
from .grid import PolicyField, ValueField
from .model import DiscreteMdp, riccati_solve
from .monotone import DivergenceMonitor, sup_error

CONSTANT = "constant"
VISIT_DECAY = "visit_decay"

LOG_INTERIOR_FRACTION = 2.0 / 3.0


@dataclass
class QTable:
    """Action values per (state node, action node), plus visit counts."""

    mdp: DiscreteMdp
    q: np.ndarray
    visits: np.ndarray

    @classmethod
    def zeros(cls, mdp: DiscreteMdp) -> "QTable":
        shape = (mdp.state_grid.n_nodes, mdp.action_grid.n_nodes)
        return cls(mdp, np.zeros(shape), np.zeros(shape, dtype=np.int64))

    def copy(self) -> "QTable":
        return QTable(self.mdp, self.q.copy(), self.visits.copy())


@dataclass(frozen=True)
class QLearnConfig:
    """Training hyperparameters.

    ``schedule`` is either a constant step of ``learning_rate`` or the
    per-visit decay ``1/(1 + visits(s,a))``; episodes start from uniformly
    random state nodes and actions are epsilon-greedy.
    """

    learning_rate: float = 0.8
    schedule: str = CONSTANT
    epsilon: float = 0.1
    n_episodes: int = 5000
    episode_len: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.schedule not in (CONSTANT, VISIT_DECAY):
            raise ConfigError(
                f"schedule must be {CONSTANT!r} or {VISIT_DECAY!r}",
                field="qlearn.schedule",
            )
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(
                f"epsilon must lie in [0, 1], got {self.epsilon}",
                field="qlearn.epsilon",
            )
        if self.n_episodes < 1 or self.episode_len < 1:
            raise ConfigError(
                "n_episodes and episode_len must be at least 1",
                field="qlearn.n_episodes",
            )


@dataclass
class TrainingLog:
    """Per-episode history: table sup norm and greedy-value error."""

    episodes: np.ndarray
    steps: np.ndarray
    max_abs_q: np.ndarray
    sup_err: np.ndarray
    tripped: bool = False
    trip_iteration: int | None = None


def transition_tables(mdp: DiscreteMdp) -> tuple[np.ndarray, np.ndarray]:
    """Next-state index and step cost for every (state, action) pair.

    Same arithmetic as :func:`lqlab.model.mdp_step`, vectorized.
    """
    xs = mdp.state_grid.nodes()
    us = mdp.action_grid.nodes()
    x, u = np.meshgrid(xs, us, indexing="ij")
    raw = x + mdp.dt * (mdp.problem.drift * x + mdp.problem.control_gain * u)
    next_idx = mdp.state_grid.snap_indices(raw)
    cost = mdp.dt * (
        mdp.problem.state_cost * x * x + mdp.problem.control_cost * u * u
    )
    return next_idx, cost


def q_update(qt: QTable, mdp: DiscreteMdp, s: int, a: int, lr: float) -> float:
    """One transition and one table update at (s, a); returns the new entry."""
    x = mdp.state_grid.node(s)
    u = mdp.action_grid.node(a)
    raw = mdp.euler_next(x, u)
    sp = mdp.state_grid.snap_index(raw)
    cost = mdp.dt * mdp.problem.running_cost(x, u)
    target = cost + mdp.discount_factor * qt.q[sp].min()
    qt.q[s, a] = (1.0 - lr) * qt.q[s, a] + lr * target
    qt.visits[s, a] += 1
    return float(qt.q[s, a])


def train(
    mdp: DiscreteMdp,
    cfg: QLearnConfig,
    monitor: DivergenceMonitor | None = None,
) -> tuple[QTable, TrainingLog]:
    """Run epsilon-greedy episodes; raises :class:`DivergedError` on a trip.

    The log records, per episode, the cumulative step count, ``max|Q|`` and
    the sup error of the greedy value against the closed-form solution on the
    central two thirds of the state grid.  ``trip_iteration`` is the global
    step index of the update that tripped the monitor.
    """
    monitor = monitor or DivergenceMonitor()
    qt = QTable.zeros(mdp)
    next_idx, cost = transition_tables(mdp)
    u_abs = np.abs(mdp.action_grid.nodes())
    sol = riccati_solve(mdp.problem)
    lr_mode = 0 if cfg.schedule == CONSTANT else 1

    episodes, steps, max_abs, sup_errs = [], [], [], []
    rng_state = cfg.seed
    total_steps = 0
    tripped = False
    for ep in range(cfg.n_episodes):
        rng_state, done, trip = kernels.q_episode(
            qt.q, qt.visits, next_idx, cost, u_abs,
            mdp.discount_factor, lr_mode, cfg.learning_rate,
            cfg.epsilon, cfg.episode_len, monitor.threshold, rng_state,
        )
        total_steps += done
        vals = qt.q.min(axis=1)
        episodes.append(ep)
        steps.append(total_steps)
        max_abs.append(float(np.max(np.abs(qt.q))))
        sup_errs.append(
            sup_error(ValueField(mdp.state_grid, vals), sol, LOG_INTERIOR_FRACTION)
        )
        if trip:
            tripped = True
            monitor.observe_values(qt.q, total_steps - 1)
            break

    log = TrainingLog(
        episodes=np.asarray(episodes),
        steps=np.asarray(steps),
        max_abs_q=np.asarray(max_abs),
        sup_err=np.asarray(sup_errs),
        tripped=tripped,
        trip_iteration=total_steps - 1 if tripped else None,
    )
    if tripped:
        raise DivergedError(total_steps - 1, qtable=qt, log=log)
    return qt, log


def greedy_extract(qt: QTable) -> tuple[ValueField, PolicyField]:
    """Greedy value and policy; ties go to smaller ``|u|``, then smaller index."""
    us = qt.mdp.action_grid.nodes()
    u_abs = np.abs(us)
    values = qt.q.min(axis=1)
    controls = np.empty(qt.q.shape[0])
    for s in range(qt.q.shape[0]):
        controls[s] = us[greedy_index(qt.q[s], u_abs)]
    return (
        ValueField(qt.mdp.state_grid, values),
        PolicyField(qt.mdp.state_grid, controls),
    )


def rollout_return(mdp: DiscreteMdp, pi: PolicyField, x0: float, horizon: int) -> float:
    """Discounted cost of the deterministic rollout under ``pi`` from ``x0``."""
    s = mdp.state_grid.snap_index(x0)
    total = 0.0
    disc = 1.0
    for _ in range(horizon):
        x = mdp.state_grid.node(s)
        u = float(pi.controls[s])
        raw = mdp.euler_next(x, u)
        sp = mdp.state_grid.snap_index(raw)
        total += disc * mdp.dt * mdp.problem.running_cost(x, u)
        disc *= mdp.discount_factor
        s = sp
    return total


def synchronous_sweep(qt: QTable, lr: float = 1.0) -> QTable:
    """One Jacobi sweep of the tabular optimality operator over all (s, a).

    With ``lr=1`` this is exact value iteration on the table; exposed for the
    contraction checks and as the fine-grid oracle solver.
    """
    next_idx, cost = transition_tables(qt.mdp)
    v = qt.q.min(axis=1)
    target = cost + qt.mdp.discount_factor * v[next_idx]
    return QTable(qt.mdp, (1.0 - lr) * qt.q + lr * target, qt.visits.copy())


def solve_synchronous(
    mdp: DiscreteMdp, tol: float = 1e-12, max_sweeps: int = 100000, lr: float = 1.0
) -> QTable:
    """Iterate :func:`synchronous_sweep` to a fixed point."""
    qt = QTable.zeros(mdp)
    next_idx, cost = transition_tables(mdp)
    q = qt.q
    for _ in range(max_sweeps):
        v = q.min(axis=1)
        qn = cost + mdp.discount_factor * v[next_idx]
        if lr != 1.0:
            qn = (1.0 - lr) * q + lr * qn
        delta = float(np.max(np.abs(qn - q)))
        q = qn
        if delta < tol:
            return QTable(mdp, q, qt.visits)
    raise RuntimeError(f"synchronous solve did not reach {tol} in {max_sweeps} sweeps")


def fit_value_curvature(v: ValueField, interior_fraction: float = 2.0 / 3.0) -> float:
    """Least-squares coefficient of ``x^2`` through the origin."""
    n = v.grid.n_nodes
    cut = int(n * (1.0 - interior_fraction) / 2.0)
    sel = slice(cut, n - cut)
    x = v.grid.nodes()[sel]
    x2 = x * x
    return float(np.sum(v.values[sel] * x2) / np.sum(x2 * x2))


def fit_policy_slope(pi: PolicyField, interior_fraction: float = 2.0 / 3.0) -> float:
    """Least-squares linear-feedback slope of a policy through the origin."""
    n = pi.grid.n_nodes
    cut = int(n * (1.0 - interior_fraction) / 2.0)
    sel = slice(cut, n - cut)
    x = pi.grid.nodes()[sel]
    return float(np.sum(pi.controls[sel] * x) / np.sum(x * x))
