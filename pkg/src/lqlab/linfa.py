"""Semi-gradient Q-learning with quadratic features.

The approximator ``q(x, u, w) = features(x, u) . w`` spans every polynomial
of degree two in (x, u), which contains the one-step optimal action value of
the discretized problem exactly; representation error is therefore zero and
any instability observed in training comes from the update itself.  The
per-sample step bound ``1 / (X^T X)`` keeps the self-coefficient of the
update nonnegative, the function-approximation analogue of the tabular
``lr <= 1`` regime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import ConfigError, DivergedError
from .model import DiscreteMdp, LqProblem
from .monotone import DivergenceMonitor

F_ONE, F_X, F_U, F_XX, F_XU, F_UU = range(6)
FEATURE_NAMES = ("1", "x", "u", "x^2", "x*u", "u^2")

CONSTANT = "constant"
BOUND_SCALED = "bound_scaled"

N_PROBE_EDGE = 8


def features(x: float, u: float) -> np.ndarray:
    """Quadratic feature vector ``[1, x, u, x^2, x*u, u^2]``."""
    return np.array([1.0, x, u, x * x, x * u, u * u])


def features_matrix(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    return np.stack([np.ones_like(x), x, u, x * x, x * u, u * u], axis=-1)


def step_bound(x: float, u: float) -> float:
    """Per-sample learning-rate ceiling ``1 / (X^T X)``."""
    xx = x * x
    uu = u * u
    return 1.0 / (1.0 + xx + uu + xx * xx + xx * uu + uu * uu)


def greedy_action(w: np.ndarray, x: float, u_min: float, u_max: float) -> float:
    """Control minimizing the approximate action value at ``x``.

    The approximator is quadratic in u with curvature ``2 * w[u^2]``; convex
    cases clamp the stationary point to the bounds, otherwise the cheaper
    endpoint wins with ties toward ``u_min``.
    """
    if w[F_UU] > 0.0:
        g = -(w[F_U] + w[F_XU] * x) / (2.0 * w[F_UU])
        return min(max(g, u_min), u_max)
    q_lo = float(features(x, u_min) @ w)
    q_hi = float(features(x, u_max) @ w)
    return u_min if q_lo <= q_hi else u_max


def greedy_actions(w: np.ndarray, x: np.ndarray, u_min: float, u_max: float) -> np.ndarray:
    """Vectorized :func:`greedy_action`."""
    x = np.asarray(x, dtype=np.float64)
    if w[F_UU] > 0.0:
        g = -(w[F_U] + w[F_XU] * x) / (2.0 * w[F_UU])
        return np.minimum(np.maximum(g, u_min), u_max)
    q_lo = features_matrix(x, np.full_like(x, u_min)) @ w
    q_hi = features_matrix(x, np.full_like(x, u_max)) @ w
    return np.where(q_lo <= q_hi, u_min, u_max)


def fa_update(w: np.ndarray, mdp: DiscreteMdp, x: float, u: float, lr: float) -> np.ndarray:
    """One semi-gradient step; returns the new weight vector.

    The bootstrap target uses the raw Euler successor, not the snapped one:
    the approximator lives on the continuum and snapping would inject grid
    bias into it.
    """
    phi = features(x, u)
    qsa = float(phi @ w)
    xn = mdp.euler_next(x, u)
    un = greedy_action(w, xn, mdp.problem.u_min, mdp.problem.u_max)
    target = mdp.dt * mdp.problem.running_cost(x, u) + mdp.discount_factor * float(
        features(xn, un) @ w
    )
    return w + lr * (target - qsa) * phi


@dataclass
class FaTrainLog:
    """Checkpoint history: weight norm and mean probe Bellman residual."""

    steps: np.ndarray
    w_norm: np.ndarray
    probe_residual: np.ndarray
    tripped: bool = False
    trip_iteration: int | None = None


def probe_points(problem: LqProblem) -> tuple[np.ndarray, np.ndarray]:
    """Fixed grid of (x, u) pairs strictly inside the domain box."""
    px = np.linspace(problem.x_min, problem.x_max, N_PROBE_EDGE + 2)[1:-1]
    pu = np.linspace(problem.u_min, problem.u_max, N_PROBE_EDGE + 2)[1:-1]
    gx, gu = np.meshgrid(px, pu, indexing="ij")
    return gx.ravel(), gu.ravel()


def bellman_residual(w: np.ndarray, mdp: DiscreteMdp, px: np.ndarray, pu: np.ndarray) -> float:
    """Mean absolute one-step Bellman error of ``w`` over a probe set."""
    p = mdp.problem
    qsa = features_matrix(px, pu) @ w
    xn = px + mdp.dt * (p.drift * px + p.control_gain * pu)
    un = greedy_actions(w, xn, p.u_min, p.u_max)
    qn = features_matrix(xn, un) @ w
    target = mdp.dt * (p.state_cost * px * px + p.control_cost * pu * pu)
    target = target + mdp.discount_factor * qn
    return float(np.mean(np.abs(target - qsa)))


def fa_train(
    mdp: DiscreteMdp,
    n_steps: int,
    seed: int = 0,
    lr_mode: str = BOUND_SCALED,
    lr_param: float = 0.5,
    log_every: int = 1000,
    monitor: DivergenceMonitor | None = None,
) -> tuple[np.ndarray, FaTrainLog]:
    """Train from zero weights on uniformly sampled (x, u) pairs.

    ``lr_mode=BOUND_SCALED`` steps with ``lr_param * step_bound(x, u)`` at
    each sample (``lr_param`` must lie in (0, 1] to respect the bound);
    ``CONSTANT`` uses ``lr_param`` directly.  Raises :class:`DivergedError`
    when ``max|w|`` passes the monitor threshold or a weight goes non-finite.
    """
    if lr_mode not in (CONSTANT, BOUND_SCALED):
        raise ConfigError(
            f"lr_mode must be {CONSTANT!r} or {BOUND_SCALED!r}", field="fa.lr_mode"
        )
    if lr_mode == BOUND_SCALED and not 0.0 < lr_param <= 1.0:
        raise ConfigError(
            "bound-scaled fraction must lie in (0, 1]", field="fa.fraction"
        )
    monitor = monitor or DivergenceMonitor()
    p = mdp.problem
    px, pu = probe_points(p)
    w = np.zeros(6)
    mode = 1 if lr_mode == BOUND_SCALED else 0

    steps_log = [0]
    norms = [0.0]
    residuals = [bellman_residual(w, mdp, px, pu)]
    rng_state = seed
    total = 0
    tripped = False
    while total < n_steps:
        budget = min(log_every, n_steps - total)
        rng_state, done, trip = kernels.fa_run(
            w, budget, mdp.dt, p.drift, p.control_gain, p.state_cost,
            p.control_cost, mdp.discount_factor, p.x_min, p.x_max,
            p.u_min, p.u_max, mode, lr_param, monitor.threshold, rng_state,
        )
        total += done
        steps_log.append(total)
        norms.append(float(np.sqrt(np.sum(w * w))))
        residuals.append(bellman_residual(w, mdp, px, pu))
        if trip:
            tripped = True
            monitor.observe_values(w, total - 1)
            break

    log = FaTrainLog(
        steps=np.asarray(steps_log),
        w_norm=np.asarray(norms),
        probe_residual=np.asarray(residuals),
        tripped=tripped,
        trip_iteration=total - 1 if tripped else None,
    )
    if tripped:
        raise DivergedError(total - 1, weights=w, log=log)
    return w, log


def one_step_target_weights(mdp: DiscreteMdp, quad_coef_d: float) -> np.ndarray:
    """Exact feature expansion of ``dt*cost + discount * quad_coef_d * x'^2``.

    ``x' = a x + b u`` with ``a = 1 + dt*drift`` and ``b = dt*gain``, so the
    one-step target is itself quadratic and lands exactly in the feature span.
    """
    p = mdp.problem
    a = 1.0 + mdp.dt * p.drift
    b = mdp.dt * p.control_gain
    gd = mdp.discount_factor * quad_coef_d
    w = np.zeros(6)
    w[F_XX] = mdp.dt * p.state_cost + gd * a * a
    w[F_XU] = 2.0 * gd * a * b
    w[F_UU] = mdp.dt * p.control_cost + gd * b * b
    return w


def one_step_target_values(
    mdp: DiscreteMdp, quad_coef_d: float, x: np.ndarray, u: np.ndarray
) -> np.ndarray:
    """Sampled values of the same one-step target."""
    p = mdp.problem
    xn = x + mdp.dt * (p.drift * x + p.control_gain * u)
    return (
        mdp.dt * (p.state_cost * x * x + p.control_cost * u * u)
        + mdp.discount_factor * quad_coef_d * xn * xn
    )


def fit_weights(x: np.ndarray, u: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Least-squares weights reproducing ``targets`` at the samples."""
    sol, *_ = np.linalg.lstsq(features_matrix(x, u), targets, rcond=None)
    return sol
