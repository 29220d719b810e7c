"""The scalar linear-quadratic control problem and its closed-form solution.

State dynamics are ``dx/dt = drift * x + control_gain * u`` with running cost
``state_cost * x^2 + control_cost * u^2`` discounted at ``discount_rate``.
The optimal value function is ``quad_coef * x^2`` where ``quad_coef`` solves a
scalar quadratic, and the optimal control is linear feedback; both serve as
the oracle every numerical scheme in this package is tested against.

:class:`DiscreteMdp` is the explicit-Euler, grid-snapped discretization the
tabular and function-approximation learners operate on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NoPositiveRootError
from .grid import Grid1D


@dataclass(frozen=True)
class LqProblem:
    """Problem constants and the state/action box.

    Defaults give the benchmark configuration used throughout the test suite:
    moderately unstable drift, unit discount rate and unit cost weights.
    """

    drift: float = 0.5
    discount_rate: float = 1.0
    state_cost: float = 1.0
    control_cost: float = 1.0
    control_gain: float = 1.0
    x_min: float = -2.0
    x_max: float = 2.0
    u_min: float = -4.0
    u_max: float = 4.0

    def __post_init__(self):
        if not self.discount_rate > 0:
            raise ValueError("discount_rate must be positive")
        if not (self.state_cost > 0 and self.control_cost > 0):
            raise ValueError("state_cost and control_cost must be positive")
        if not self.x_min < 0 < self.x_max:
            raise ValueError("state domain must bracket the equilibrium x = 0")
        if not self.u_min < 0 < self.u_max:
            raise ValueError("action domain must bracket u = 0")

    def running_cost(self, x: float, u: float) -> float:
        return self.state_cost * x * x + self.control_cost * u * u


@dataclass(frozen=True)
class RiccatiSolution:
    """Coefficients of the quadratic value ansatz ``quad_coef*x^2 + 2*lin_coef*x + offset``.

    For a problem with symmetric cost centered at the origin both ``lin_coef``
    and ``offset`` vanish; they are carried so the residual checks can assert
    exactly that.
    """

    quad_coef: float
    lin_coef: float = 0.0
    offset: float = 0.0


def riccati_residual(problem: LqProblem, quad_coef: float) -> float:
    """Value of the scalar Riccati quadratic at ``quad_coef``; zero at a root."""
    b2_over_r = problem.control_gain**2 / problem.control_cost
    return (
        b2_over_r * quad_coef * quad_coef
        + (problem.discount_rate - 2.0 * problem.drift) * quad_coef
        - problem.state_cost
    )


def riccati_solve(problem: LqProblem) -> RiccatiSolution:
    """Positive root of the scalar Riccati quadratic.

    Solves ``(B^2/R) g^2 + (discount_rate - 2*drift) g - Q = 0`` for its
    positive root using the cancellation-free quadratic formula.  The product
    of the roots is ``-Q*R/B^2 < 0``, so exactly one root is positive; it is
    also the algebraically larger one, which keeps the value function
    positive definite.
    """
    a = problem.control_gain**2 / problem.control_cost
    b = problem.discount_rate - 2.0 * problem.drift
    c = -problem.state_cost
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise NoPositiveRootError("negative discriminant in Riccati quadratic")
    sq = math.sqrt(disc)
    if b >= 0:
        root = (2.0 * c) / (-b - sq)
    else:
        root = (-b + sq) / (2.0 * a)
    if not root > 0:
        raise NoPositiveRootError(f"no positive Riccati root (got {root})")
    return RiccatiSolution(quad_coef=root)


def analytic_value(sol: RiccatiSolution, x: float):
    """Closed-form optimal value at ``x``; accepts arrays transparently."""
    return sol.quad_coef * x * x + 2.0 * sol.lin_coef * x + sol.offset


def analytic_policy(sol: RiccatiSolution, x: float, problem: LqProblem | None = None):
    """Closed-form optimal feedback control at ``x``.

    General form ``-B*(quad_coef*x + lin_coef)/R``; with unit gain and cost
    weights this is just ``-quad_coef * x``.
    """
    if problem is None:
        return -sol.quad_coef * x - sol.lin_coef
    scale = problem.control_gain / problem.control_cost
    return -scale * (sol.quad_coef * x + sol.lin_coef)


@dataclass(frozen=True)
class DiscreteMdp:
    """Explicit-Euler discretization of the problem on state/action grids.

    One step from ``x`` under ``u`` moves to the state-grid node nearest to
    ``x + dt*(drift*x + gain*u)`` (clamped to the domain) and pays
    ``dt * running_cost(x, u)``.  Costs are discounted per step by
    ``discount_factor``.
    """

    problem: LqProblem
    dt: float
    discount_factor: float
    state_grid: Grid1D
    action_grid: Grid1D

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0.0 < self.discount_factor < 1.0:
            raise ValueError("discount_factor must lie in (0, 1)")

    @classmethod
    def from_problem(
        cls,
        problem: LqProblem,
        dt: float = 0.1,
        n_state_nodes: int = 161,
        n_action_nodes: int = 41,
    ) -> "DiscreteMdp":
        """Build the MDP with ``discount_factor = exp(-discount_rate * dt)``."""
        return cls(
            problem=problem,
            dt=dt,
            discount_factor=math.exp(-problem.discount_rate * dt),
            state_grid=Grid1D(problem.x_min, problem.x_max, n_state_nodes),
            action_grid=Grid1D(problem.u_min, problem.u_max, n_action_nodes),
        )

    def euler_next(self, x: float, u: float) -> float:
        """Raw (un-snapped) Euler successor state."""
        return x + self.dt * (self.problem.drift * x + self.problem.control_gain * u)


def mdp_step(mdp: DiscreteMdp, x: float, u: float) -> tuple[float, float]:
    """One discrete transition: snapped successor node value and step cost."""
    raw = mdp.euler_next(x, u)
    i = mdp.state_grid.snap_index(raw)
    cost = mdp.dt * mdp.problem.running_cost(x, u)
    return mdp.state_grid.node(i), cost
