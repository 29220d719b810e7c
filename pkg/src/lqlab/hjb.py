"""Fixed-point solvers for the stationary dynamic-programming equation.

The continuous optimality equation ``discount_rate * V = min_u H(x, u, V')``
is relaxed into the sweep ``V <- ((g - discount_rate)/g) V + H*/g`` with
relaxation rate ``g``; with one-sided differences chosen by the sign of the
closed-loop drive ``drift*x + gain*u`` (upwind) every stencil coefficient is
nonnegative once the mesh bound holds, which is exactly the monotonicity
property the analysis module probes.  Downwind deliberately swaps the sides
and central differencing uses the symmetric slope; both are provided as
instability control cases.

``value_iteration`` re-minimizes the control every sweep; ``policy_iteration``
alternates full evaluation of a frozen control field with greedy improvement.
Both delegate their inner loops to the selected kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._backend import kernels
from ._pure import minimize_hamiltonian_all
from .errors import ConfigError, DivergedError, NotConvergedError
from .grid import Grid1D, PolicyField, ValueField
from .model import LqProblem, analytic_policy, riccati_solve

UPWIND = "upwind"
DOWNWIND = "downwind"
CENTRAL = "central"
_MODE_CODES = {UPWIND: 0, DOWNWIND: 1, CENTRAL: 2}

# r_coef variants for the sweep V <- r_coef * V + H/g.  Only "contractive"
# (row sums below one) is consistent with the optimality equation;
# "expansive" is exposed for side-by-side comparison and cannot converge.
CONTRACTIVE = "contractive"
EXPANSIVE = "expansive"

REGION_FORWARD = "forward"
REGION_BACKWARD = "backward"

_CHUNK = 4096


@dataclass(frozen=True)
class SchemeConfig:
    """Knobs of the fixed-point sweeps.

    ``relaxation_rate=None`` resolves to the smallest rate for which the
    center coefficient stays nonnegative for every control in the action box
    (see :func:`auto_relaxation_rate`).  ``tol``/``max_iters`` govern value
    iteration; ``eval_tol``/``max_eval_iters`` one policy-evaluation phase and
    ``policy_tol``/``max_improve_rounds`` the improvement loop.
    """

    relaxation_rate: float | None = None
    differencing: str = UPWIND
    tol: float = 1e-8
    max_iters: int = 10**6
    eval_tol: float = 1e-10
    policy_tol: float = 1e-8
    max_eval_iters: int = 10**6
    max_improve_rounds: int = 100
    coefficient_form: str = CONTRACTIVE

    def __post_init__(self):
        if self.differencing not in _MODE_CODES:
            raise ConfigError(
                f"differencing must be one of {sorted(_MODE_CODES)}, "
                f"got {self.differencing!r}",
                field="scheme.differencing",
            )
        if self.coefficient_form not in (CONTRACTIVE, EXPANSIVE):
            raise ConfigError(
                f"coefficient_form must be {CONTRACTIVE!r} or {EXPANSIVE!r}",
                field="scheme.coefficient_form",
            )
        for name in ("tol", "eval_tol", "policy_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive", field=f"scheme.{name}")

    def resolved(self, problem: LqProblem, grid: Grid1D) -> "SchemeConfig":
        """Copy with a concrete relaxation rate, validated against ``problem``."""
        rate = self.relaxation_rate
        if rate is None:
            rate = auto_relaxation_rate(problem, grid)
        if not rate > problem.discount_rate:
            raise ConfigError(
                "relaxation_rate must exceed the discount rate "
                f"({rate} <= {problem.discount_rate})",
                field="scheme.relaxation_rate",
            )
        return replace(self, relaxation_rate=rate)


def auto_relaxation_rate(problem: LqProblem, grid: Grid1D) -> float:
    """Smallest relaxation rate keeping the scheme monotone on ``grid``.

    Bounds the drive ``|drift*x + gain*u|`` over the whole state/action box,
    so the center coefficient is nonnegative no matter which control the
    minimization picks at any point of any sweep.
    """
    x_big = max(abs(problem.x_min), abs(problem.x_max))
    u_big = max(abs(problem.u_min), abs(problem.u_max))
    drive_max = abs(problem.drift) * x_big + abs(problem.control_gain) * u_big
    return problem.discount_rate + drive_max / grid.dx


def monotone_mesh_bound(
    problem: LqProblem, cfg: SchemeConfig, x_i: float, u_star: float
) -> float:
    """Minimum admissible mesh width at a node with frozen control.

    The center coefficient of the upwind stencil is nonnegative iff
    ``dx >= |drift*x + gain*u*| / (relaxation_rate - discount_rate)``;
    equality (a zero coefficient) is admissible.
    """
    if cfg.relaxation_rate is None:
        raise ValueError("resolve the scheme config before computing mesh bounds")
    drive = problem.drift * x_i + problem.control_gain * u_star
    return abs(drive) / (cfg.relaxation_rate - problem.discount_rate)


def _r_coef(problem: LqProblem, cfg: SchemeConfig) -> float:
    g = cfg.relaxation_rate
    if cfg.coefficient_form == CONTRACTIVE:
        return (g - problem.discount_rate) / g
    return (g + problem.discount_rate) / g


def _validate_problem(problem: LqProblem):
    if not problem.control_gain > 0:
        raise ConfigError(
            "HJB solvers require a positive control gain",
            field="problem.control_gain",
        )
    sol = riccati_solve(problem)
    u_lo = min(analytic_policy(sol, problem.x_min, problem),
               analytic_policy(sol, problem.x_max, problem))
    u_hi = max(analytic_policy(sol, problem.x_min, problem),
               analytic_policy(sol, problem.x_max, problem))
    if u_lo < problem.u_min or u_hi > problem.u_max:
        raise ConfigError(
            "control bounds are too tight: the optimal feedback "
            f"ranges over [{u_lo}, {u_hi}] but the box is "
            f"[{problem.u_min}, {problem.u_max}]",
            field="problem.u_min",
        )


# ---------------------------------------------------------------------------
# per-node Hamiltonian minimization (public, scalar)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HamiltonianResult:
    """Minimizer of the split-region Hamiltonian at one node.

    ``region`` is ``"forward"`` when the drive ``drift*x + gain*u_star`` is
    nonnegative (the forward-difference side under upwinding), else
    ``"backward"``.
    """

    u_star: float
    h_star: float
    region: str


def hamiltonian_minimize(
    problem: LqProblem,
    grid: Grid1D,
    v: ValueField,
    i: int,
    differencing: str = UPWIND,
) -> HamiltonianResult:
    """Minimize the discrete Hamiltonian at node ``i``.

    The control box splits at ``u = -drift*x/gain`` into the region where the
    drive is nonnegative (slope ``s1``) and its complement (slope ``s2``);
    under upwinding ``s1`` is the forward difference and ``s2`` the backward
    one, downwind swaps them, central uses the symmetric slope for both.
    Each region yields a projected quadratic minimizer; near-ties go to the
    smaller ``|u|``, then to the forward region.  The infimum over the open
    backward region is attained at its closed boundary, where the drive is
    exactly zero and the result is reported as forward.
    """
    if not 0 <= i < grid.n_nodes:
        raise IndexError(f"node index {i} outside grid")
    mode = _MODE_CODES[differencing]
    u, h = minimize_hamiltonian_all(
        np.asarray(v.values, dtype=np.float64),
        grid.nodes(),
        grid.dx,
        problem.drift,
        problem.control_gain,
        problem.state_cost,
        problem.control_cost,
        problem.u_min,
        problem.u_max,
        mode,
    )
    drive = problem.drift * grid.node(i) + problem.control_gain * u[i]
    region = REGION_FORWARD if drive >= 0.0 else REGION_BACKWARD
    return HamiltonianResult(u_star=float(u[i]), h_star=float(h[i]), region=region)


def minimize_all(
    problem: LqProblem, grid: Grid1D, v: ValueField, differencing: str = UPWIND
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`hamiltonian_minimize`: ``(u_star, h_star)`` arrays."""
    return minimize_hamiltonian_all(
        np.asarray(v.values, dtype=np.float64),
        grid.nodes(),
        grid.dx,
        problem.drift,
        problem.control_gain,
        problem.state_cost,
        problem.control_cost,
        problem.u_min,
        problem.u_max,
        _MODE_CODES[differencing],
    )


def optimality_residual(
    problem: LqProblem, grid: Grid1D, v: ValueField, differencing: str = UPWIND
) -> np.ndarray:
    """Discrete optimality-equation residual ``min_u H - discount_rate * V``."""
    _, h = minimize_all(problem, grid, v, differencing)
    return h - problem.discount_rate * v.values


# ---------------------------------------------------------------------------
# convergence logging
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceLog:
    """Per-sweep history: residual ``max|V_hat - V|`` and ``max|V|``.

    For policy iteration ``rounds`` labels each sweep with its improvement
    round and ``policy_deltas`` holds ``max|u_hat - u|`` per round.
    """

    residuals: np.ndarray
    sup_norms: np.ndarray
    relaxation_rate: float
    converged: bool
    trip_iteration: int | None = None
    rounds: np.ndarray | None = None
    policy_deltas: np.ndarray | None = None

    @property
    def n_iterations(self) -> int:
        return len(self.residuals)


def _run_sweeps(run_one_chunk, max_iters, res_list, vmax_list):
    """Drive a kernel in chunks until it reports convergence, a trip, or
    budget exhaustion.  Returns (status, total_iterations)."""
    done = 0
    while done < max_iters:
        budget = min(_CHUNK, max_iters - done)
        res_buf = np.empty(budget)
        vmax_buf = np.empty(budget)
        n_done, status = run_one_chunk(budget, res_buf, vmax_buf)
        res_list.append(res_buf[:n_done].copy())
        vmax_list.append(vmax_buf[:n_done].copy())
        done += n_done
        if status != 0:
            return status, done
    return 0, done


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def value_iteration(
    problem: LqProblem,
    grid: Grid1D,
    cfg: SchemeConfig,
    v0: ValueField | None = None,
    div_threshold: float = 1e6,
) -> tuple[ValueField, PolicyField, ConvergenceLog]:
    """Jacobi value iteration from ``v0`` (zeros by default).

    Every sweep reads the previous iterate at all nodes, re-minimizes the
    control, and relaxes toward the Hamiltonian minimum.  Raises
    :class:`DivergedError` when the sup norm passes ``div_threshold`` or a
    non-finite value appears, :class:`NotConvergedError` when ``max_iters``
    runs out; both carry the partial fields in ``artifacts``.
    """
    _validate_problem(problem)
    cfg = cfg.resolved(problem, grid)
    x = grid.nodes()
    v = np.array(v0.values if v0 is not None else np.zeros(grid.n_nodes),
                 dtype=np.float64)
    mode = _MODE_CODES[cfg.differencing]
    r_coef = _r_coef(problem, cfg)
    inv_gs = 1.0 / cfg.relaxation_rate
    res_list: list[np.ndarray] = []
    vmax_list: list[np.ndarray] = []

    def chunk(budget, res_buf, vmax_buf):
        return kernels.vi_run(
            v, x, grid.dx, problem.drift, problem.control_gain,
            problem.state_cost, problem.control_cost, r_coef, inv_gs,
            problem.u_min, problem.u_max, mode,
            cfg.tol, div_threshold, budget, res_buf, vmax_buf,
        )

    status, done = _run_sweeps(chunk, cfg.max_iters, res_list, vmax_list)

    vf = ValueField(grid, v)
    u_star, _ = minimize_all(problem, grid, vf, cfg.differencing)
    pf = PolicyField(grid, u_star)
    log = ConvergenceLog(
        residuals=np.concatenate(res_list) if res_list else np.empty(0),
        sup_norms=np.concatenate(vmax_list) if vmax_list else np.empty(0),
        relaxation_rate=cfg.relaxation_rate,
        converged=status == 1,
        trip_iteration=done - 1 if status == 2 else None,
    )
    if status == 2:
        raise DivergedError(done - 1, value_field=vf, policy_field=pf, log=log)
    if status == 0:
        raise NotConvergedError(done, value_field=vf, policy_field=pf, log=log)
    return vf, pf, log


def policy_iteration(
    problem: LqProblem,
    grid: Grid1D,
    cfg: SchemeConfig,
    u0: PolicyField | None = None,
    div_threshold: float = 1e6,
) -> tuple[ValueField, PolicyField, ConvergenceLog]:
    """Alternating policy evaluation and greedy improvement.

    Evaluation iterates the fixed-control sweep until ``eval_tol``; the slope
    side is chosen per node by the sign of the drive so the frozen-policy
    operator matches the differencing mode.  Improvement re-minimizes the
    Hamiltonian on the evaluated field; the loop stops when the policy moves
    by less than ``policy_tol`` in sup norm.
    """
    _validate_problem(problem)
    cfg = cfg.resolved(problem, grid)
    x = grid.nodes()
    u = np.array(
        u0.controls if u0 is not None else np.ones(grid.n_nodes), dtype=np.float64
    )
    if u.min() < problem.u_min or u.max() > problem.u_max:
        raise ConfigError("initial policy violates the control bounds", field="pi.u0")
    v = np.zeros(grid.n_nodes)
    mode = _MODE_CODES[cfg.differencing]
    r_coef = _r_coef(problem, cfg)
    inv_gs = 1.0 / cfg.relaxation_rate
    res_list: list[np.ndarray] = []
    vmax_list: list[np.ndarray] = []
    round_list: list[np.ndarray] = []
    deltas: list[float] = []

    def finish(converged, trip_iter=None):
        return ConvergenceLog(
            residuals=np.concatenate(res_list) if res_list else np.empty(0),
            sup_norms=np.concatenate(vmax_list) if vmax_list else np.empty(0),
            relaxation_rate=cfg.relaxation_rate,
            converged=converged,
            trip_iteration=trip_iter,
            rounds=np.concatenate(round_list) if round_list else np.empty(0, int),
            policy_deltas=np.asarray(deltas),
        )

    total = 0
    for rnd in range(cfg.max_improve_rounds):
        n_before = sum(len(r) for r in res_list)

        def chunk(budget, res_buf, vmax_buf):
            return kernels.pe_run(
                v, u, x, grid.dx, problem.drift, problem.control_gain,
                problem.state_cost, problem.control_cost, r_coef, inv_gs,
                mode, cfg.eval_tol, div_threshold, budget, res_buf, vmax_buf,
            )

        status, done = _run_sweeps(
            chunk, cfg.max_eval_iters, res_list, vmax_list
        )
        n_new = sum(len(r) for r in res_list) - n_before
        round_list.append(np.full(n_new, rnd, dtype=int))
        total += done

        if status != 1:
            vf = ValueField(grid, v)
            pf = PolicyField(grid, u)
            if status == 2:
                log = finish(False, trip_iter=total - 1)
                raise DivergedError(total - 1, value_field=vf, policy_field=pf, log=log)
            log = finish(False)
            raise NotConvergedError(total, value_field=vf, policy_field=pf, log=log)

        u_new, _ = minimize_all(
            problem, grid, ValueField(grid, v), cfg.differencing
        )
        du = float(np.max(np.abs(u_new - u)))
        deltas.append(du)
        u = u_new
        if du < cfg.policy_tol:
            return ValueField(grid, v), PolicyField(grid, u), finish(True)

    vf = ValueField(grid, v)
    pf = PolicyField(grid, u)
    log = finish(False)
    raise NotConvergedError(total, value_field=vf, policy_field=pf, log=log)
