"""Monotonicity probes, stencil coefficient extraction, and error metrics.

An update operator ``S`` is monotone when ``v <= w`` componentwise implies
``S(v) <= S(w)``.  For the linear (frozen-control) stencils this is
equivalent to every coefficient being nonnegative, so the module offers both
views: a black-box ordered-pair probe and direct coefficient extraction, plus
the divergence tripwire and sup-norm error metrics used across the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .grid import Grid1D, ValueField
from .hjb import (
    DOWNWIND,
    REGION_FORWARD,
    UPWIND,
    SchemeConfig,
    _r_coef,
    hamiltonian_minimize,
)
from .model import LqProblem, RiccatiSolution, analytic_value

VIOLATION_TOL = -1e-12


@dataclass
class MonotonicityReport:
    """Outcome of the ordered-pair probe.

    ``worst_violation`` is the most negative componentwise gap
    ``S(v+d) - S(v)`` seen; anything at or above -1e-12 counts as rounding,
    not a violation.
    """

    n_pairs_tested: int
    n_violations: int
    worst_violation: float
    violating_node: int | None


@dataclass
class CoefficientReport:
    """Frozen-control stencil coefficients per node.

    The update at node i reads
    ``c_minus[i]*v[i-1] + c_center[i]*v[i] + c_plus[i]*v[i+1] + constant[i]``;
    ``violations`` lists every strictly negative coefficient as
    ``(node, name, value)``.
    """

    c_minus: np.ndarray
    c_center: np.ndarray
    c_plus: np.ndarray
    constant: np.ndarray
    u_star: np.ndarray
    violations: list[tuple[int, str, float]] = field(default_factory=list)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Apply the frozen affine operator to a value array."""
        v = np.asarray(values, dtype=np.float64)
        out = self.c_center * v + self.constant
        out[1:] += self.c_minus[1:] * v[:-1]
        out[:-1] += self.c_plus[:-1] * v[1:]
        return out


@dataclass
class DivergenceMonitor:
    """Sup-norm tripwire; non-finite values trip regardless of threshold."""

    threshold: float = 1e6
    tripped: bool = False
    trip_iteration: int | None = None

    def observe(self, sup_norm: float, iteration: int) -> bool:
        if not self.tripped and (not np.isfinite(sup_norm) or sup_norm > self.threshold):
            self.tripped = True
            self.trip_iteration = iteration
        return self.tripped

    def observe_values(self, values: np.ndarray, iteration: int) -> bool:
        values = np.asarray(values)
        if not np.isfinite(values).all():
            return self.observe(np.nan, iteration)
        return self.observe(float(np.max(np.abs(values))), iteration)


def probe_operator_monotonicity(
    apply_s,
    size: int | Grid1D,
    seed: int,
    n_pairs: int,
    low: float = -2.0,
    high: float = 8.0,
    bump_scale: float = 1.0,
) -> MonotonicityReport:
    """Probe ``apply_s`` with ordered pairs ``(v, v + d)``, ``d >= 0``.

    Bumps cycle through single-node spikes, constant shifts, and dense
    nonnegative noise; base fields are uniform on ``[low, high]``.  Every
    component where ``S(v+d)`` drops more than 1e-12 below ``S(v)`` is
    recorded as a violation.
    """
    n = size.n_nodes if isinstance(size, Grid1D) else int(size)
    rng = np.random.default_rng(seed)
    n_violations = 0
    worst = 0.0
    worst_node = None
    for k in range(n_pairs):
        v = rng.uniform(low, high, n)
        d = np.zeros(n)
        kind = k % 3
        if kind == 0:
            d[rng.integers(n)] = rng.uniform(0.0, bump_scale)
        elif kind == 1:
            d[:] = rng.uniform(0.0, bump_scale)
        else:
            d = rng.uniform(0.0, bump_scale, n)
        gap = np.asarray(apply_s(v + d)) - np.asarray(apply_s(v))
        bad = gap < VIOLATION_TOL
        n_violations += int(np.count_nonzero(bad))
        i_min = int(np.argmin(gap))
        if gap[i_min] < worst:
            worst = float(gap[i_min])
            worst_node = i_min
    return MonotonicityReport(
        n_pairs_tested=n_pairs,
        n_violations=n_violations,
        worst_violation=worst,
        violating_node=worst_node,
    )


def coefficient_check(
    problem: LqProblem, grid: Grid1D, cfg: SchemeConfig, v: ValueField
) -> CoefficientReport:
    """Freeze the minimizing control at every node and extract the stencil.

    The slope side actually used by the sweep is reproduced exactly:
    boundary nodes fall back to their only one-sided difference, interior
    nodes follow the differencing mode and the drive sign.
    """
    if not np.isfinite(v.values).all():
        raise ValueError("coefficient_check requires a finite value field")
    cfg = cfg.resolved(problem, grid)
    n = grid.n_nodes
    x = grid.nodes()
    g = cfg.relaxation_rate
    r_coef = _r_coef(problem, cfg)
    inv_gdx = 1.0 / (g * grid.dx)

    c_minus = np.zeros(n)
    c_center = np.zeros(n)
    c_plus = np.zeros(n)
    constant = np.empty(n)
    u_star = np.empty(n)

    for i in range(n):
        res = hamiltonian_minimize(problem, grid, v, i, cfg.differencing)
        u_star[i] = res.u_star
        drive = problem.drift * x[i] + problem.control_gain * res.u_star
        if i == 0:
            side = "+"
        elif i == n - 1:
            side = "-"
        elif cfg.differencing == UPWIND:
            side = "+" if res.region == REGION_FORWARD else "-"
        elif cfg.differencing == DOWNWIND:
            side = "-" if res.region == REGION_FORWARD else "+"
        else:
            side = "0"
        k = drive * inv_gdx
        if side == "+":
            c_plus[i] = k
            c_center[i] = r_coef - k
        elif side == "-":
            c_minus[i] = -k
            c_center[i] = r_coef + k
        else:
            c_plus[i] = 0.5 * k
            c_minus[i] = -0.5 * k
            c_center[i] = r_coef
        constant[i] = (
            problem.state_cost * x[i] * x[i]
            + problem.control_cost * res.u_star * res.u_star
        ) / g

    violations = []
    for i in range(n):
        for name, arr in (("c_minus", c_minus), ("c_center", c_center), ("c_plus", c_plus)):
            if arr[i] < VIOLATION_TOL:
                violations.append((i, name, float(arr[i])))
    return CoefficientReport(c_minus, c_center, c_plus, constant, u_star, violations)


def frozen_policy_operator(
    problem: LqProblem, grid: Grid1D, cfg: SchemeConfig, v_ref: ValueField
):
    """Affine sweep operator with controls frozen at ``v_ref``'s minimizers.

    Returns ``(apply, report)``; ``apply`` maps a value array to one sweep of
    the linear stencil, which is the operator whose monotonicity the
    coefficient signs characterize.
    """
    report = coefficient_check(problem, grid, cfg, v_ref)
    return report.apply, report


def analytic_field(problem: LqProblem, grid: Grid1D, sol: RiccatiSolution) -> ValueField:
    """Closed-form value sampled on the grid; the standard probe reference."""
    return ValueField(grid, analytic_value(sol, grid.nodes()))


def _interior(n: int, interior_fraction: float) -> slice:
    if not 0.0 < interior_fraction <= 1.0:
        raise ConfigError("interior_fraction must lie in (0, 1]")
    cut = int(n * (1.0 - interior_fraction) / 2.0)
    return slice(cut, n - cut)


def sup_error(v: ValueField, sol: RiccatiSolution, interior_fraction: float = 1.0) -> float:
    """Max distance to the closed-form value over the central node window."""
    sel = _interior(v.grid.n_nodes, interior_fraction)
    x = v.grid.nodes()[sel]
    return float(np.max(np.abs(v.values[sel] - analytic_value(sol, x))))


def relative_sup_error(
    v: ValueField, sol: RiccatiSolution, interior_fraction: float = 1.0
) -> float:
    """:func:`sup_error` normalized by the peak analytic value on the window."""
    sel = _interior(v.grid.n_nodes, interior_fraction)
    x = v.grid.nodes()[sel]
    ref = analytic_value(sol, x)
    return float(np.max(np.abs(v.values[sel] - ref)) / np.max(np.abs(ref)))
