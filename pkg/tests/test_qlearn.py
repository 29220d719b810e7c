import math

import numpy as np
import pytest

from lqlab import (
    DiscreteMdp,
    DivergedError,
    DivergenceMonitor,
    LqProblem,
    QLearnConfig,
    QTable,
    analytic_policy,
    greedy_extract,
    q_train,
    q_update,
    riccati_solve,
    rollout_return,
)
from lqlab.qlearn import (
    VISIT_DECAY,
    solve_synchronous,
    synchronous_sweep,
    transition_tables,
)
from lqlab.model import mdp_step
from lqlab.monotone import probe_operator_monotonicity


@pytest.fixture(scope="module")
def mdp(problem):
    return DiscreteMdp.from_problem(problem, dt=0.1, n_state_nodes=41, n_action_nodes=21)


def small_cfg(**kw):
    defaults = dict(learning_rate=0.8, epsilon=0.1, n_episodes=150, episode_len=50, seed=0)
    defaults.update(kw)
    return QLearnConfig(**defaults)


class TestQUpdate:
    def test_zero_rate_leaves_entry(self, mdp):
        qt = QTable.zeros(mdp)
        qt.q[:] = 3.5
        q_update(qt, mdp, 5, 7, lr=0.0)
        assert qt.q[5, 7] == 3.5

    def test_unit_rate_writes_bare_cost_from_zero_table(self, mdp):
        qt = QTable.zeros(mdp)
        s, a = 30, 4
        x, u = mdp.state_grid.node(s), mdp.action_grid.node(a)
        new = q_update(qt, mdp, s, a, lr=1.0)
        assert new == mdp.dt * mdp.problem.running_cost(x, u)

    def test_half_rate_arithmetic(self):
        # cost 2 with zero bootstrap and lr 0.5 halves the target
        p = LqProblem()
        mdp = DiscreteMdp(p, dt=1.0, discount_factor=0.9,
                          state_grid=DiscreteMdp.from_problem(p).state_grid,
                          action_grid=DiscreteMdp.from_problem(p).action_grid)
        qt = QTable.zeros(mdp)
        s = mdp.state_grid.snap_index(1.0)
        a = mdp.action_grid.snap_index(-1.0)
        new = q_update(qt, mdp, s, a, lr=0.5)
        assert new == pytest.approx(0.5 * 2.0, abs=1e-12)

    def test_matches_transition_tables(self, mdp):
        next_idx, cost = transition_tables(mdp)
        rng = np.random.default_rng(1)
        for _ in range(50):
            s = int(rng.integers(mdp.state_grid.n_nodes))
            a = int(rng.integers(mdp.action_grid.n_nodes))
            nxt, c = mdp_step(mdp, mdp.state_grid.node(s), mdp.action_grid.node(a))
            assert mdp.state_grid.snap_index(nxt) == next_idx[s, a]
            assert c == cost[s, a]


class TestTrain:
    def test_seed_determinism_is_bit_exact(self, mdp):
        qt1, log1 = q_train(mdp, small_cfg())
        qt2, log2 = q_train(mdp, small_cfg())
        assert np.array_equal(qt1.q, qt2.q)
        assert np.array_equal(qt1.visits, qt2.visits)
        assert np.array_equal(log1.sup_err, log2.sup_err)

    def test_different_seeds_differ(self, mdp):
        qt1, _ = q_train(mdp, small_cfg(seed=0))
        qt2, _ = q_train(mdp, small_cfg(seed=1))
        assert not np.array_equal(qt1.q, qt2.q)

    def test_converges_toward_synchronous_fixed_point(self, mdp):
        exact = solve_synchronous(mdp, tol=1e-13)
        qt, log = q_train(mdp, small_cfg(n_episodes=3000))
        # greedy values are pinned by the frequently-updated greedy actions
        v_gap = np.max(np.abs(qt.q.min(axis=1) - exact.q.min(axis=1)))
        assert v_gap < 1e-9
        well_visited = qt.visits >= 100
        assert well_visited.any()
        assert np.max(np.abs(qt.q[well_visited] - exact.q[well_visited])) < 1e-9
        assert log.sup_err[-1] < log.sup_err[0]

    def test_visit_decay_schedule_runs_and_stays_bounded(self, mdp):
        qt, log = q_train(mdp, small_cfg(schedule=VISIT_DECAY, n_episodes=400))
        assert np.isfinite(qt.q).all()
        assert log.max_abs_q[-1] < 100.0

    def test_divergence_raises_with_artifacts(self, mdp):
        cfg = small_cfg(learning_rate=1.8, n_episodes=3000)
        with pytest.raises(DivergedError) as exc:
            q_train(mdp, cfg)
        log = exc.value.artifacts["log"]
        assert log.tripped
        assert exc.value.trip_iteration == log.trip_iteration
        assert log.max_abs_q[-1] > 1e6 or not np.isfinite(log.max_abs_q[-1])

    def test_stable_rate_does_not_trip_same_seed(self, mdp):
        # divergence monotonicity in the step size on one seed
        monitor = DivergenceMonitor()
        q_train(mdp, small_cfg(learning_rate=0.8, n_episodes=1500), monitor=monitor)
        assert not monitor.tripped


class TestGreedyExtract:
    def test_quadratic_action_rows(self, mdp):
        qt = QTable.zeros(mdp)
        us = mdp.action_grid.nodes()
        qt.q[:] = us * us
        values, policy = greedy_extract(qt)
        assert np.all(values.values == 0.0)
        assert np.all(policy.controls == 0.0)

    def test_constant_rows_tie_break_to_zero(self, mdp):
        qt = QTable.zeros(mdp)
        qt.q[:] = 7.0
        values, policy = greedy_extract(qt)
        assert np.all(values.values == 7.0)
        assert np.all(policy.controls == 0.0)

    def test_one_step_bellman_policy_tracks_feedback(self, problem):
        # table filled with cost + discounted analytic continuation of the
        # snapped successor: the greedy action stays within one action cell
        # of the continuous feedback law on interior states, provided the
        # state snapping resolves controls finer than the action grid
        mdp = DiscreteMdp.from_problem(problem, dt=0.02, n_state_nodes=2001, n_action_nodes=41)
        sol = riccati_solve(problem)
        next_idx, cost = transition_tables(mdp)
        xn = mdp.state_grid.nodes()[next_idx]
        qt = QTable.zeros(mdp)
        qt.q[:] = cost + mdp.discount_factor * sol.quad_coef * xn * xn
        _, policy = greedy_extract(qt)
        du = mdp.action_grid.dx
        x = mdp.state_grid.nodes()
        cut = len(x) // 6
        target = analytic_policy(sol, x, problem)
        assert np.max(np.abs(policy.controls - target)[cut:-cut]) <= du + 1e-12


class TestRollout:
    def test_zero_state_zero_policy(self, mdp):
        _, policy = greedy_extract(QTable.zeros(mdp))
        assert rollout_return(mdp, policy, 0.0, horizon=100) == 0.0

    def test_zero_horizon(self, mdp):
        _, policy = greedy_extract(QTable.zeros(mdp))
        assert rollout_return(mdp, policy, 1.0, horizon=0) == 0.0

    def test_analytic_policy_return_near_continuous_value(self, problem):
        # fine grids, small step: the discounted rollout cost approaches
        # the closed-form value at the start state
        sol = riccati_solve(problem)
        mdp = DiscreteMdp.from_problem(problem, dt=0.01, n_state_nodes=1601, n_action_nodes=81)
        from lqlab.grid import PolicyField

        pi = PolicyField(
            mdp.state_grid, analytic_policy(sol, mdp.state_grid.nodes(), problem)
        )
        horizon = int(math.ceil(math.log(1e-10) / math.log(mdp.discount_factor)))
        got = rollout_return(mdp, pi, 1.0, horizon)
        expected = sol.quad_coef * 1.0
        assert got == pytest.approx(expected, rel=0.05)


class TestSynchronous:
    def test_contraction_ratio_bounded_by_discount(self, mdp):
        qt = QTable.zeros(mdp)
        prev = None
        last = qt
        for sweep in range(12):
            nxt = synchronous_sweep(last, lr=1.0)
            dist = float(np.max(np.abs(nxt.q - last.q)))
            if prev is not None and prev > 1e-14:
                assert dist <= mdp.discount_factor * prev + 1e-12
            prev = dist
            last = nxt

    def test_solve_reaches_bellman_fixed_point(self, mdp):
        qt = solve_synchronous(mdp, tol=1e-13)
        nxt = synchronous_sweep(qt, lr=1.0)
        assert np.max(np.abs(nxt.q - qt.q)) < 1e-12


class TestMonotoneStepRegime:
    """Frozen-(s, a) update coefficients and the ordered-pair view."""

    def make_operator(self, mdp, s, a, lr):
        next_idx, cost = transition_tables(mdp)
        shape = (mdp.state_grid.n_nodes, mdp.action_grid.n_nodes)

        def apply_s(flat):
            q = flat.reshape(shape).copy()
            target = cost[s, a] + mdp.discount_factor * q[next_idx[s, a]].min()
            q[s, a] = (1.0 - lr) * q[s, a] + lr * target
            return q.ravel()

        return apply_s, next_idx

    def test_coefficients_by_rate(self, mdp):
        for lr in (0.0, 0.5, 1.0):
            assert 1.0 - lr >= 0.0
            assert lr * mdp.discount_factor >= 0.0
        assert 1.0 - 1.3 < 0.0

    def test_targeted_bump_detects_over_relaxation(self, mdp):
        s, a = 30, 4
        apply_05, next_idx = self.make_operator(mdp, s, a, 0.5)
        apply_13, _ = self.make_operator(mdp, s, a, 1.3)
        assert next_idx[s, a] != s  # self-transitions would mix coefficients
        shape = (mdp.state_grid.n_nodes, mdp.action_grid.n_nodes)
        rng = np.random.default_rng(3)
        base = rng.uniform(0.0, 4.0, shape).ravel()
        flat_idx = s * shape[1] + a
        bump = np.zeros_like(base)
        bump[flat_idx] = 1.0
        gap_05 = apply_05(base + bump) - apply_05(base)
        gap_13 = apply_13(base + bump) - apply_13(base)
        assert np.all(gap_05 >= -1e-12)
        assert gap_13[flat_idx] < -1e-12

    def test_random_probe_confirms_rate_regimes(self, mdp):
        s, a = 30, 4
        apply_05, _ = self.make_operator(mdp, s, a, 0.5)
        apply_13, _ = self.make_operator(mdp, s, a, 1.3)
        n = mdp.state_grid.n_nodes * mdp.action_grid.n_nodes
        ok = probe_operator_monotonicity(apply_05, n, seed=0, n_pairs=60)
        assert ok.n_violations == 0
        bad = probe_operator_monotonicity(apply_13, n, seed=0, n_pairs=60)
        # constant bumps raise every entry including (s, a) itself
        assert bad.n_violations >= 1
