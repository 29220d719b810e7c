"""Pure-Python/numpy kernels: the fallback backend.

The compiled backend (``lqlab._core``) implements exactly the same contracts
with exactly the same floating-point operation order, so the two backends
produce bit-identical results.  When editing either file keep the arithmetic
in lockstep; the cross-backend equivalence tests enforce this.

Shared conventions:

* differencing mode: 0 = upwind, 1 = downwind, 2 = central
* run status: 0 = step budget exhausted, 1 = converged, 2 = divergence trip
* random stream: splitmix64; ``u01`` is ``(z >> 11) * 2**-53``
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_INV_2_53 = 1.0 / 9007199254740992.0
TIE_TOL = 1e-12


# ---------------------------------------------------------------------------
# splitmix64
# ---------------------------------------------------------------------------

def rng_next(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def rng_u01(state: int) -> tuple[int, float]:
    state, z = rng_next(state)
    return state, (z >> 11) * _INV_2_53


def rng_randint(state: int, n: int) -> tuple[int, int]:
    state, r = rng_u01(state)
    i = int(r * n)
    return state, n - 1 if i >= n else i


# ---------------------------------------------------------------------------
# Hamiltonian minimization over the split control regions
# ---------------------------------------------------------------------------

def _one_sided_slopes(v: np.ndarray, inv_dx: float) -> tuple[np.ndarray, np.ndarray]:
    """Forward/backward difference arrays with boundary fallback baked in."""
    n = v.shape[0]
    dp = np.empty(n)
    dm = np.empty(n)
    dp[:-1] = (v[1:] - v[:-1]) * inv_dx
    dm[1:] = (v[1:] - v[:-1]) * inv_dx
    dp[n - 1] = dm[n - 1]
    dm[0] = dp[0]
    return dp, dm


def _mode_slopes(v, inv_dx, mode):
    dp, dm = _one_sided_slopes(v, inv_dx)
    if mode == 0:
        return dp, dm
    if mode == 1:
        return dm, dp
    n = v.shape[0]
    s = np.empty(n)
    s[1:-1] = (v[2:] - v[:-2]) * (0.5 * inv_dx)
    s[0] = dp[0]
    s[-1] = dm[-1]
    return s, s


def minimize_hamiltonian_all(v, x, dx, drift, gain, q_cost, r_cost,
                             u_min, u_max, mode):
    """Per-node minimizer and minimum of the split-region Hamiltonian.

    Each region contributes a quadratic in u; the candidate minimizers are
    projected onto the region-intersected control bounds and the smaller
    value wins.  Near-ties (within TIE_TOL) resolve to the smaller ``|u|``,
    then to the nonnegative-drive region.

    Returns ``(u_star, h_star)`` arrays.
    """
    inv_dx = 1.0 / dx
    s1, s2 = _mode_slopes(np.asarray(v, dtype=np.float64), inv_dx, mode)
    ax = drift * x
    thr = -ax / gain

    lo1 = np.maximum(thr, u_min)
    u1 = np.minimum(np.maximum(-(s1 * gain) / (2.0 * r_cost), lo1), u_max)
    y1 = s1 * (ax + gain * u1) + q_cost * x * x + r_cost * u1 * u1
    y1 = np.where(lo1 > u_max, np.inf, y1)

    hi2 = np.minimum(thr, u_max)
    u2 = np.minimum(np.maximum(-(s2 * gain) / (2.0 * r_cost), u_min), hi2)
    y2 = s2 * (ax + gain * u2) + q_cost * x * x + r_cost * u2 * u2
    y2 = np.where(u_min > hi2, np.inf, y2)

    tie = np.abs(y1 - y2) <= TIE_TOL
    pick1 = np.where(tie, np.abs(u1) <= np.abs(u2), y1 < y2)
    return np.where(pick1, u1, u2), np.where(pick1, y1, y2)


def _fixed_policy_hamiltonian(v, u, x, dx, drift, gain, q_cost, r_cost, mode):
    inv_dx = 1.0 / dx
    dp, dm = _one_sided_slopes(v, inv_dx)
    drive = drift * x + gain * u
    if mode == 0:
        s = np.where(drive >= 0.0, dp, dm)
    elif mode == 1:
        s = np.where(drive >= 0.0, dm, dp)
    else:
        n = v.shape[0]
        s = np.empty(n)
        s[1:-1] = (v[2:] - v[:-2]) * (0.5 * inv_dx)
    s[0] = dp[0]
    s[-1] = dm[-1]
    return s * drive + q_cost * x * x + r_cost * u * u


# ---------------------------------------------------------------------------
# fixed-point sweeps
# ---------------------------------------------------------------------------

def _sweep_stats(vn, v):
    if not np.isfinite(vn).all():
        return np.nan, np.nan, False
    return float(np.max(np.abs(vn - v))), float(np.max(np.abs(vn))), True


def vi_run(v, x, dx, drift, gain, q_cost, r_cost, r_coef, inv_gs,
           u_min, u_max, mode, theta, div_threshold, max_steps,
           res_out, vmax_out):
    """Jacobi value-iteration sweeps, in place on ``v``.

    Returns ``(n_done, status)``; per-sweep residual and sup-norm are written
    into ``res_out``/``vmax_out``.
    """
    for k in range(max_steps):
        _, h = minimize_hamiltonian_all(
            v, x, dx, drift, gain, q_cost, r_cost, u_min, u_max, mode
        )
        vn = r_coef * v + h * inv_gs
        res, vmax, finite = _sweep_stats(vn, v)
        res_out[k] = res
        vmax_out[k] = vmax
        v[:] = vn
        if not finite or vmax > div_threshold:
            return k + 1, 2
        if res < theta:
            return k + 1, 1
    return max_steps, 0


def pe_run(v, u, x, dx, drift, gain, q_cost, r_cost, r_coef, inv_gs,
           mode, theta, div_threshold, max_steps, res_out, vmax_out):
    """Policy-evaluation sweeps for a fixed control field."""
    for k in range(max_steps):
        h = _fixed_policy_hamiltonian(v, u, x, dx, drift, gain, q_cost, r_cost, mode)
        vn = r_coef * v + h * inv_gs
        res, vmax, finite = _sweep_stats(vn, v)
        res_out[k] = res
        vmax_out[k] = vmax
        v[:] = vn
        if not finite or vmax > div_threshold:
            return k + 1, 2
        if res < theta:
            return k + 1, 1
    return max_steps, 0


# ---------------------------------------------------------------------------
# tabular Q-learning
# ---------------------------------------------------------------------------

def greedy_index(row: np.ndarray, u_abs: np.ndarray) -> int:
    """Argmin with ties broken toward smaller ``|u|``, then smaller index."""
    m = row.min()
    cand = np.flatnonzero(row == m)
    if cand.shape[0] == 1:
        return int(cand[0])
    return int(cand[np.lexsort((cand, u_abs[cand]))[0]])


def q_episode(q, visits, next_idx, cost, u_abs, gamma_d, lr_mode, lr_value,
              epsilon, n_steps, div_threshold, rng_state):
    """One trajectory episode of Q-learning updates, in place on ``q``.

    Returns ``(rng_state, steps_done, tripped)``.  The start node and every
    exploration decision are drawn from the splitmix64 stream in a fixed
    order: start, then per step (explore?, [action]).
    """
    n_states, n_actions = q.shape
    rng_state, s = rng_randint(rng_state, n_states)
    for t in range(n_steps):
        rng_state, r = rng_u01(rng_state)
        if r < epsilon:
            rng_state, a = rng_randint(rng_state, n_actions)
        else:
            a = greedy_index(q[s], u_abs)
        if lr_mode == 0:
            lr = lr_value
        else:
            lr = 1.0 / (1.0 + visits[s, a])
        visits[s, a] += 1
        sp = next_idx[s, a]
        target = cost[s, a] + gamma_d * q[sp].min()
        qn = (1.0 - lr) * q[s, a] + lr * target
        q[s, a] = qn
        if not np.isfinite(qn) or abs(qn) > div_threshold:
            return rng_state, t + 1, 1
        s = sp
    return rng_state, n_steps, 0


# ---------------------------------------------------------------------------
# linear function approximation
# ---------------------------------------------------------------------------

def _greedy_control(w, x, u_min, u_max):
    if w[5] > 0.0:
        g = -(w[2] + w[4] * x) / (2.0 * w[5])
        if g < u_min:
            g = u_min
        if g > u_max:
            g = u_max
        return g
    q_lo = w[0] + w[1] * x + w[2] * u_min + w[3] * x * x + w[4] * x * u_min + w[5] * u_min * u_min
    q_hi = w[0] + w[1] * x + w[2] * u_max + w[3] * x * x + w[4] * x * u_max + w[5] * u_max * u_max
    return u_min if q_lo <= q_hi else u_max


def fa_run(w, n_steps, dt, drift, gain, q_cost, r_cost, gamma_d,
           x_min, x_max, u_min, u_max, lr_mode, lr_param,
           div_threshold, rng_state):
    """Semi-gradient updates on the quadratic-feature weights, in place.

    Samples (x, u) uniformly from the domain box each step and bootstraps the
    target at the raw (un-snapped) Euler successor.  ``lr_mode`` 1 scales the
    step by the per-sample bound ``1 / (X^T X)``.

    Returns ``(rng_state, steps_done, tripped)``.
    """
    w0, w1, w2, w3, w4, w5 = (float(c) for c in w)
    xr = x_max - x_min
    ur = u_max - u_min
    for t in range(n_steps):
        rng_state, rx = rng_u01(rng_state)
        x = x_min + rx * xr
        rng_state, ru = rng_u01(rng_state)
        u = u_min + ru * ur
        xx = x * x
        uu = u * u
        xu = x * u
        xtx = 1.0 + xx + uu + xx * xx + xx * uu + uu * uu
        qsa = w0 + w1 * x + w2 * u + w3 * xx + w4 * xu + w5 * uu
        xn = x + dt * (drift * x + gain * u)
        wv = (w0, w1, w2, w3, w4, w5)
        un = _greedy_control(wv, xn, u_min, u_max)
        qn = w0 + w1 * xn + w2 * un + w3 * xn * xn + w4 * xn * un + w5 * un * un
        target = dt * (q_cost * xx + r_cost * uu) + gamma_d * qn
        lr = lr_param / xtx if lr_mode == 1 else lr_param
        dc = lr * (target - qsa)
        w0 += dc
        w1 += dc * x
        w2 += dc * u
        w3 += dc * xx
        w4 += dc * xu
        w5 += dc * uu
        bad = False
        biggest = 0.0
        for c in (w0, w1, w2, w3, w4, w5):
            if c != c:
                bad = True
                break
            a = c if c >= 0.0 else -c
            if a > biggest:
                biggest = a
        if bad or biggest > div_threshold:
            w[0], w[1], w[2], w[3], w[4], w[5] = w0, w1, w2, w3, w4, w5
            return rng_state, t + 1, 1
    w[0], w[1], w[2], w[3], w[4], w[5] = w0, w1, w2, w3, w4, w5
    return rng_state, n_steps, 0
