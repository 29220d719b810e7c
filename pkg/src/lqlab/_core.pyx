# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: hot loops of the fixed-point sweeps and the learners.

Mirror of ``lqlab._pure`` with identical floating-point operation order;
built with -ffp-contract=off so results stay bit-identical to the fallback.
Keep the two files in lockstep.
"""

import numpy as np

from libc.math cimport fabs, INFINITY, NAN, isfinite

cdef double TIE_TOL = 1e-12


cdef inline unsigned long long _rng_next(unsigned long long *state) nogil:
    cdef unsigned long long z
    state[0] = state[0] + <unsigned long long>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <unsigned long long>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <unsigned long long>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _rng_u01(unsigned long long *state) nogil:
    return <double>(_rng_next(state) >> 11) * (1.0 / 9007199254740992.0)


cdef inline long _rng_randint(unsigned long long *state, long n) nogil:
    cdef long i = <long>(_rng_u01(state) * n)
    if i >= n:
        i = n - 1
    return i


# ---------------------------------------------------------------------------
# Hamiltonian minimization
# ---------------------------------------------------------------------------

cdef inline double _node_min_h(double s1, double s2, double x, double ax,
                               double gain, double q_cost, double r_cost,
                               double u_min, double u_max) nogil:
    """Minimum of the split-region Hamiltonian at one node."""
    cdef double thr = -ax / gain
    cdef double lo1, hi2, u1, u2, y1, y2, d
    cdef bint pick1

    lo1 = thr if thr > u_min else u_min
    u1 = -(s1 * gain) / (2.0 * r_cost)
    if u1 < lo1:
        u1 = lo1
    if u1 > u_max:
        u1 = u_max
    y1 = s1 * (ax + gain * u1) + q_cost * x * x + r_cost * u1 * u1
    if lo1 > u_max:
        y1 = INFINITY

    hi2 = thr if thr < u_max else u_max
    u2 = -(s2 * gain) / (2.0 * r_cost)
    if u2 < u_min:
        u2 = u_min
    if u2 > hi2:
        u2 = hi2
    y2 = s2 * (ax + gain * u2) + q_cost * x * x + r_cost * u2 * u2
    if u_min > hi2:
        y2 = INFINITY

    d = fabs(y1 - y2)
    if d <= TIE_TOL:
        pick1 = fabs(u1) <= fabs(u2)
    else:
        pick1 = y1 < y2
    return y1 if pick1 else y2


cdef inline void _slopes_at(double[::1] v, Py_ssize_t i, Py_ssize_t n,
                            double inv_dx, double *dpi, double *dmi) nogil:
    if i < n - 1:
        dpi[0] = (v[i + 1] - v[i]) * inv_dx
    else:
        dpi[0] = (v[i] - v[i - 1]) * inv_dx
    if i > 0:
        dmi[0] = (v[i] - v[i - 1]) * inv_dx
    else:
        dmi[0] = (v[1] - v[0]) * inv_dx


# ---------------------------------------------------------------------------
# fixed-point sweeps
# ---------------------------------------------------------------------------

def vi_run(double[::1] v, double[::1] x, double dx, double drift, double gain,
           double q_cost, double r_cost, double r_coef, double inv_gs,
           double u_min, double u_max, int mode,
           double theta, double div_threshold, long max_steps,
           double[::1] res_out, double[::1] vmax_out):
    cdef Py_ssize_t n = v.shape[0]
    cdef double[::1] vn = np.empty(n)
    cdef Py_ssize_t i
    cdef long k
    cdef double inv_dx = 1.0 / dx
    cdef double half_inv_dx = 0.5 * inv_dx
    cdef double dpi, dmi, s1, s2, ax, h, res, vmax, d
    cdef bint finite

    for k in range(max_steps):
        for i in range(n):
            _slopes_at(v, i, n, inv_dx, &dpi, &dmi)
            if mode == 0:
                s1 = dpi
                s2 = dmi
            elif mode == 1:
                s1 = dmi
                s2 = dpi
            else:
                if i == 0:
                    s1 = dpi
                elif i == n - 1:
                    s1 = dmi
                else:
                    s1 = (v[i + 1] - v[i - 1]) * half_inv_dx
                s2 = s1
            ax = drift * x[i]
            h = _node_min_h(s1, s2, x[i], ax, gain, q_cost, r_cost, u_min, u_max)
            vn[i] = r_coef * v[i] + h * inv_gs

        finite = True
        for i in range(n):
            if not isfinite(vn[i]):
                finite = False
                break
        if finite:
            res = 0.0
            vmax = 0.0
            for i in range(n):
                d = fabs(vn[i] - v[i])
                if d > res:
                    res = d
                d = fabs(vn[i])
                if d > vmax:
                    vmax = d
        else:
            res = NAN
            vmax = NAN
        res_out[k] = res
        vmax_out[k] = vmax
        v[:] = vn
        if not finite or vmax > div_threshold:
            return k + 1, 2
        if res < theta:
            return k + 1, 1
    return max_steps, 0


def pe_run(double[::1] v, double[::1] u, double[::1] x, double dx, double drift,
           double gain, double q_cost, double r_cost, double r_coef,
           double inv_gs, int mode, double theta, double div_threshold,
           long max_steps, double[::1] res_out, double[::1] vmax_out):
    cdef Py_ssize_t n = v.shape[0]
    cdef double[::1] vn = np.empty(n)
    cdef Py_ssize_t i
    cdef long k
    cdef double inv_dx = 1.0 / dx
    cdef double half_inv_dx = 0.5 * inv_dx
    cdef double dpi, dmi, s, drive, h, res, vmax, d
    cdef bint finite

    for k in range(max_steps):
        for i in range(n):
            _slopes_at(v, i, n, inv_dx, &dpi, &dmi)
            drive = drift * x[i] + gain * u[i]
            if i == 0:
                s = dpi
            elif i == n - 1:
                s = dmi
            elif mode == 0:
                s = dpi if drive >= 0.0 else dmi
            elif mode == 1:
                s = dmi if drive >= 0.0 else dpi
            else:
                s = (v[i + 1] - v[i - 1]) * half_inv_dx
            h = s * drive + q_cost * x[i] * x[i] + r_cost * u[i] * u[i]
            vn[i] = r_coef * v[i] + h * inv_gs

        finite = True
        for i in range(n):
            if not isfinite(vn[i]):
                finite = False
                break
        if finite:
            res = 0.0
            vmax = 0.0
            for i in range(n):
                d = fabs(vn[i] - v[i])
                if d > res:
                    res = d
                d = fabs(vn[i])
                if d > vmax:
                    vmax = d
        else:
            res = NAN
            vmax = NAN
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

cdef inline long _greedy_index(double[:, ::1] q, Py_ssize_t s,
                               double[::1] u_abs, Py_ssize_t n_actions) nogil:
    cdef Py_ssize_t j, best = 0
    for j in range(1, n_actions):
        if q[s, j] < q[s, best]:
            best = j
        elif q[s, j] == q[s, best] and u_abs[j] < u_abs[best]:
            best = j
    return best


def q_episode(double[:, ::1] q, long long[:, ::1] visits,
              long long[:, ::1] next_idx, double[:, ::1] cost,
              double[::1] u_abs, double gamma_d, int lr_mode, double lr_value,
              double epsilon, long n_steps, double div_threshold,
              unsigned long long rng_state):
    cdef Py_ssize_t n_states = q.shape[0]
    cdef Py_ssize_t n_actions = q.shape[1]
    cdef Py_ssize_t s, a, sp, j
    cdef long t
    cdef double lr, m, target, qn

    s = _rng_randint(&rng_state, <long>n_states)
    for t in range(n_steps):
        if _rng_u01(&rng_state) < epsilon:
            a = _rng_randint(&rng_state, <long>n_actions)
        else:
            a = _greedy_index(q, s, u_abs, n_actions)
        if lr_mode == 0:
            lr = lr_value
        else:
            lr = 1.0 / (1.0 + visits[s, a])
        visits[s, a] += 1
        sp = next_idx[s, a]
        m = q[sp, 0]
        for j in range(1, n_actions):
            if q[sp, j] < m:
                m = q[sp, j]
        target = cost[s, a] + gamma_d * m
        qn = (1.0 - lr) * q[s, a] + lr * target
        q[s, a] = qn
        if not isfinite(qn) or fabs(qn) > div_threshold:
            return rng_state, t + 1, 1
        s = sp
    return rng_state, n_steps, 0


# ---------------------------------------------------------------------------
# linear function approximation
# ---------------------------------------------------------------------------

cdef inline double _greedy_control(double w0, double w1, double w2, double w3,
                                   double w4, double w5, double x,
                                   double u_min, double u_max) nogil:
    cdef double g, q_lo, q_hi
    if w5 > 0.0:
        g = -(w2 + w4 * x) / (2.0 * w5)
        if g < u_min:
            g = u_min
        if g > u_max:
            g = u_max
        return g
    q_lo = w0 + w1 * x + w2 * u_min + w3 * x * x + w4 * x * u_min + w5 * u_min * u_min
    q_hi = w0 + w1 * x + w2 * u_max + w3 * x * x + w4 * x * u_max + w5 * u_max * u_max
    return u_min if q_lo <= q_hi else u_max


def fa_run(double[::1] w, long n_steps, double dt, double drift, double gain,
           double q_cost, double r_cost, double gamma_d,
           double x_min, double x_max, double u_min, double u_max,
           int lr_mode, double lr_param, double div_threshold,
           unsigned long long rng_state):
    cdef double w0 = w[0], w1 = w[1], w2 = w[2], w3 = w[3], w4 = w[4], w5 = w[5]
    cdef double xr = x_max - x_min
    cdef double ur = u_max - u_min
    cdef long t
    cdef double x, u, xx, uu, xu, xtx, qsa, xn, un, qn, target, lr, dc
    cdef double a, biggest
    cdef bint bad

    for t in range(n_steps):
        x = x_min + _rng_u01(&rng_state) * xr
        u = u_min + _rng_u01(&rng_state) * ur
        xx = x * x
        uu = u * u
        xu = x * u
        xtx = 1.0 + xx + uu + xx * xx + xx * uu + uu * uu
        qsa = w0 + w1 * x + w2 * u + w3 * xx + w4 * xu + w5 * uu
        xn = x + dt * (drift * x + gain * u)
        un = _greedy_control(w0, w1, w2, w3, w4, w5, xn, u_min, u_max)
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
        if w0 != w0 or w1 != w1 or w2 != w2 or w3 != w3 or w4 != w4 or w5 != w5:
            bad = True
        else:
            a = fabs(w0)
            if a > biggest: biggest = a
            a = fabs(w1)
            if a > biggest: biggest = a
            a = fabs(w2)
            if a > biggest: biggest = a
            a = fabs(w3)
            if a > biggest: biggest = a
            a = fabs(w4)
            if a > biggest: biggest = a
            a = fabs(w5)
            if a > biggest: biggest = a
        if bad or biggest > div_threshold:
            w[0] = w0; w[1] = w1; w[2] = w2; w[3] = w3; w[4] = w4; w[5] = w5
            return rng_state, t + 1, 1
    w[0] = w0; w[1] = w1; w[2] = w2; w[3] = w3; w[4] = w4; w[5] = w5
    return rng_state, n_steps, 0
