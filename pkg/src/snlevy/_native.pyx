#cython: boundscheck=False, wraparound=False, cdivision=True, nonecheck=False, language_level=3
"""Compiled hot kernels: the Volterra table march and the Monte Carlo stepper.

Semantics match snlevy._kernels_py; see that module for the contract.  The
Monte Carlo stepper draws one Philox stream per path, keyed by
(seed, path index), with a counter-offset companion stream for jump times and
marks, so ensembles are reproducible and embarrassingly parallel.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport INFINITY, exp as cexp, fabs, sqrt as csqrt
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_exponential,
    random_standard_normal,
)

from numpy.random import Philox

cnp.import_array()

BACKEND_NAME = "native"

DEF EXP_FLOOR = -40.0  # e^-40 ~ 4e-18: below any decision threshold


cdef inline double _bilerp(const double[:, ::1] G, Py_ssize_t n, double umin,
                           double dinv, double u0, double u1) nogil:
    cdef double fi = (u0 - umin) * dinv
    cdef double fj = (u1 - umin) * dinv
    if fi < 0.0:
        fi = 0.0
    elif fi > n - 2:
        fi = n - 2
    if fj < 0.0:
        fj = 0.0
    elif fj > n - 2:
        fj = n - 2
    cdef Py_ssize_t i0 = <Py_ssize_t> fi
    cdef Py_ssize_t j0 = <Py_ssize_t> fj
    cdef double wi = fi - i0
    cdef double wj = fj - j0
    return (G[i0, j0] * (1.0 - wi) * (1.0 - wj)
            + G[i0 + 1, j0] * wi * (1.0 - wj)
            + G[i0, j0 + 1] * (1.0 - wi) * wj
            + G[i0 + 1, j0 + 1] * wi * wj)


def volterra_solve(kernel_mat, g_node, half0, columns, bint seed_one):
    K_arr = np.ascontiguousarray(kernel_mat, dtype=np.float64)
    g_arr = np.ascontiguousarray(g_node, dtype=np.float64)
    h_arr = np.ascontiguousarray(half0, dtype=np.float64)
    c_arr = np.ascontiguousarray(columns, dtype=np.int64)
    cdef double[:, ::1] K = K_arr
    cdef double[::1] g = g_arr
    cdef double[::1] h0 = h_arr
    cdef cnp.int64_t[::1] cols = c_arr
    cdef Py_ssize_t n1 = K.shape[0]
    cdef Py_ssize_t ncols = cols.shape[0]
    H_arr = np.zeros((ncols, n1))
    U_arr = np.zeros(n1)
    cdef double[:, ::1] H = H_arr
    cdef double[::1] U = U_arr
    cdef Py_ssize_t t, i, k, j
    cdef double acc
    cdef double seed = 1.0 if seed_one else 0.0
    with nogil:
        for t in range(ncols):
            j = cols[t]
            H[t, j] = seed
            U[j] = h0[j] * seed
            for i in range(j + 1, n1):
                acc = 1.0 if seed_one else K[i, j]
                for k in range(j, i):
                    acc += K[i, k] * U[k]
                H[t, i] = acc
                U[i] = g[i] * acc
    return np.ascontiguousarray(H_arr.T)


cdef int _run_path(bitgen_t *ms, bitgen_t *js, double sigma, double gamma,
                   double jump_rate, double rho, double x0, double b, double c,
                   double q, double dt, double t_max, double eps_lt,
                   const double[::1] levels, const double[::1] obreaks,
                   const double[::1] oheights, bint has_omega,
                   Py_ssize_t snap_level, double snap_t,
                   const double[:, ::1] wt_table, double wt_umin,
                   double wt_dinv,
                   double *out_time, double *out_pos, double[::1] lt,
                   cnp.uint8_t[::1] hit, double *out_occ, int *snap_ok,
                   double *snap_time, double[::1] snap_lt,
                   double *snap_occ) nogil:
    """Steps one path; returns the exit kind (0 up, 1 down, 2 killed, 3 cap)."""
    cdef Py_ssize_t nlev = levels.shape[0]
    cdef Py_ssize_t nbrk = obreaks.shape[0]
    cdef double sig2 = sigma * sigma
    cdef double inv2eps = 1.0 / (2.0 * eps_lt)
    cdef double t = 0.0, xx = x0
    cdef double tkill = INFINITY, njump = INFINITY
    cdef double se, delta, z, u, xe, sd, d0, d1, arg, ph, uh, pup, pdn, mark
    cdef double u0, u1
    cdef bint up, diff_down, killed, jump_down, capped, full
    cdef bint snapping = snap_level >= 0
    cdef Py_ssize_t wt_n = wt_table.shape[0]
    cdef bint use_table = wt_n > 0
    cdef double inv_s = 1.0 / (sigma * csqrt(dt))
    cdef double lt_step = dt * inv2eps
    cdef double wt_span = 0.0
    if use_table:
        wt_span = (wt_n - 1) / wt_dinv
    cdef Py_ssize_t j, k

    if q > 0.0:
        tkill = random_standard_exponential(ms) / q
    if jump_rate > 0.0:
        njump = random_standard_exponential(js) / jump_rate

    while True:
        se = t + dt
        if tkill < se:
            se = tkill
        if njump < se:
            se = njump
        if t_max < se:
            se = t_max
        delta = se - t
        if delta < 1e-300:
            delta = 1e-300
        z = random_standard_normal(ms)
        xe = xx + gamma * delta + sigma * csqrt(delta) * z

        full = use_table and se == t + dt
        for j in range(nlev):
            if full:
                u0 = (xx - levels[j]) * inv_s
                u1 = (xe - levels[j]) * inv_s
                if (u0 > wt_umin and u0 - wt_umin < wt_span) or (
                        u1 > wt_umin and u1 - wt_umin < wt_span):
                    lt[j] += lt_step * _bilerp(wt_table, wt_n, wt_umin,
                                               wt_dinv, u0, u1)
            elif fabs(xx - levels[j]) <= eps_lt:
                lt[j] += delta * inv2eps
        if has_omega:
            k = 0
            while k < nbrk and xx >= obreaks[k]:
                k += 1
            out_occ[0] += delta * oheights[k]
        if snapping and lt[snap_level] >= snap_t:
            snap_ok[0] = 1
            snap_time[0] = se
            for j in range(nlev):
                snap_lt[j] = lt[j]
            snap_occ[0] = out_occ[0]
            snapping = False

        # uniforms are drawn lazily: each path owns its stream, so the
        # consumption pattern may depend on the path without biasing it
        sd = sig2 * delta
        for j in range(nlev):
            if hit[j]:
                continue
            d0 = xx - levels[j]
            d1 = xe - levels[j]
            if d0 * d1 <= 0.0:
                hit[j] = 1
                continue
            arg = -2.0 * fabs(d0 * d1) / sd
            if arg > EXP_FLOOR:
                ph = cexp(arg)
                uh = ms.next_double(ms.state)
                if uh < ph:
                    hit[j] = 1

        up = xe >= b
        diff_down = xe <= c
        if not up and not diff_down:
            arg = -2.0 * (b - xx) * (b - xe) / sd
            pup = cexp(arg) if arg > EXP_FLOOR else 0.0
            arg = -2.0 * (xx - c) * (xe - c) / sd
            pdn = cexp(arg) if arg > EXP_FLOOR else 0.0
            if pup + pdn > 0.0:
                u = ms.next_double(ms.state)
                if u < pup:
                    up = True
                elif u < pup + pdn:
                    diff_down = True

        killed = (not up) and (not diff_down) and se == tkill
        jump_down = False
        if (not up) and (not diff_down) and (not killed) and se == njump:
            mark = random_standard_exponential(js) / rho
            xe = xe - mark
            njump = se + random_standard_exponential(js) / jump_rate
            if xe <= c:
                jump_down = True
        capped = ((not up) and (not diff_down) and (not killed)
                  and (not jump_down) and se >= t_max)

        if up:
            out_time[0] = se
            out_pos[0] = b
            return 0
        if diff_down:
            out_time[0] = se
            out_pos[0] = c
            return 1
        if jump_down:
            out_time[0] = se
            out_pos[0] = xe
            return 1
        if killed:
            out_time[0] = se
            out_pos[0] = xe
            return 2
        if capped:
            out_time[0] = se
            out_pos[0] = xe
            return 3
        xx = xe
        t = se


def simulate_paths(double sigma, double gamma, double jump_rate,
                   double jump_mean, double x0, double b, double c, double q,
                   double dt, double t_max, double eps_lt, levels_in,
                   obreaks_in, oheights_in, seed_in, Py_ssize_t n_paths,
                   Py_ssize_t snap_level=-1, double snap_t=0.0,
                   double wt_umin=0.0, double wt_dinv=0.0, wt_table=None):
    levels_arr = np.ascontiguousarray(levels_in, dtype=np.float64)
    obreaks_arr = np.ascontiguousarray(obreaks_in, dtype=np.float64)
    oheights_arr = np.ascontiguousarray(oheights_in, dtype=np.float64)
    if wt_table is None:
        wt_table = np.empty((0, 0))
    wt_arr = np.ascontiguousarray(wt_table, dtype=np.float64)
    cdef const double[::1] levels = levels_arr
    cdef const double[::1] obreaks = obreaks_arr
    cdef const double[::1] oheights = oheights_arr
    cdef const double[:, ::1] wt = wt_arr
    cdef Py_ssize_t nlev = levels.shape[0]
    cdef bint has_omega = oheights_arr.size > 0 and np.any(oheights_arr != 0.0)
    cdef double rho = 1.0 / jump_mean if jump_rate > 0.0 else 0.0

    out_kind_arr = np.zeros(n_paths, dtype=np.uint8)
    out_time_arr = np.zeros(n_paths)
    out_pos_arr = np.zeros(n_paths)
    out_lt_arr = np.zeros((n_paths, nlev))
    out_hit_arr = np.zeros((n_paths, nlev), dtype=np.uint8)
    out_occ_arr = np.zeros(n_paths)
    out_sok_arr = np.zeros(n_paths, dtype=np.uint8)
    out_stime_arr = np.zeros(n_paths)
    out_slt_arr = np.zeros((n_paths, nlev))
    out_socc_arr = np.zeros(n_paths)
    cdef cnp.uint8_t[::1] out_kind = out_kind_arr
    cdef double[::1] out_time = out_time_arr
    cdef double[::1] out_pos = out_pos_arr
    cdef double[:, :] out_lt = out_lt_arr
    cdef cnp.uint8_t[:, :] out_hit = out_hit_arr
    cdef double[::1] out_occ = out_occ_arr
    cdef cnp.uint8_t[::1] out_sok = out_sok_arr
    cdef double[::1] out_stime = out_stime_arr
    cdef double[:, :] out_slt = out_slt_arr
    cdef double[::1] out_socc = out_socc_arr

    key = np.zeros(2, dtype=np.uint64)
    key[0] = np.uint64(seed_in)
    jcounter = np.zeros(4, dtype=np.uint64)
    jcounter[3] = np.uint64(1) << np.uint64(62)

    cdef bitgen_t *ms
    cdef bitgen_t *js = NULL
    cdef Py_ssize_t p
    cdef int kind
    cdef bint has_jumps = jump_rate > 0.0
    lt_buf_arr = np.zeros(nlev)
    hit_buf_arr = np.zeros(nlev, dtype=np.uint8)
    slt_buf_arr = np.zeros(nlev)
    cdef double[::1] lt_buf = lt_buf_arr
    cdef cnp.uint8_t[::1] hit_buf = hit_buf_arr
    cdef double[::1] slt_buf = slt_buf_arr
    cdef double t_out, pos_out, occ_out, stime_out, socc_out
    cdef int sok_out
    cdef Py_ssize_t j

    if snap_level >= nlev:
        raise ValueError("snap_level out of range")

    for p in range(n_paths):
        key[1] = np.uint64(p)
        mbg = Philox(key=key)
        ms = <bitgen_t *> PyCapsule_GetPointer(mbg.capsule, "BitGenerator")
        if has_jumps:
            jbg = Philox(key=key, counter=jcounter)
            js = <bitgen_t *> PyCapsule_GetPointer(jbg.capsule, "BitGenerator")
        for j in range(nlev):
            lt_buf[j] = 0.0
            hit_buf[j] = 0
            slt_buf[j] = 0.0
        occ_out = 0.0
        stime_out = 0.0
        socc_out = 0.0
        sok_out = 0
        with nogil:
            kind = _run_path(ms, js, sigma, gamma, jump_rate, rho, x0, b, c,
                             q, dt, t_max, eps_lt, levels, obreaks, oheights,
                             has_omega, snap_level, snap_t, wt, wt_umin,
                             wt_dinv, &t_out, &pos_out, lt_buf, hit_buf,
                             &occ_out, &sok_out, &stime_out, slt_buf,
                             &socc_out)
        out_kind[p] = <cnp.uint8_t> kind
        out_time[p] = t_out
        out_pos[p] = pos_out
        for j in range(nlev):
            out_lt[p, j] = lt_buf[j]
            out_hit[p, j] = hit_buf[j]
            out_slt[p, j] = slt_buf[j]
        out_occ[p] = occ_out
        out_sok[p] = <cnp.uint8_t> sok_out
        out_stime[p] = stime_out
        out_socc[p] = socc_out

    return (out_kind_arr, out_time_arr, out_pos_arr, out_lt_arr, out_hit_arr,
            out_occ_arr, out_sok_arr, out_stime_arr, out_slt_arr,
            out_socc_arr)
