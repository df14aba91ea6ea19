"""Pure-numpy implementations of the two hot kernels.

These mirror the compiled kernels in ``snlevy._native`` and are selected by
``snlevy._backend`` when the extension is unavailable (or forced via the
SNLEVY_BACKEND environment variable).

volterra_solve marches the second-kind Volterra systems column by column but
vectorizes the inner product across all requested columns with one gemv per
row, so the full-table solve stays BLAS-bound.

simulate_paths steps all paths synchronously, compacting the active set as
paths exit.  Randomness comes from a single Philox stream keyed by
(seed, 2^63); the compiled backend instead keys one stream per path, so the
two backends are statistically equivalent but not draw-for-draw identical.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.random import Generator, Philox

BACKEND_NAME = "python"

_UP, _DOWN, _KILLED, _CAPPED = 0, 1, 2, 3


def volterra_solve(kernel_mat, g_node, half0, columns, seed_one):
    """March H(i, j) = base(i, j) + sum_k nu_k K(i, k) H(k, j) for each column.

    kernel_mat: (N+1, N+1) lower-triangular K[i, k] = W(x_i - x_k).
    g_node: interior nodal quadrature weights (cell-averaged omega folded in).
    half0: weight of a node when it is the starting endpoint of its column.
    columns: indices j to solve. seed_one: True for the Z system (seed and
    base 1), False for the W system (seed 0, base K[i, j]).
    Returns H of shape (N+1, len(columns)); rows above the diagonal are 0.
    """
    K = np.ascontiguousarray(kernel_mat, dtype=np.float64)
    g = np.asarray(g_node, dtype=np.float64)
    h0 = np.asarray(half0, dtype=np.float64)
    cols = np.asarray(columns, dtype=np.int64)
    n1 = K.shape[0]
    ncols = cols.shape[0]
    H = np.zeros((n1, ncols))
    U = np.zeros((n1, ncols))
    seed = 1.0 if seed_one else 0.0
    ar = np.arange(ncols)
    H[cols, ar] = seed
    U[cols, ar] = h0[cols] * seed
    for i in range(1, n1):
        active = cols < i
        if not active.any():
            continue
        s = K[i, :i] @ U[:i, :]
        if seed_one:
            vals = 1.0 + s
        else:
            vals = K[i, cols] + s
        H[i, active] = vals[active]
        U[i, active] = g[i] * vals[active]
    return H


def simulate_paths(sigma, gamma, jump_rate, jump_mean, x0, b, c, q, dt, t_max,
                   eps_lt, levels, obreaks, oheights, seed, n_paths,
                   snap_level=-1, snap_t=0.0, wt_umin=0.0, wt_dinv=0.0,
                   wt_table=None):
    """Euler scheme with exact drift, Brownian-bridge barrier corrections,
    exact compound-Poisson jump times and windowed local-time accumulation.

    The window occupancy of each full step is the bridge expectation from
    wt_table (see snlevy._bridge); partial steps (jump/kill/horizon
    boundaries) and runs without a table fall back to the left-endpoint
    indicator sample.

    When snap_level >= 0, the path state (time, all local times, weighted
    occupation) is recorded the first time the local-time estimate at
    levels[snap_level] exceeds snap_t, i.e. at the inverse local time.

    Returns (exit_kind u8, exit_time, exit_pos, local_time (n, nlev),
    hit (n, nlev) u8, weighted_occ, snap_ok u8, snap_time, snap_lt, snap_occ).
    """
    levels = np.asarray(levels, dtype=np.float64)
    obreaks = np.asarray(obreaks, dtype=np.float64)
    oheights = np.asarray(oheights, dtype=np.float64)
    nlev = levels.shape[0]
    use_table = wt_table is not None and getattr(wt_table, "size", 0) > 0
    if use_table:
        wt_n = wt_table.shape[0]
        inv_s = 1.0 / (sigma * math.sqrt(dt))
        lt_step = dt / (2.0 * eps_lt)
    has_omega = oheights.size > 0 and np.any(oheights != 0.0)
    has_jumps = jump_rate > 0.0
    rho = 1.0 / jump_mean if has_jumps else 0.0
    sig2 = sigma * sigma
    snapping = snap_level >= 0

    out_kind = np.zeros(n_paths, dtype=np.uint8)
    out_time = np.zeros(n_paths)
    out_pos = np.zeros(n_paths)
    out_lt = np.zeros((n_paths, nlev))
    out_hit = np.zeros((n_paths, nlev), dtype=np.uint8)
    out_occ = np.zeros(n_paths)
    out_sok = np.zeros(n_paths, dtype=np.uint8)
    out_stime = np.zeros(n_paths)
    out_slt = np.zeros((n_paths, nlev))
    out_socc = np.zeros(n_paths)

    rng = Generator(Philox(key=np.array([seed, 1 << 63], dtype=np.uint64)))

    idx = np.arange(n_paths)
    x = np.full(n_paths, float(x0))
    t = np.zeros(n_paths)
    lt = np.zeros((n_paths, nlev))
    hit = np.zeros((n_paths, nlev), dtype=bool)
    occ = np.zeros(n_paths)
    if q > 0.0:
        tkill = rng.standard_exponential(n_paths) / q
    else:
        tkill = np.full(n_paths, np.inf)
    if has_jumps:
        njump = rng.standard_exponential(n_paths) / jump_rate
    else:
        njump = np.full(n_paths, np.inf)
    snapped = np.zeros(n_paths, dtype=bool)

    inv2eps = 1.0 / (2.0 * eps_lt)

    while idx.size:
        na = idx.size
        se = np.minimum(np.minimum(t + dt, tkill), np.minimum(njump, t_max))
        delta = np.maximum(se - t, 1e-300)
        z = rng.standard_normal(na)
        u = rng.random(na)
        xe = x + gamma * delta + sigma * np.sqrt(delta) * z

        # window occupancy over [t, se): bridge expectation on full steps,
        # left-endpoint sample on the (rare) partial steps
        full = (se == t + dt) if use_table else np.zeros(na, dtype=bool)
        for j in range(nlev):
            if use_table and full.any():
                u0 = (x[full] - levels[j]) * inv_s
                u1 = (xe[full] - levels[j]) * inv_s
                fi = np.clip((u0 - wt_umin) * wt_dinv, 0.0, wt_n - 2.0)
                fj = np.clip((u1 - wt_umin) * wt_dinv, 0.0, wt_n - 2.0)
                i0 = fi.astype(np.int64)
                j0 = fj.astype(np.int64)
                wi = fi - i0
                wj = fj - j0
                g = (wt_table[i0, j0] * (1 - wi) * (1 - wj)
                     + wt_table[i0 + 1, j0] * wi * (1 - wj)
                     + wt_table[i0, j0 + 1] * (1 - wi) * wj
                     + wt_table[i0 + 1, j0 + 1] * wi * wj)
                lt[full, j] += lt_step * g
            part = ~full
            inwin = part & (np.abs(x - levels[j]) <= eps_lt)
            if inwin.any():
                lt[inwin, j] += delta[inwin] * inv2eps
        if has_omega:
            cell = np.searchsorted(obreaks, x, side="right")
            occ += delta * oheights[cell]
        if snapping:
            cross = ~snapped & (lt[:, snap_level] >= snap_t)
            if cross.any():
                sl = idx[cross]
                out_sok[sl] = 1
                out_stime[sl] = se[cross]
                out_slt[sl] = lt[cross]
                out_socc[sl] = occ[cross]
                snapped |= cross

        # level hits: sure crossings plus bridge crossing probability
        sd = sig2 * delta
        for j in range(nlev):
            d0 = x - levels[j]
            d1 = xe - levels[j]
            ph = np.where(d0 * d1 <= 0.0, 1.0,
                          np.exp(-2.0 * np.abs(d0 * d1) / sd))
            uh = rng.random(na)
            hit[:, j] |= uh < ph

        # barrier classification: diffusion endpoint, then bridge, then jump
        up = xe >= b
        diff_down = xe <= c
        interior = ~(up | diff_down)
        pup = np.zeros(na)
        pdn = np.zeros(na)
        if interior.any():
            pup[interior] = np.exp(
                -2.0 * (b - x[interior]) * (b - xe[interior]) / sd[interior])
            pdn[interior] = np.exp(
                -2.0 * (x[interior] - c) * (xe[interior] - c) / sd[interior])
        up |= interior & (u < pup)
        diff_down |= interior & ~up & (u < pup + pdn)

        killed = ~(up | diff_down) & (se == tkill)
        jumping = ~(up | diff_down | killed) & (se == njump)
        jump_down = np.zeros(na, dtype=bool)
        if jumping.any():
            nj = int(jumping.sum())
            marks = rng.standard_exponential(nj) / rho
            xj = xe[jumping] - marks
            xe[jumping] = xj
            njump[jumping] = se[jumping] + rng.standard_exponential(nj) / jump_rate
            jump_down[jumping] = xj <= c
        down = diff_down | jump_down
        capped = ~(up | down | killed) & (se >= t_max)

        done = up | down | killed | capped
        if done.any():
            sl = idx[done]
            kind = np.where(up[done], _UP,
                            np.where(down[done], _DOWN,
                                     np.where(killed[done], _KILLED, _CAPPED)))
            out_kind[sl] = kind.astype(np.uint8)
            out_time[sl] = se[done]
            # up-exits creep to b, diffusion down-crossings end at c, jump
            # down-crossings overshoot, kills/caps sit at the current point
            pos = xe.copy()
            pos[up] = b
            pos[diff_down] = c
            out_pos[sl] = pos[done]
            out_lt[sl] = lt[done]
            out_hit[sl] = hit[done]
            out_occ[sl] = occ[done]
            keep = ~done
            idx = idx[keep]
            x = xe[keep]
            t = se[keep]
            lt = lt[keep]
            hit = hit[keep]
            occ = occ[keep]
            tkill = tkill[keep]
            njump = njump[keep]
            snapped = snapped[keep]
        else:
            x = xe
            t = se

    return (out_kind, out_time, out_pos, out_lt, out_hit, out_occ,
            out_sok, out_stime, out_slt, out_socc)
