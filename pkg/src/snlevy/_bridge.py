"""Expected window occupancy of a Brownian bridge, tabulated.

The windowed local-time estimator accumulates, per time step, the fraction of
the step the path spends inside [a - eps, a + eps].  Sampling the indicator
at the step's left endpoint quantizes the estimate on a dt/(2 eps) lattice
and adds large sampling noise; instead the kernels add the exact conditional
expectation of the occupancy given the step endpoints (the path between grid
points is a Brownian bridge), which is the Rao-Blackwellized version of the
same window estimator.

In units of the step scale s = sigma sqrt(dt) the expectation only depends on
the scaled endpoint offsets u0, u1 and the scaled half-width eh = eps/s:

    g(u0, u1) = int_0^1 [Phi((eh - m(w))/sd(w)) - Phi((-eh - m(w))/sd(w))] dw,

with m(w) = u0 + (u1 - u0) w and sd(w) = sqrt(w (1 - w)).  g is tabulated on
a square grid and interpolated bilinearly; the w-integral uses midpoint nodes
under the substitution w = (1 - cos(pi v))/2, which clusters nodes into the
boundary layers at w -> 0, 1.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import ndtr

U_MAX = 8.0
DU = 0.04
W_NODES = 160


@lru_cache(maxsize=8)
def window_table(eps_hat: float) -> tuple[float, float, np.ndarray]:
    """(u_min, 1/du, table) for the scaled window half-width eps_hat."""
    u = np.arange(-U_MAX, U_MAX + 0.5 * DU, DU)
    n = u.size
    v = (np.arange(W_NODES) + 0.5) / W_NODES
    w = 0.5 * (1.0 - np.cos(np.pi * v))
    dw = np.pi / (2.0 * W_NODES) * np.sin(np.pi * v)  # Jacobian of w(v)
    sd = np.sqrt(w * (1.0 - w))

    table = np.empty((n, n))
    for i in range(n):  # swap symmetry: fill j >= i, mirror after
        m = u[i] + (u[i:, None] - u[i]) * w[None, :]
        rows = ((ndtr((eps_hat - m) / sd) - ndtr((-eps_hat - m) / sd))
                * dw).sum(axis=1)
        table[i, i:] = rows
        table[i:, i] = rows
    return float(u[0]), float(1.0 / DU), table
