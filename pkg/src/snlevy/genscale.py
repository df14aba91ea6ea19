"""Generalized scale functions for local times at finitely many levels.

For levels a_1 < ... < a_n with nonnegative weights p_1..p_n the generalized
scale function is built from W(q) by the recursion

    GW_k(x, y) = GW_(k-1)(x, y) + p_k W(q)(x - a_k) GW_(k-1)(a_k, y),

seeded with GW_0(x, y) = W(q)(x - y), and likewise GZ with seed Z(q)(x - c).
Three equivalent evaluation routes are implemented and cross-checked:

  * the literal recursion above;
  * a bordered determinant built from the matrices
    Sigma_ij = W(q)(a_i - a_j) (strictly lower triangular since W(0) = 0),
    alpha_i(x) = W(q)(x - a_i), beta_i(y) = W(q)(a_i - y),
    gamma_i(c) = Z(q)(a_i - c) and Lambda = diag(p);
  * forward substitution on the unit-lower-triangular system
    (I - Sigma Lambda) v = beta(y), v_i = GW(a_i, y).

The forward-substitution route is the canonical one used by the law modules;
the determinant route exists for conformance testing.  Every term in the
recursion is nonnegative, so all quantities are also computed in log space
(``gen_w_log``/``gen_z_log``) for corridors too wide for double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DomainError
from .scale import ScaleContext

__all__ = [
    "LevelWeights",
    "GenScaleMatrices",
    "gen_matrices",
    "gen_w",
    "gen_z",
    "gen_w_log",
    "gen_z_log",
    "gen_w_recursive",
    "gen_z_recursive",
    "gen_w_det",
    "gen_z_det",
    "gen_w_linear_system",
]

MAX_LEVELS = 64  # dense triangular solves only; no sparse path


@dataclass(frozen=True)
class LevelWeights:
    """Ordered levels with nonnegative local-time weights and a killing rate q.

    Levels closer than 1e-12 are rejected rather than merged; merging weights
    is a caller decision.
    """

    levels: tuple
    weights: tuple
    q: float = 0.0

    def __post_init__(self):
        levels = tuple(float(a) for a in self.levels)
        weights = tuple(float(p) for p in self.weights)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "weights", weights)
        n = len(levels)
        if n < 1:
            raise DomainError("at least one level is required")
        if n > MAX_LEVELS:
            raise DomainError(f"level count {n} exceeds the supported {MAX_LEVELS}")
        if len(weights) != n:
            raise DomainError("levels and weights must have equal length")
        if any(p < 0.0 for p in weights):
            raise DomainError("weights must be nonnegative")
        if any(b - a <= 1e-12 for a, b in zip(levels, levels[1:])):
            raise DomainError("levels must be strictly increasing (gap > 1e-12)")
        if self.q < 0.0:
            raise DomainError(f"q must be nonnegative, got {self.q}")

    @property
    def n(self) -> int:
        return len(self.levels)


def _check_ctx(lw: LevelWeights, ctx: ScaleContext):
    if abs(ctx.q - lw.q) > 1e-12 * max(1.0, abs(lw.q)):
        raise DomainError(
            f"LevelWeights.q={lw.q} does not match ScaleContext.q={ctx.q}"
        )


@dataclass
class GenScaleMatrices:
    """Matrix data for the determinant and linear-system routes."""

    sigma: np.ndarray          # W(q)(a_i - a_j), strictly lower triangular
    lam: np.ndarray            # diag(p)
    levels: np.ndarray

    def alpha(self, ctx, x):
        return np.array([ctx.w(x - a) for a in self.levels])

    def beta(self, ctx, y):
        return np.array([ctx.w(a - y) for a in self.levels])

    def gamma(self, ctx, c):
        return np.array([ctx.z(a - c) for a in self.levels])


def gen_matrices(lw: LevelWeights, ctx: ScaleContext) -> GenScaleMatrices:
    _check_ctx(lw, ctx)
    a = np.asarray(lw.levels)
    n = lw.n
    sigma = np.zeros((n, n))
    for i in range(n):
        for j in range(i):
            sigma[i, j] = ctx.w(a[i] - a[j])
    return GenScaleMatrices(sigma=sigma, lam=np.diag(lw.weights), levels=a)


# -- canonical route: forward substitution --------------------------------

def gen_w_linear_system(lw: LevelWeights, ctx: ScaleContext, y: float) -> np.ndarray:
    """Vector (GW(a_i, y))_i from the unit-lower-triangular system."""
    mats = gen_matrices(lw, ctx)
    beta = mats.beta(ctx, y)
    m = np.eye(lw.n) - mats.sigma @ mats.lam
    if lw.n == 1:
        return beta.copy()
    return solve_triangular(m, beta, lower=True, unit_diagonal=True)


def _gen_z_vector(lw: LevelWeights, ctx: ScaleContext, c: float) -> np.ndarray:
    mats = gen_matrices(lw, ctx)
    gam = mats.gamma(ctx, c)
    m = np.eye(lw.n) - mats.sigma @ mats.lam
    if lw.n == 1:
        return gam.copy()
    return solve_triangular(m, gam, lower=True, unit_diagonal=True)


def gen_w(lw: LevelWeights, ctx: ScaleContext, x: float, y: float) -> float:
    """GW(x, y) through the canonical forward-substitution route."""
    v = gen_w_linear_system(lw, ctx, y)
    total = ctx.w(x - y)
    for a, p, vk in zip(lw.levels, lw.weights, v):
        total += p * ctx.w(x - a) * vk
    return total


def gen_z(lw: LevelWeights, ctx: ScaleContext, x: float, c: float) -> float:
    """GZ(x, c) through the canonical forward-substitution route."""
    if lw.levels[0] <= c:
        raise DomainError(f"levels must lie above c={c}, got a_1={lw.levels[0]}")
    v = _gen_z_vector(lw, ctx, c)
    total = ctx.z(x - c)
    for a, p, vk in zip(lw.levels, lw.weights, v):
        total += p * ctx.w(x - a) * vk
    return total


# -- literal recursion ------------------------------------------------------

def gen_w_recursive(lw: LevelWeights, ctx: ScaleContext, x: float, y: float) -> float:
    """GW(x, y) by the defining recursion over levels (memoized)."""
    _check_ctx(lw, ctx)
    memo: dict = {}

    def rec(k: int, u: float) -> float:
        if k == 0:
            return ctx.w(u - y)
        key = (k, u)
        got = memo.get(key)
        if got is None:
            a_k, p_k = lw.levels[k - 1], lw.weights[k - 1]
            got = rec(k - 1, u) + p_k * ctx.w(u - a_k) * rec(k - 1, a_k)
            memo[key] = got
        return got

    return rec(lw.n, x)


def gen_z_recursive(lw: LevelWeights, ctx: ScaleContext, x: float, c: float) -> float:
    """GZ(x, c) by the defining recursion over levels (memoized)."""
    _check_ctx(lw, ctx)
    if lw.levels[0] <= c:
        raise DomainError(f"levels must lie above c={c}, got a_1={lw.levels[0]}")
    memo: dict = {}

    def rec(k: int, u: float) -> float:
        if k == 0:
            return ctx.z(u - c)
        key = (k, u)
        got = memo.get(key)
        if got is None:
            a_k, p_k = lw.levels[k - 1], lw.weights[k - 1]
            got = rec(k - 1, u) + p_k * ctx.w(u - a_k) * rec(k - 1, a_k)
            memo[key] = got
        return got

    return rec(lw.n, x)


# -- determinant route (conformance only) -----------------------------------

def _bordered(top_left, top_row, left_col, block) -> np.ndarray:
    n = len(top_row)
    m = np.empty((n + 1, n + 1))
    m[0, 0] = top_left
    m[0, 1:] = top_row
    m[1:, 0] = left_col
    m[1:, 1:] = block
    return m


def gen_w_det(lw: LevelWeights, ctx: ScaleContext, x: float, y: float) -> float:
    """GW(x, y) as the bordered determinant; conformance route."""
    mats = gen_matrices(lw, ctx)
    block = np.eye(lw.n) - mats.lam @ mats.sigma
    m = _bordered(ctx.w(x - y), mats.alpha(ctx, x),
                  -mats.lam @ mats.beta(ctx, y), block)
    return float(np.linalg.det(m))


def gen_z_det(lw: LevelWeights, ctx: ScaleContext, x: float, c: float) -> float:
    """GZ(x, c) as the bordered determinant; conformance route."""
    if lw.levels[0] <= c:
        raise DomainError(f"levels must lie above c={c}, got a_1={lw.levels[0]}")
    mats = gen_matrices(lw, ctx)
    block = np.eye(lw.n) - mats.lam @ mats.sigma
    m = _bordered(ctx.z(x - c), mats.alpha(ctx, x),
                  -mats.lam @ mats.gamma(ctx, c), block)
    return float(np.linalg.det(m))


# -- log-domain route --------------------------------------------------------

def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


def _gen_log_vector(lw, ctx, log_seed_at) -> list:
    """log v_i for the forward substitution, all terms nonnegative."""
    log_p = [math.log(p) if p > 0.0 else -math.inf for p in lw.weights]
    a = lw.levels
    log_v: list = []
    for i in range(lw.n):
        acc = log_seed_at(a[i])
        for j in range(i):
            term = log_p[j] + ctx.log_w(a[i] - a[j]) + log_v[j]
            acc = _logaddexp(acc, term)
        log_v.append(acc)
    return log_v


def _gen_log(lw, ctx, x, log_seed_at) -> float:
    log_v = _gen_log_vector(lw, ctx, log_seed_at)
    acc = log_seed_at(x)
    for k in range(lw.n):
        p = lw.weights[k]
        if p <= 0.0:
            continue
        acc = _logaddexp(acc, math.log(p) + ctx.log_w(x - lw.levels[k]) + log_v[k])
    return acc


def gen_w_log(lw: LevelWeights, ctx: ScaleContext, x: float, y: float) -> float:
    """log GW(x, y); -inf when the value is zero (x <= y and x below levels)."""
    _check_ctx(lw, ctx)
    return _gen_log(lw, ctx, x, lambda u: ctx.log_w(u - y))


def gen_z_log(lw: LevelWeights, ctx: ScaleContext, x: float, c: float) -> float:
    """log GZ(x, c)."""
    _check_ctx(lw, ctx)
    if lw.levels[0] <= c:
        raise DomainError(f"levels must lie above c={c}, got a_1={lw.levels[0]}")
    return _gen_log(lw, ctx, x, lambda u: ctx.log_z(u - c))
