"""Potential kernel, permanental Laplace transforms and loop-soup identities.

The process killed at leaving (c, b) or at an independent exponential time of
rate q has potential density

    g(x, y) = (W(q)(x-c)/W(q)(b-c)) W(q)(b-y) - W(q)(x-y),

with respect to Lebesgue measure on (c, b) (the reference measure here, by
construction of the killed process).  A permanental vector with kernel
G = (g(a_i, a_j)) and index beta has Laplace transform det(I + Lambda G)^(-1/beta);
beta = 2 is the index attached to local times and is the default everywhere.

Two determinant identities tie the kernel to the generalized scale functions:
GW(b,c)/W(q)(b-c) equals det(I + Lambda G), and GW(b,a) GW(a,c)/W(q)(b-c)
equals the bordered determinant with g(a, .) on the border.  They are exposed
as a conformance gate (``isomorphism_check``), and their logarithm is the
loop-soup exponential functional (``loop_soup_functional``).

Bordered determinants are evaluated by one step of block elimination,
det(M) * (d - row M^-1 col), mirroring the row operations that prove the
identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateIntervalError, DomainError, PermanentalExistenceError
from .genscale import LevelWeights, gen_w_log
from .laws import get_context
from .model import LevyModel
from .scale import ScaleContext

__all__ = [
    "PotentialKernel",
    "IsomorphismReport",
    "LogDerivReport",
    "potential_density",
    "permanental_laplace",
    "tilted_lt_transform",
    "isomorphism_check",
    "loop_soup_functional",
    "loop_soup_routes",
    "logderiv_identity_check",
]


def potential_density(model: LevyModel, q: float, b: float, c: float,
                      x: float, y: float, method: str = "auto") -> float:
    """g(x, y) for x, y in (c, b); expected local time at y before killing."""
    if not (c < x < b) or not (c < y < b):
        raise DomainError(f"x={x}, y={y} must lie inside ({c}, {b})")
    ctx = get_context(model, q, method)
    l1 = ctx.log_w(x - c) - ctx.log_w(b - c) + ctx.log_w(b - y)
    l2 = ctx.log_w(x - y)
    if l1 == -math.inf:
        return 0.0
    return max(-math.exp(l1) * math.expm1(min(l2 - l1, 0.0)), 0.0)


class PotentialKernel:
    """The potential density of one killed corridor plus its level-set matrix."""

    def __init__(self, model: LevyModel, q: float, b: float, c: float,
                 levels, method: str = "auto"):
        if not c < b:
            raise DegenerateIntervalError(f"need c < b, got c={c}, b={b}")
        levels = tuple(float(a) for a in levels)
        if any(not (c < a < b) for a in levels):
            raise DomainError("all kernel levels must lie inside (c, b)")
        if any(y - x <= 0.0 for x, y in zip(levels, levels[1:])):
            raise DomainError("kernel levels must be strictly increasing")
        self.model = model
        self.q = float(q)
        self.b = float(b)
        self.c = float(c)
        self.levels = levels
        self.method = method
        self._ctx: ScaleContext = get_context(model, self.q, method)
        n = len(levels)
        self.G = np.empty((n, n))
        for i, ai in enumerate(levels):
            for j, aj in enumerate(levels):
                self.G[i, j] = self.eval(ai, aj)

    def eval(self, x: float, y: float) -> float:
        return potential_density(self.model, self.q, self.b, self.c, x, y,
                                 self.method)

    def g_vector(self, a: float):
        """(g(a, a_j))_j and (g(a_i, a))_i for a border level a."""
        row = np.array([self.eval(a, aj) for aj in self.levels])
        col = np.array([self.eval(ai, a) for ai in self.levels])
        return row, col


def _det_i_lam_g(kernel: PotentialKernel, weights) -> float:
    lam = np.diag(weights)
    return float(np.linalg.det(np.eye(len(kernel.levels)) + lam @ kernel.G))


def _weights_array(kernel: PotentialKernel, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(kernel.levels),):
        raise DomainError("one weight per kernel level is required")
    if np.any(w < 0.0):
        raise DomainError("weights must be nonnegative")
    return w


def permanental_laplace(kernel: PotentialKernel, weights, beta: float = 2.0) -> float:
    """det(I + Lambda G)^(-1/beta), the permanental Laplace transform."""
    w = _weights_array(kernel, weights)
    det = _det_i_lam_g(kernel, w)
    if det <= 0.0:
        raise PermanentalExistenceError(
            f"det(I + Lambda G) = {det} <= 0: no permanental law at beta={beta}",
            determinant=det,
        )
    return det ** (-1.0 / beta)


def _gen_lw(kernel: PotentialKernel, weights) -> LevelWeights:
    return LevelWeights(levels=kernel.levels, weights=tuple(weights), q=kernel.q)


def tilted_lt_transform(kernel: PotentialKernel, a: float, weights) -> float:
    """Transform of total local times under the law tilted to die at its last
    visit to a: GW(b,a) GW(a,c) / (GW(b,c) g(a,a))."""
    w = _weights_array(kernel, weights)
    gaa = kernel.eval(a, a)
    if gaa <= 0.0:
        raise DegenerateIntervalError(f"g(a,a) = {gaa} at a={a}")
    lw = _gen_lw(kernel, w)
    ctx = kernel._ctx
    ln = (gen_w_log(lw, ctx, kernel.b, a) + gen_w_log(lw, ctx, a, kernel.c)
          - gen_w_log(lw, ctx, kernel.b, kernel.c) - math.log(gaa))
    return math.exp(ln)


def _bordered_det(d: float, row: np.ndarray, col: np.ndarray,
                  block: np.ndarray) -> float:
    """det [[d, row], [col, block]] by one step of block elimination."""
    return float(np.linalg.det(block)) * (d - float(row @ np.linalg.solve(block, col)))


@dataclass(frozen=True)
class IsomorphismReport:
    """Both sides of the two kernel/scale determinant identities."""

    ratio_lhs: float      # GW(b,c) / W(q)(b-c)
    ratio_rhs: float      # det(I + Lambda G)
    bordered_lhs: float   # GW(b,a) GW(a,c) / W(q)(b-c)
    bordered_rhs: float   # bordered determinant with g(a, .) on the border
    abs_gap: float


def isomorphism_check(kernel: PotentialKernel, a: float, weights) -> IsomorphismReport:
    """Evaluate both sides of both determinant identities; conformance gate."""
    if not (kernel.c < a < kernel.b):
        raise DomainError(f"a={a} must lie inside ({kernel.c}, {kernel.b})")
    w = _weights_array(kernel, weights)
    ctx = kernel._ctx
    lw = _gen_lw(kernel, w)
    lwbc = ctx.log_w(kernel.b - kernel.c)

    ratio_lhs = math.exp(gen_w_log(lw, ctx, kernel.b, kernel.c) - lwbc)
    ratio_rhs = _det_i_lam_g(kernel, w)

    bordered_lhs = math.exp(
        gen_w_log(lw, ctx, kernel.b, a) + gen_w_log(lw, ctx, a, kernel.c) - lwbc
    )
    row, col = kernel.g_vector(a)
    block = np.eye(len(kernel.levels)) + np.diag(w) @ kernel.G
    bordered_rhs = _bordered_det(kernel.eval(a, a), row, w * col, block)

    gap = max(abs(ratio_lhs - ratio_rhs), abs(bordered_lhs - bordered_rhs))
    return IsomorphismReport(ratio_lhs, ratio_rhs, bordered_lhs, bordered_rhs, gap)


def loop_soup_routes(kernel: PotentialKernel, weights) -> tuple[float, float]:
    """The loop-soup exponential functional by both routes:
    ln det(I + Lambda G) and ln(GW(b,c)/W(q)(b-c))."""
    w = _weights_array(kernel, weights)
    det = _det_i_lam_g(kernel, w)
    if det <= 0.0:
        raise PermanentalExistenceError(
            f"det(I + Lambda G) = {det} <= 0", determinant=det
        )
    via_det = math.log(det)
    ctx = kernel._ctx
    lw = _gen_lw(kernel, w)
    via_scale = gen_w_log(lw, ctx, kernel.b, kernel.c) - ctx.log_w(
        kernel.b - kernel.c)
    return via_det, via_scale


def loop_soup_functional(kernel: PotentialKernel, weights,
                         tol: float = 1e-9) -> float:
    """Common value of the two loop-soup routes; they must agree to tol."""
    via_det, via_scale = loop_soup_routes(kernel, weights)
    if abs(via_det - via_scale) > tol * max(1.0, abs(via_scale)):
        raise DomainError(
            f"loop-soup routes disagree: {via_det} vs {via_scale}"
        )
    return via_scale


@dataclass(frozen=True)
class LogDerivReport:
    lhs: float
    rhs: float
    gap: float


def logderiv_identity_check(model: LevyModel, q: float, b: float, c: float,
                            method: str = "auto") -> LogDerivReport:
    """Check integral of the g-diagonal against the log-derivative of W.

    lhs = int_c^b W(q)(b-a) W(q)(a-c) / W(q)(b-c) da by adaptive quadrature;
    rhs = (dW(q)/dq)(b-c) / W(q)(b-c).
    """
    if not b > c:
        raise DomainError(f"need b > c, got b={b}, c={c}")
    ctx = get_context(model, q, method)
    wbc = ctx.w(b - c)

    def diag(a):
        return ctx.w(b - a) * ctx.w(a - c) / wbc

    lhs, _ = quad(diag, c, b, epsabs=1e-12, epsrel=1e-11, limit=200)
    rhs = ctx.dw_dq(b - c) / wbc
    return LogDerivReport(lhs=lhs, rhs=rhs, gap=abs(lhs - rhs))
