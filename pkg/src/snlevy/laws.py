"""Local-time fluctuation laws in a two-sided corridor.

Every law below is a combination of (generalized) scale functions for a
corridor c < a < b: Laplace transforms of the local time at one or several
levels, evaluated at the first passage above b, below c, at an independent
exponential time, or at the inverse local time.  All ratios are formed in
log space so the laws remain evaluable for corridors far wider than the
overflow range of W(q) itself.

Conventions at q = 0 (Phi(0) = 0): q/Phi(q) means psi'(0), and Phi'(0) = inf
when psi'(0) = 0; the latter is signaled with a ConventionWarning wherever it
decides a value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

from .errors import (
    ConventionWarning,
    DegenerateIntervalError,
    DomainError,
)
from .genscale import LevelWeights, gen_w_log, gen_z_log
from .model import LevyModel, phi_inverse
from .scale import ScaleContext

__all__ = [
    "Corridor",
    "AtomExpLaw",
    "JointExpLaw",
    "lt_exit_up",
    "lt_exit_down",
    "lt_resolvent",
    "lt_atom_exp",
    "hitting_transform",
    "lt_exp_killed_transform",
    "lt_exp_joint",
    "exp_density_prefactor",
    "lt_limit_up",
    "lt_limit_down",
    "lt_limit_exp",
    "lt_limits",
    "joint_lt_exit_up",
    "joint_lt_exit_down",
    "joint_lt_resolvent",
    "inv_lt_survival",
    "inv_lt_rate",
    "inv_lt_joint_transform",
    "occu_inv_lt_transform",
    "get_context",
]


@dataclass(frozen=True)
class Corridor:
    """Corridor geometry c < a < b, start x (defaults to a), rates q and p.

    q is the killing / exponential-clock rate, p the weight on the local time
    at the observation level a.  ``levels`` carries the multi-level weights
    for the joint laws; all its levels must lie inside (c, b).
    """

    c: float
    b: float
    a: float
    x: float | None = None
    q: float = 0.0
    p: float = 0.0
    levels: LevelWeights | None = None

    def __post_init__(self):
        if not (self.c < self.a < self.b):
            raise DomainError(
                f"need c < a < b, got c={self.c}, a={self.a}, b={self.b}"
            )
        if self.q < 0.0 or self.p < 0.0:
            raise DomainError("rates q and p must be nonnegative")
        if self.x is not None and not (self.c <= self.x <= self.b):
            raise DomainError(f"start x={self.x} outside [{self.c}, {self.b}]")
        if self.levels is not None:
            lo, hi = self.levels.levels[0], self.levels.levels[-1]
            if lo <= self.c or hi >= self.b:
                raise DomainError("joint-law levels must lie inside (c, b)")

    @property
    def start(self) -> float:
        return self.a if self.x is None else self.x


@dataclass(frozen=True)
class AtomExpLaw:
    """Atom-plus-exponential law of the local time at first passage up."""

    atom: float
    rate: float


@dataclass(frozen=True)
class JointExpLaw:
    """Independent split of (position, local time) at an exponential time."""

    space_density: float
    time_rate: float


@lru_cache(maxsize=64)
def get_context(model: LevyModel, q: float, method: str = "auto") -> ScaleContext:
    model.require_unbounded_variation()
    return ScaleContext(model, q, method=method)


def _single(cor: Corridor) -> LevelWeights:
    return LevelWeights(levels=(cor.a,), weights=(cor.p,), q=cor.q)


def _sub_exp(l1: float, l2: float) -> float:
    """exp(l1) - exp(l2) for l1 >= l2, computed without overflow in the gap."""
    if l1 == -math.inf:
        return 0.0
    if l2 == -math.inf:
        return math.exp(l1)
    return -math.exp(l1) * math.expm1(l2 - l1)


# -- single-level transforms at first passage --------------------------------

def lt_exit_up(model: LevyModel, cor: Corridor, method: str = "auto") -> float:
    """Transform of (passage time above b, local time at a) on up-exit."""
    ctx = get_context(model, cor.q, method)
    lw = _single(cor)
    num = gen_w_log(lw, ctx, cor.start, cor.c)
    den = gen_w_log(lw, ctx, cor.b, cor.c)
    if den == -math.inf:
        raise DegenerateIntervalError("GW(b, c) = 0: degenerate corridor")
    return math.exp(num - den)


def lt_exit_down(model: LevyModel, cor: Corridor, method: str = "auto") -> float:
    """Transform of (passage time below c, local time at a) on down-exit."""
    ctx = get_context(model, cor.q, method)
    lw = _single(cor)
    x = cor.start
    lw_x = gen_w_log(lw, ctx, x, cor.c)
    lw_b = gen_w_log(lw, ctx, cor.b, cor.c)
    lz_x = gen_z_log(lw, ctx, x, cor.c)
    lz_b = gen_z_log(lw, ctx, cor.b, cor.c)
    return _sub_exp(lz_x, lw_x - lw_b + lz_b)


def lt_resolvent(model: LevyModel, cor: Corridor, y: float,
                 method: str = "auto") -> float:
    """Density in y of the p-discounted occupation law before exit/killing."""
    if not (cor.c < y < cor.b):
        raise DomainError(f"y={y} outside ({cor.c}, {cor.b})")
    ctx = get_context(model, cor.q, method)
    lw = _single(cor)
    x = cor.start
    l1 = (gen_w_log(lw, ctx, x, cor.c) - gen_w_log(lw, ctx, cor.b, cor.c)
          + gen_w_log(lw, ctx, cor.b, y))
    l2 = gen_w_log(lw, ctx, x, y)
    return max(_sub_exp(l1, l2), 0.0)


def lt_atom_exp(model: LevyModel, cor: Corridor, method: str = "auto") -> AtomExpLaw:
    """Atom at zero and exponential rate of the local time at up-exit (q = 0).

    Conditionally on exiting upward before c, the local time at a vanishes
    with probability W(x-a)W(b-c)/(W(x-c)W(b-a)) and is exponential with rate
    W(b-c)/(W(b-a)W(a-c)) given that it is positive.
    """
    if cor.q != 0.0:
        raise DomainError("the atom/exponential law is a q = 0 statement")
    ctx = get_context(model, 0.0, method)
    x = cor.start
    if x >= cor.b:
        atom = 1.0 if x > cor.a else 0.0
    elif x <= cor.a:
        atom = 0.0
    else:
        atom = math.exp(
            ctx.log_w(x - cor.a) + ctx.log_w(cor.b - cor.c)
            - ctx.log_w(x - cor.c) - ctx.log_w(cor.b - cor.a)
        )
    rate = math.exp(
        ctx.log_w(cor.b - cor.c) - ctx.log_w(cor.b - cor.a)
        - ctx.log_w(cor.a - cor.c)
    )
    return AtomExpLaw(atom=atom, rate=rate)


def hitting_transform(model: LevyModel, cor: Corridor,
                      method: str = "auto") -> float:
    """Transform of the first hitting time of a before leaving (c, b)."""
    x = cor.start
    if not (cor.c < x < cor.b) and x not in (cor.c, cor.b):
        raise DomainError(f"x={x} outside [{cor.c}, {cor.b}]")
    ctx = get_context(model, cor.q, method)
    l1 = ctx.log_w(x - cor.c) - ctx.log_w(cor.a - cor.c)
    l2 = (ctx.log_w(x - cor.a) + ctx.log_w(cor.b - cor.c)
          - ctx.log_w(cor.b - cor.a) - ctx.log_w(cor.a - cor.c))
    return max(_sub_exp(l1, l2), 0.0)


# -- exponential-time laws ----------------------------------------------------

def _log_rate(ctx: ScaleContext, a: float, b: float, c: float) -> float:
    return ctx.log_w(b - c) - ctx.log_w(b - a) - ctx.log_w(a - c)


def inv_lt_rate(model: LevyModel, cor: Corridor, method: str = "auto") -> float:
    """Exponential rate W(q)(b-c) / (W(q)(b-a) W(q)(a-c)) of l(a, .) laws."""
    ctx = get_context(model, cor.q, method)
    return math.exp(_log_rate(ctx, cor.a, cor.b, cor.c))


def lt_exp_killed_transform(model: LevyModel, cor: Corridor,
                            method: str = "auto") -> float:
    """Transform of the local time at a up to min(e_q, both exits).

    From x = a the value is r/(r+p) with r the exponential rate above.  Other
    starting points are reduced to a by the strong Markov property at the
    hitting time of a: value = (1 - H) + H * r/(r+p) with H the hitting
    transform, since no local time accrues before a is reached.
    """
    ctx = get_context(model, cor.q, method)
    log_r = _log_rate(ctx, cor.a, cor.b, cor.c)
    at_a = 1.0 / (1.0 + cor.p * math.exp(-log_r))
    x = cor.start
    if x == cor.a:
        return at_a
    h = hitting_transform(model, cor, method)
    return (1.0 - h) + h * at_a


def lt_exp_joint(model: LevyModel, cor: Corridor, y: float,
                 method: str = "auto") -> JointExpLaw:
    """Joint law of (position, local time at a) at an exponential time e_q.

    Conditionally on e_q preceding both exits the two are independent: the
    position has density q * ((W(a-c)/W(b-c)) W(b-y) - W(a-y)) in dy (the
    unnormalized form including the factor q) and the local time is
    exponential with the corridor rate.
    """
    if not (cor.c < y < cor.b):
        raise DomainError(f"y={y} outside ({cor.c}, {cor.b})")
    if cor.q <= 0.0:
        raise DomainError("the exponential-time law needs q > 0")
    ctx = get_context(model, cor.q, method)
    l1 = (ctx.log_w(cor.a - cor.c) - ctx.log_w(cor.b - cor.c)
          + ctx.log_w(cor.b - y))
    l2 = ctx.log_w(cor.a - y)
    dens = cor.q * max(_sub_exp(l1, l2), 0.0)
    rate = math.exp(_log_rate(ctx, cor.a, cor.b, cor.c))
    return JointExpLaw(space_density=dens, time_rate=rate)


def _ub_terms(model: LevyModel, q: float, p: float, a: float, b: float,
              c: float, method: str = "auto") -> tuple[float, float, float]:
    """The three disjoint contributions (up-exit, down-exit, killed inside)
    whose sum is lt_exp_killed_transform from a."""
    ctx = get_context(model, q, method)
    wac, wbc = ctx.w(a - c), ctx.w(b - c)
    wba = ctx.w(b - a)
    zac, zbc = ctx.z(a - c), ctx.z(b - c)
    den = wbc + p * wba * wac
    up = wac / den
    down = (zac * wbc - zbc * wac) / den
    killed = (wac * (zbc - 1.0) - wbc * (zac - 1.0)) / den
    return up, down, killed


def exp_density_prefactor(model: LevyModel, q: float, a: float, b: float,
                          c: float, method: str = "auto") -> float:
    """Prefactor of the killed-inside local-time density at level a,

        (W(a-c)(Z(b-c)-1) - W(b-c)(Z(a-c)-1)) / (W(b-a) W(a-c)),

    the density of l(a, e_q) on the killed-inside event with its exponential
    factor removed."""
    ctx = get_context(model, q, method)
    num = ctx.w(a - c) * (ctx.z(b - c) - 1.0) - ctx.w(b - c) * (ctx.z(a - c) - 1.0)
    return num / (ctx.w(b - a) * ctx.w(a - c))


# -- wide-corridor limits ------------------------------------------------------

def lt_limit_up(model: LevyModel, q: float, p: float, a: float, b: float,
                method: str = "auto") -> float:
    """Limit of the up-exit transform as c -> -inf:
    1 / (e^(Phi(q)(b-a)) + p W(q)(b-a))."""
    ctx = get_context(model, q, method)
    l1 = ctx.phi.phi * (b - a)
    l2 = (math.log(p) + ctx.log_w(b - a)) if p > 0.0 else -math.inf
    hi, lo = (l1, l2) if l1 >= l2 else (l2, l1)
    log_den = hi + math.log1p(math.exp(lo - hi))
    return math.exp(-log_den)


def lt_limit_down(model: LevyModel, q: float, p: float, c: float, a: float,
                  method: str = "auto") -> float:
    """Limit of the down-exit transform as b -> +inf:
    (Z(q)(a-c) - (q/Phi(q)) W(q)(a-c)) / (1 + p e^(Phi(q)(c-a)) W(q)(a-c))."""
    ctx = get_context(model, q, method)
    if q == 0.0:
        kappa = model.psi_prime(0.0)  # q/Phi(q) -> psi'(0) at q = 0
        if kappa < 0.0:
            kappa = 0.0  # Phi(0) > 0: q/Phi(q) -> 0
    else:
        kappa = q / ctx.phi.phi
    num = ctx.z(a - c) - kappa * ctx.w(a - c)
    den = 1.0 + p * math.exp(ctx.phi.phi * (c - a) + ctx.log_w(a - c))
    return num / den


def lt_limit_exp(model: LevyModel, q: float, p: float,
                 method: str = "auto") -> float:
    """Limit transform of the total local time at an exponential time,
    1/(1 + p Phi'(q)); zero under the Phi'(0) = inf convention."""
    phi = phi_inverse(model, q)
    if phi.phi_prime == math.inf:
        if p > 0.0:
            warnings.warn(
                "Phi'(0) = inf (q = 0 with psi'(0) = 0): the transform is 0",
                ConventionWarning,
                stacklevel=2,
            )
            return 0.0
        return 1.0
    return 1.0 / (1.0 + p * phi.phi_prime)


def lt_limits(model: LevyModel, q: float, p: float, *, a: float | None = None,
              b: float | None = None, c: float | None = None,
              method: str = "auto") -> float:
    """Dispatch on the remaining geometry: (a, b) for the up limit,
    (c, a) for the down limit, neither for the exponential-time limit."""
    if b is not None and a is not None and c is None:
        return lt_limit_up(model, q, p, a, b, method)
    if c is not None and a is not None and b is None:
        return lt_limit_down(model, q, p, c, a, method)
    if a is None and b is None and c is None:
        return lt_limit_exp(model, q, p, method)
    raise DomainError("give (a, b), (c, a), or no boundary at all")


# -- joint (multi-level) laws ---------------------------------------------------

def _joint_lw(cor: Corridor) -> LevelWeights:
    if cor.levels is None:
        raise DomainError("this law needs Corridor.levels")
    if abs(cor.levels.q - cor.q) > 1e-12 * max(1.0, cor.q):
        raise DomainError("Corridor.q and Corridor.levels.q disagree")
    return cor.levels


def joint_lt_exit_up(model: LevyModel, cor: Corridor,
                     method: str = "auto") -> float:
    """Transform of local times at all levels on up-exit."""
    lw = _joint_lw(cor)
    ctx = get_context(model, cor.q, method)
    num = gen_w_log(lw, ctx, cor.start, cor.c)
    den = gen_w_log(lw, ctx, cor.b, cor.c)
    if den == -math.inf:
        raise DegenerateIntervalError("GW(b, c) = 0: degenerate corridor")
    return math.exp(num - den)


def joint_lt_exit_down(model: LevyModel, cor: Corridor,
                       method: str = "auto") -> float:
    lw = _joint_lw(cor)
    ctx = get_context(model, cor.q, method)
    x = cor.start
    lw_x = gen_w_log(lw, ctx, x, cor.c)
    lw_b = gen_w_log(lw, ctx, cor.b, cor.c)
    lz_x = gen_z_log(lw, ctx, x, cor.c)
    lz_b = gen_z_log(lw, ctx, cor.b, cor.c)
    return _sub_exp(lz_x, lw_x - lw_b + lz_b)


def joint_lt_resolvent(model: LevyModel, cor: Corridor, y: float,
                       method: str = "auto") -> float:
    if not (cor.c < y < cor.b):
        raise DomainError(f"y={y} outside ({cor.c}, {cor.b})")
    lw = _joint_lw(cor)
    ctx = get_context(model, cor.q, method)
    x = cor.start
    l1 = (gen_w_log(lw, ctx, x, cor.c) - gen_w_log(lw, ctx, cor.b, cor.c)
          + gen_w_log(lw, ctx, cor.b, y))
    l2 = gen_w_log(lw, ctx, x, y)
    return max(_sub_exp(l1, l2), 0.0)


# -- inverse-local-time laws -----------------------------------------------------

def inv_lt_survival(model: LevyModel, cor: Corridor, t: float,
                    method: str = "auto") -> float:
    """Survival transform exp(-rate * t) of the inverse local time at a.

    The same value answers four conditional questions at once: survival of
    the inverse local time past t before up-exit given up-exit happens first,
    before the exponential clock given the clock rings first, before
    down-exit given down-exit happens first, and before all three jointly.
    """
    if t < 0.0:
        raise DomainError(f"t must be nonnegative, got {t}")
    ctx = get_context(model, cor.q, method)
    return math.exp(-t * math.exp(_log_rate(ctx, cor.a, cor.b, cor.c)))


def inv_lt_joint_transform(model: LevyModel, cor: Corridor, t: float,
                           method: str = "auto") -> float:
    """Joint transform of local times at all levels at the inverse local time,
    exp(-GW(b,c) t / (GW(b,a) GW(a,c)))."""
    if t < 0.0:
        raise DomainError(f"t must be nonnegative, got {t}")
    lw = _joint_lw(cor)
    ctx = get_context(model, cor.q, method)
    log_rate = (gen_w_log(lw, ctx, cor.b, cor.c)
                - gen_w_log(lw, ctx, cor.b, cor.a)
                - gen_w_log(lw, ctx, cor.a, cor.c))
    return math.exp(-t * math.exp(log_rate))


def occu_inv_lt_transform(grid, a: float, b: float, c: float, t: float) -> float:
    """Weighted-occupation transform at the inverse local time from an
    OmegaGrid: exp(-Ww(b,c) t / (Ww(b,a) Ww(a,c)))."""
    if t < 0.0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if not (c < a < b):
        raise DomainError(f"need c < a < b, got {c}, {a}, {b}")
    rate = grid.w(b, c) / (grid.w(b, a) * grid.w(a, c))
    return math.exp(-t * rate)
