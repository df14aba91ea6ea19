"""Monte Carlo verification oracle.

Paths are simulated with an Euler scheme for the Gaussian part (exact drift),
exact exponential inter-arrival times and marks for the compound Poisson
jumps, and Brownian-bridge crossing corrections for both barriers between
grid points, which removes the dominant O(sqrt(dt)) passage-time bias.  Local
time at a level a is measured by the shrinking-window occupation estimator
(1/2 eps) * sum dt 1{|X - a| <= eps}; the first hit of each level is detected
separately with a bridge correction, which gives an unbiased-to-O(dt) handle
on the atom {l = 0}.  Weighted occupation integrals accumulate a piecewise
constant weight along the path.

Everything runs through the kernels in snlevy._backend; ensembles are
reproducible for a fixed (seed, backend) pair.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _backend
from ._bridge import window_table
from .errors import ComparabilityError, DomainError, EstimationError
from .laws import Corridor
from .model import LevyModel
from .omega import WeightFunction

__all__ = [
    "McConfig",
    "McEnsemble",
    "PathRecord",
    "TransformSpec",
    "EstimateResult",
    "RichardsonReport",
    "EXIT_UP",
    "EXIT_DOWN",
    "EXIT_KILLED",
    "EXIT_CAPPED",
    "simulate_corridor",
    "empirical_transform",
    "richardson_epsilon",
]

EXIT_UP, EXIT_DOWN, EXIT_KILLED, EXIT_CAPPED = 0, 1, 2, 3
_KIND_NAMES = {EXIT_UP: "Up", EXIT_DOWN: "Down", EXIT_KILLED: "Killed",
               EXIT_CAPPED: "HorizonCapped"}


@dataclass(frozen=True)
class McConfig:
    """Simulation parameters.

    dt should stay below ~4*epsilon_lt^2 so windows are resolved by several
    samples per crossing; a coarser dt only triggers a warning because the
    acceptance tolerances are statistical.
    """

    dt: float = 1e-4
    n_paths: int = 100_000
    seed: int = 0
    epsilon_lt: float = 5e-3
    t_max: float = 50.0

    def __post_init__(self):
        if self.dt <= 0.0 or self.epsilon_lt <= 0.0 or self.t_max <= 0.0:
            raise DomainError("dt, epsilon_lt and t_max must be positive")
        if self.n_paths < 100:
            raise DomainError(f"need n_paths >= 100, got {self.n_paths}")
        if self.dt > 4.0 * self.epsilon_lt**2:
            warnings.warn(
                f"dt={self.dt} above the epsilon_lt^2 scale "
                f"({self.epsilon_lt}^2): window sampling will be noisy",
                UserWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class PathRecord:
    exit_kind: str
    exit_time: float
    exit_pos: float
    local_time_estimates: dict
    hit_levels: dict
    weighted_occupation: float


class McEnsemble:
    """Column-oriented storage of simulated path records."""

    def __init__(self, model, cor, cfg, levels, weight, backend, kind, time,
                 pos, local_time, hit, wocc, snap_ok=None, snap_time=None,
                 snap_lt=None, snap_occ=None, snap_spec=None):
        self.model = model
        self.corridor = cor
        self.config = cfg
        self.levels = np.asarray(levels, dtype=float)
        self.weight = weight
        self.backend = backend
        self.exit_kind = kind
        self.exit_time = time
        self.exit_pos = pos
        self.local_time = local_time
        self.hit = hit.astype(bool)
        self.weighted_occ = wocc
        self.snap_ok = snap_ok.astype(bool) if snap_ok is not None else None
        self.snap_time = snap_time
        self.snap_lt = snap_lt
        self.snap_occ = snap_occ
        self.snap_spec = snap_spec  # (level, threshold) or None

    @property
    def n_paths(self) -> int:
        return self.exit_kind.shape[0]

    def mask(self, kinds) -> np.ndarray:
        if isinstance(kinds, int):
            kinds = (kinds,)
        m = np.zeros(self.n_paths, dtype=bool)
        for k in kinds:
            m |= self.exit_kind == k
        return m

    def level_index(self, a: float) -> int:
        hits = np.nonzero(np.abs(self.levels - a) <= 1e-12)[0]
        if hits.size == 0:
            raise DomainError(f"level {a} was not recorded")
        return int(hits[0])

    def capped_fraction(self) -> float:
        return float(np.mean(self.exit_kind == EXIT_CAPPED))

    def records(self):
        """Iterate PathRecord views (for small ensembles / debugging)."""
        for i in range(self.n_paths):
            yield PathRecord(
                exit_kind=_KIND_NAMES[int(self.exit_kind[i])],
                exit_time=float(self.exit_time[i]),
                exit_pos=float(self.exit_pos[i]),
                local_time_estimates={
                    float(a): float(self.local_time[i, j])
                    for j, a in enumerate(self.levels)
                },
                hit_levels={
                    float(a): bool(self.hit[i, j])
                    for j, a in enumerate(self.levels)
                },
                weighted_occupation=float(self.weighted_occ[i]),
            )


def simulate_corridor(model: LevyModel, cor: Corridor, cfg: McConfig,
                      levels=None, weight: WeightFunction | None = None,
                      backend: str | None = None,
                      snap_at: tuple | None = None) -> McEnsemble:
    """Simulate n_paths corridor paths killed at exits, e_q, or t_max.

    snap_at=(level, t) additionally records the path state at the inverse
    local time of ``level`` at ``t`` (the first moment the windowed
    local-time estimate there exceeds t).
    """
    if model.sigma <= 0.0:
        raise DomainError("path simulation supports sigma > 0 models only")
    if levels is None:
        levels = [cor.a]
    levels = np.asarray(sorted(float(a) for a in levels))
    if weight is None:
        obreaks, oheights = np.empty(0), np.empty(0)
    else:
        obreaks, oheights = weight.breaks, weight.heights
    jump_rate = model.jumps.rate if model.jumps is not None else 0.0
    jump_mean = model.jumps.mean_jump if model.jumps is not None else 1.0
    if snap_at is None:
        snap_level, snap_t = -1, 0.0
    else:
        hits = np.nonzero(np.abs(levels - snap_at[0]) <= 1e-12)[0]
        if hits.size == 0:
            raise DomainError(f"snap level {snap_at[0]} not among {levels}")
        snap_level, snap_t = int(hits[0]), float(snap_at[1])
        if snap_t < 0.0:
            raise DomainError("snapshot threshold must be nonnegative")

    if levels.size:
        eps_hat = cfg.epsilon_lt / (model.sigma * math.sqrt(cfg.dt))
        wt_umin, wt_dinv, wt_table = window_table(round(eps_hat, 9))
    else:
        wt_umin, wt_dinv, wt_table = 0.0, 0.0, None

    _, simulate, name = _backend.get_kernels(backend)
    kind, time, pos, lt, hit, wocc, sok, stime, slt, socc = simulate(
        model.sigma, model.gamma, jump_rate, jump_mean, cor.start, cor.b,
        cor.c, cor.q, cfg.dt, cfg.t_max, cfg.epsilon_lt, levels, obreaks,
        oheights, cfg.seed, cfg.n_paths, snap_level, snap_t, wt_umin,
        wt_dinv, wt_table)

    ens = McEnsemble(model, cor, cfg, levels, weight, name, kind, time, pos,
                     lt, hit, wocc, sok, stime, slt, socc, snap_spec=snap_at)
    frac = ens.capped_fraction()
    if frac > 0.01:
        warnings.warn(
            f"{frac:.1%} of paths hit t_max={cfg.t_max}: estimates are biased",
            UserWarning,
            stacklevel=2,
        )
    return ens


@dataclass(frozen=True)
class TransformSpec:
    """Functional e^(-q_weight*T - sum p_j l_j - occupation) on selected exits.

    events: exit kinds whose paths enter the numerator (others contribute 0).
    q_weight: discount on the recorded exit time (use 0 when the ensemble was
    already killed at rate q, otherwise the clock is double counted).
    p: mapping level -> weight on that level's local-time estimate.
    include_occupation: discount by the accumulated weighted occupation.
    """

    events: tuple = (EXIT_UP,)
    q_weight: float = 0.0
    p: dict = field(default_factory=dict)
    include_occupation: bool = False


@dataclass(frozen=True)
class EstimateResult:
    mean: float
    stderr: float
    n_total: int
    n_selected: int

    def within(self, target: float, nsigma: float = 3.0) -> bool:
        return abs(self.mean - target) <= nsigma * self.stderr


def empirical_transform(ens: McEnsemble, spec: TransformSpec) -> EstimateResult:
    """Sample mean and standard error of the selected-event functional."""
    if ens.n_paths < 100:
        raise EstimationError("need at least 100 records")
    sel = ens.mask(spec.events)
    if not sel.any():
        raise EstimationError(f"no paths with exit kind in {spec.events}")
    expo = np.zeros(ens.n_paths)
    if spec.q_weight:
        expo -= spec.q_weight * ens.exit_time
    for a, p in spec.p.items():
        if p:
            expo -= p * ens.local_time[:, ens.level_index(a)]
    if spec.include_occupation:
        expo -= ens.weighted_occ
    vals = np.where(sel, np.exp(expo), 0.0)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(ens.n_paths))
    return EstimateResult(mean=mean, stderr=stderr, n_total=ens.n_paths,
                          n_selected=int(sel.sum()))


@dataclass(frozen=True)
class RichardsonReport:
    """First-order window-bias diagnostic from two seed-shared runs."""

    level: float
    mean_coarse: float
    mean_fine: float
    extrapolated: float
    bias_estimate: float   # estimated bias of the coarse-window mean
    stderr: float          # paired standard error of the extrapolated mean
    flagged: bool          # |bias| exceeds the paired standard error


def richardson_epsilon(coarse: McEnsemble, fine: McEnsemble,
                       level: float, events=None) -> RichardsonReport:
    """Extrapolate the local-time mean at ``level`` from runs at eps, eps/2.

    Both ensembles must share seed, backend and every config field except
    epsilon_lt (fine at half the coarse window), so paths are identical and
    the difference is purely the estimator window.
    """
    cc, cf = coarse.config, fine.config
    if replace(cc, epsilon_lt=0.0) != replace(cf, epsilon_lt=0.0):
        raise ComparabilityError("runs differ beyond epsilon_lt")
    if coarse.backend != fine.backend:
        raise ComparabilityError("runs used different backends")
    if abs(cf.epsilon_lt - 0.5 * cc.epsilon_lt) > 1e-12 * cc.epsilon_lt:
        raise ComparabilityError(
            f"fine window {cf.epsilon_lt} is not half of {cc.epsilon_lt}"
        )
    if coarse.n_paths != fine.n_paths:
        raise ComparabilityError("path counts differ")

    jc = coarse.level_index(level)
    jf = fine.level_index(level)
    lc = coarse.local_time[:, jc]
    lf = fine.local_time[:, jf]
    if events is not None:
        sel = coarse.mask(events)
        if not np.array_equal(sel, fine.mask(events)):
            raise ComparabilityError("event sets differ between runs")
        lc, lf = lc[sel], lf[sel]
        if lc.size < 100:
            raise EstimationError("fewer than 100 selected records")
    extrap_samples = 2.0 * lf - lc
    mean_c = float(lc.mean())
    mean_f = float(lf.mean())
    extrap = float(extrap_samples.mean())
    stderr = float(extrap_samples.std(ddof=1) / math.sqrt(lc.size))
    bias = 2.0 * (mean_c - mean_f)
    return RichardsonReport(level=level, mean_coarse=mean_c, mean_fine=mean_f,
                            extrapolated=extrap, bias_estimate=bias,
                            stderr=stderr, flagged=abs(bias) > stderr)
