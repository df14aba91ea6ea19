"""Spectrally negative Levy process models and their Laplace exponents.

A process is parameterized by a Gaussian coefficient ``sigma``, a linear
coefficient ``gamma`` and an optional jump component.  The only jump family
shipped is the compound Poisson process with exponentially distributed
(downward) jumps, which keeps the Laplace exponent rational:

    psi(theta) = sigma^2 theta^2 / 2 + gamma theta + rate * (rho/(rho+theta) - 1)

with ``rho = 1/mean_jump``.  The jump part has finite activity, so no
small-jump compensation is applied: ``gamma`` is the true linear coefficient
of the process (drift convention documented here once and used everywhere).

``phi_inverse`` computes the right inverse Phi(q), the largest root of
psi(s) = q, together with Phi'(q) = 1/psi'(Phi(q)).  The convention
Phi'(0) = inf when psi'(0) = 0 is represented by ``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, SolverError

__all__ = [
    "CompoundPoissonExp",
    "LevyModel",
    "PhiSolve",
    "laplace_exponent",
    "phi_inverse",
]


@dataclass(frozen=True)
class CompoundPoissonExp:
    """Compound Poisson jumps: arrivals at ``rate``, sizes Exp(1/mean_jump) downward."""

    rate: float
    mean_jump: float

    def __post_init__(self):
        if self.rate <= 0.0:
            raise DomainError(f"jump rate must be positive, got {self.rate}")
        if self.mean_jump <= 0.0:
            raise DomainError(f"mean jump size must be positive, got {self.mean_jump}")

    @property
    def rho(self) -> float:
        """Rate of the exponential jump-size distribution."""
        return 1.0 / self.mean_jump


@dataclass(frozen=True)
class LevyModel:
    """Parameters of a spectrally negative Levy process.

    Restrictions enforced here:
      * sigma >= 0, and sigma > 0 when there are no jumps (otherwise the
        process degenerates to a deterministic drift);
      * with sigma = 0 the drift must be positive, else the process is the
        negative of a subordinator, which is excluded.
    """

    sigma: float
    gamma: float = 0.0
    jumps: CompoundPoissonExp | None = None

    def __post_init__(self):
        if self.sigma < 0.0:
            raise DomainError(f"sigma must be nonnegative, got {self.sigma}")
        if self.jumps is None and self.sigma == 0.0:
            raise DomainError("a jump-free model needs sigma > 0")
        if self.sigma == 0.0 and self.gamma <= 0.0:
            raise DomainError(
                "sigma = 0 with nonpositive drift is the negative of a subordinator"
            )

    @property
    def has_unbounded_variation(self) -> bool:
        """True when W(0) = 0; required by every local-time law."""
        return self.sigma > 0.0

    def require_unbounded_variation(self):
        if not self.has_unbounded_variation:
            raise DomainError(
                "local-time laws need the unbounded-variation case sigma > 0"
            )

    def psi(self, theta):
        """Laplace exponent psi(theta) for real theta >= 0 (scalar)."""
        if theta < 0.0:
            raise DomainError(f"psi is defined for theta >= 0, got {theta}")
        return self._psi_unchecked(theta)

    def _psi_unchecked(self, s):
        val = 0.5 * self.sigma**2 * s * s + self.gamma * s
        if self.jumps is not None:
            rho = self.jumps.rho
            val += self.jumps.rate * (rho / (rho + s) - 1.0)
        return val

    def psi_complex(self, s):
        """psi evaluated on complex (numpy) arguments; used by contour inversion."""
        val = 0.5 * self.sigma**2 * s * s + self.gamma * s
        if self.jumps is not None:
            rho = self.jumps.rho
            val = val + self.jumps.rate * (rho / (rho + s) - 1.0)
        return val

    def psi_prime(self, s):
        val = self.sigma**2 * s + self.gamma
        if self.jumps is not None:
            rho = self.jumps.rho
            val -= self.jumps.rate * rho / (rho + s) ** 2
        return val

    def psi_second(self, s):
        val = self.sigma**2
        if self.jumps is not None:
            rho = self.jumps.rho
            val += 2.0 * self.jumps.rate * rho / (rho + s) ** 3
        return val

    def to_dict(self) -> dict:
        """Flat key/value form used by the CLI model files."""
        d = {"sigma": self.sigma, "gamma": self.gamma}
        if self.jumps is None:
            d["jump_kind"] = "none"
        else:
            d["jump_kind"] = "cpexp"
            d["jump_rate"] = self.jumps.rate
            d["jump_mean"] = self.jumps.mean_jump
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LevyModel":
        kind = str(d.get("jump_kind", "none")).lower()
        if kind in ("none", ""):
            jumps = None
        elif kind == "cpexp":
            try:
                jumps = CompoundPoissonExp(
                    rate=float(d["jump_rate"]), mean_jump=float(d["jump_mean"])
                )
            except KeyError as exc:
                raise DomainError(f"missing model key {exc} for jump_kind=cpexp")
        else:
            raise DomainError(f"unknown jump_kind {kind!r}")
        return cls(
            sigma=float(d.get("sigma", 0.0)),
            gamma=float(d.get("gamma", 0.0)),
            jumps=jumps,
        )


@dataclass(frozen=True)
class PhiSolve:
    """Solution record for the right inverse of the Laplace exponent."""

    q: float
    phi: float
    phi_prime: float  # math.inf exactly when q = 0 and psi'(0) = 0
    residual: float


def laplace_exponent(model: LevyModel, theta: float) -> float:
    """psi(theta) = sigma^2 theta^2/2 + gamma theta + jump term, theta >= 0."""
    return model.psi(theta)


def _argmin_psi(model: LevyModel) -> float:
    """Root of psi'(s) = 0 when psi'(0) < 0 (psi' is increasing)."""
    lo, hi = 0.0, 1.0
    while model.psi_prime(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e18:
            raise SolverError("psi' has no sign change up to 1e18", bracket=(lo, hi))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if model.psi_prime(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return hi


def phi_inverse(model: LevyModel, q: float, tol: float = 1e-12) -> PhiSolve:
    """Largest root of psi(s) = q by bracketing plus safeguarded Newton.

    psi is strictly convex with psi(s) -> inf, so on [s*, inf) (s* the argmin
    of psi) the root is unique and Newton from the right bracket end converges
    monotonically; bisection safeguards every step.  The residual satisfies
    |psi(Phi(q)) - q| <= tol * max(1, q).
    """
    if q < 0.0:
        raise DomainError(f"phi_inverse needs q >= 0, got {q}")
    if tol <= 0.0:
        raise DomainError(f"tol must be positive, got {tol}")

    d0 = model.psi_prime(0.0)
    if q == 0.0 and d0 >= 0.0:
        # psi is nonnegative and increasing on [0, inf): the largest root is 0.
        phi_prime = (1.0 / d0) if d0 > 0.0 else math.inf
        return PhiSolve(q=0.0, phi=0.0, phi_prime=phi_prime, residual=0.0)

    lo = _argmin_psi(model) if d0 < 0.0 else 0.0
    hi = max(lo, 1.0)
    while model._psi_unchecked(hi) <= q:
        hi = 2.0 * hi + 1.0
        if hi > 1e18:
            raise SolverError("failed to bracket psi(s) = q", bracket=(lo, hi))

    scale = max(1.0, abs(q))
    s = hi
    for _ in range(200):
        f = model._psi_unchecked(s) - q
        if abs(f) <= tol * scale:
            break
        if f > 0.0:
            hi = s
        else:
            lo = s
        df = model.psi_prime(s)
        step_ok = df > 0.0
        if step_ok:
            s_new = s - f / df
            step_ok = lo < s_new < hi
        if not step_ok:
            s_new = 0.5 * (lo + hi)
        if s_new == s:
            break
        s = s_new
    else:
        raise SolverError(
            f"phi_inverse did not converge for q={q}", bracket=(lo, hi)
        )

    residual = model._psi_unchecked(s) - q
    if abs(residual) > tol * scale:
        raise SolverError(
            f"phi_inverse residual {residual} above tolerance for q={q}",
            bracket=(lo, hi),
        )
    dphi = model.psi_prime(s)
    phi_prime = 1.0 / dphi if dphi > 0.0 else math.inf
    return PhiSolve(q=q, phi=s, phi_prime=phi_prime, residual=residual)
