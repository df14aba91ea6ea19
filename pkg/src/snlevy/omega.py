"""Weighted-occupation scale functions as Volterra integral equations.

For a locally bounded weight function w(.) >= 0 the functions Ww and Zw are
the unique locally bounded solutions of the second-kind Volterra equations

    Ww(x, y) = W(x - y) + int_y^x W(x - z) w(z) Ww(z, y) dz,
    Zw(x, y) = 1        + int_y^x W(x - z) w(z) Zw(z, y) dz,

with W the kernel scale function (W(q0) of the model; q0 = 0 unless a base
rate is folded into the kernel instead of the weight).  Because W(0) = 0 in
the unbounded-variation case, marching the product-trapezoid discretization
forward in x is fully explicit and second-order accurate.

Every weight descriptor shipped here (constant, step, delta approximation and
sums of those) is piecewise constant, so the quadrature uses exact cell
averages of the weight rather than point samples: a spike of width 2*eps is
integrated exactly no matter how it straddles the mesh.  The mesh is forced
through every weight breakpoint and every query point.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import DiscretizationWarning, DomainError, NumericError
from .model import LevyModel
from .scale import ScaleContext

__all__ = [
    "WeightFunction",
    "OmegaGrid",
    "ExitLaws",
    "build_mesh",
    "solve_w_omega",
    "solve_z_omega",
    "solve_omega",
    "omega_exit_laws",
    "omega_resolvent",
    "dump_grid_csv",
]


class WeightFunction:
    """Nonnegative piecewise-constant weight on the real line.

    Stored canonically as sorted breakpoints b_1 < ... < b_m and m+1 heights;
    the weight equals heights[k] on [b_k, b_(k+1)) (right continuous).  The
    constructors cover the descriptor union: constant, step, delta
    approximation (p/(2 eps) on [a-eps, a+eps]) and sums.
    """

    def __init__(self, breaks, heights, descriptor=None):
        self.breaks = np.asarray(breaks, dtype=np.float64)
        self.heights = np.asarray(heights, dtype=np.float64)
        if self.breaks.ndim != 1 or self.heights.shape != (self.breaks.size + 1,):
            raise DomainError("need m sorted breaks and m+1 heights")
        if self.breaks.size and np.any(np.diff(self.breaks) <= 0.0):
            raise DomainError("breakpoints must be strictly increasing")
        if np.any(~np.isfinite(self.heights)) or np.any(self.heights < 0.0):
            raise DomainError("weight heights must be finite and nonnegative")
        self.descriptor = descriptor or self._auto_descriptor()

    def _auto_descriptor(self) -> str:
        if self.breaks.size == 0:
            return f"const:{self.heights[0]:g}"
        return ("step:" + ",".join(f"{b:g}" for b in self.breaks) + "|" +
                ",".join(f"{h:g}" for h in self.heights))

    @classmethod
    def constant(cls, q: float) -> "WeightFunction":
        return cls([], [q], f"const:{q:g}")

    @classmethod
    def step(cls, breaks, heights) -> "WeightFunction":
        return cls(breaks, heights)

    @classmethod
    def delta_approx(cls, a: float, p: float, eps: float) -> "WeightFunction":
        """(p / 2 eps) on [a - eps, a + eps], zero elsewhere."""
        if eps <= 0.0:
            raise DomainError(f"delta width eps must be positive, got {eps}")
        if p < 0.0:
            raise DomainError(f"delta mass p must be nonnegative, got {p}")
        return cls([a - eps, a + eps], [0.0, p / (2.0 * eps), 0.0],
                   f"delta:{a:g},{p:g},{eps:g}")

    def __add__(self, other: "WeightFunction") -> "WeightFunction":
        breaks = np.unique(np.concatenate([self.breaks, other.breaks]))
        mids = self._cell_mids(breaks)
        heights = np.array([self(x) + other(x) for x in mids])
        return WeightFunction(breaks, heights,
                              f"{self.descriptor}+{other.descriptor}")

    @staticmethod
    def _cell_mids(breaks):
        if breaks.size == 0:
            return np.array([0.0])
        inner = 0.5 * (breaks[1:] + breaks[:-1])
        return np.concatenate([[breaks[0] - 1.0], inner, [breaks[-1] + 1.0]])

    def __call__(self, x: float) -> float:
        k = int(np.searchsorted(self.breaks, x, side="right"))
        return float(self.heights[k])

    def cell_average(self, z0: float, z1: float) -> float:
        """Exact mean of the weight over [z0, z1]."""
        if z1 <= z0:
            raise DomainError("cell must have positive width")
        pts = np.concatenate([[z0], self.breaks[(self.breaks > z0)
                                                & (self.breaks < z1)], [z1]])
        vals = np.array([self(0.5 * (u + v)) for u, v in zip(pts, pts[1:])])
        return float(np.dot(np.diff(pts), vals) / (z1 - z0))

    def sup(self) -> float:
        return float(np.max(self.heights))

    def __repr__(self):
        return f"WeightFunction({self.descriptor})"


def build_mesh(c: float, b: float, h: float, extra=()) -> np.ndarray:
    """Uniform mesh of step h on [c, b] (h must divide b - c), refined by
    inserting the extra points exactly."""
    if not b > c:
        raise DomainError(f"need c < b, got c={c}, b={b}")
    if h <= 0.0:
        raise DomainError(f"step h must be positive, got {h}")
    n = round((b - c) / h)
    if n < 1 or abs(n * h - (b - c)) > 1e-9 * max(1.0, b - c):
        raise DomainError(f"h={h} does not divide b-c={b - c}")
    base = c + h * np.arange(n + 1)
    base[-1] = b
    tol = 1e-12 * max(1.0, b - c)
    extra = np.unique([float(p) for p in extra if c < p < b])
    if extra.size:
        # keep uniform nodes (and the endpoints) when an extra point ties one
        near = np.min(np.abs(extra[:, None] - base[None, :]), axis=1) <= tol
        keep = extra[~near]
        if keep.size:
            keep = keep[np.concatenate([[True], np.diff(keep) > tol])]
            base = np.sort(np.concatenate([base, keep]))
    return base


@dataclass
class OmegaGrid:
    """Solved Volterra grid.

    wvals[i, t] holds Ww(x_i, x_(columns[t])) and zvals[i] holds Zw(x_i, c).
    Values off the solved columns are not interpolated: query points must be
    mesh nodes (they are inserted automatically when passed to the solvers).
    """

    mesh: np.ndarray
    columns: np.ndarray | None
    wvals: np.ndarray | None
    zvals: np.ndarray | None
    weight: WeightFunction
    h: float
    base_model: LevyModel
    base_q: float
    diagnostics: list = field(default_factory=list)

    def _node(self, v: float) -> int:
        i = int(np.searchsorted(self.mesh, v))
        for k in (i - 1, i, i + 1):
            if 0 <= k < self.mesh.size and abs(self.mesh[k] - v) <= 1e-9 * max(
                    1.0, self.mesh[-1] - self.mesh[0]):
                return k
        raise DomainError(f"{v} is not a mesh node; pass it via points=")

    def _col(self, y: float) -> int:
        j = self._node(y)
        if self.columns is None or self.wvals is None:
            raise DomainError("no W columns solved on this grid")
        hits = np.nonzero(self.columns == j)[0]
        if hits.size == 0:
            raise DomainError(f"column y={y} was not solved; pass columns=")
        return int(hits[0])

    def w(self, x: float, y: float) -> float:
        """Ww(x, y) at mesh nodes; 0 for x <= y."""
        if x <= y:
            return 0.0
        return float(self.wvals[self._node(x), self._col(y)])

    def z(self, x: float) -> float:
        """Zw(x, c) at mesh nodes; 1 for x <= c."""
        if self.zvals is None:
            raise DomainError("Z was not solved on this grid")
        if x <= self.mesh[0]:
            return 1.0
        return float(self.zvals[self._node(x)])

    @property
    def c(self) -> float:
        return float(self.mesh[0])

    @property
    def b(self) -> float:
        return float(self.mesh[-1])


def _kernel_matrix(ctx: ScaleContext, mesh: np.ndarray) -> np.ndarray:
    diffs = mesh[:, None] - mesh[None, :]
    K = np.zeros_like(diffs)
    pos = diffs > 0.0
    if ctx.method == "closed:brownian":
        m = ctx.model
        s2 = m.sigma**2
        d = diffs[pos]
        u = ctx._D * d / s2
        sinhc = np.sinh(np.maximum(u, 1e-8)) / np.maximum(u, 1e-8)
        sinhc[u < 1e-5] = 1.0 + u[u < 1e-5] ** 2 / 6.0
        if np.any(u > 690.0) or np.any(np.abs(m.gamma * d / s2) > 690.0):
            raise NumericError("scale kernel overflows on this mesh span")
        K[pos] = (2.0 * d / s2) * np.exp(-m.gamma * d / s2) * sinhc
    elif ctx.method == "closed:cpexp":
        d = diffs[pos]
        if np.max(ctx._roots[0] * d, initial=0.0) > 690.0:
            raise NumericError("scale kernel overflows on this mesh span")
        K[pos] = np.exp(np.outer(d, ctx._roots)) @ ctx._coefs
    else:
        d = diffs[pos]
        vals = np.zeros_like(d)
        order = np.argsort(d)
        vals[order] = ctx._w_array(d[order])
        K[pos] = vals
    return K


def _solve(model: LevyModel, wf: WeightFunction, c: float, b: float, h: float,
           base_q: float, points, columns, want_w: bool, want_z: bool,
           backend: str | None = None) -> OmegaGrid:
    model.require_unbounded_variation()
    pts = list(points) + list(wf.breaks)
    if columns not in (None, "all"):
        pts += list(columns)
    mesh = build_mesh(c, b, h, pts)
    ctx = ScaleContext(model, base_q)
    K = _kernel_matrix(ctx, mesh)

    dz = np.diff(mesh)
    wcell = np.array([wf.cell_average(mesh[k], mesh[k + 1])
                      for k in range(dz.size)])
    mass = wcell * dz
    g_node = np.zeros(mesh.size)
    g_node[:-1] += 0.5 * mass
    g_node[1:] += 0.5 * mass
    half0 = np.zeros(mesh.size)
    half0[:-1] = 0.5 * mass

    diagnostics = []
    if h * wf.sup() > 1.0:
        msg = (f"mesh step h={h} is large against sup(omega)={wf.sup():g}; "
               "the march may be under-resolved")
        diagnostics.append(msg)
        warnings.warn(msg, DiscretizationWarning, stacklevel=3)

    volterra, _, _ = _backend.get_kernels(backend)
    grid = OmegaGrid(mesh=mesh, columns=None, wvals=None, zvals=None,
                     weight=wf, h=h, base_model=model, base_q=base_q,
                     diagnostics=diagnostics)
    if want_w:
        if columns in (None, "all"):
            cols = np.arange(mesh.size, dtype=np.int64)
        else:
            tmp = OmegaGrid(mesh=mesh, columns=None, wvals=None, zvals=None,
                            weight=wf, h=h, base_model=model, base_q=base_q)
            cols = np.unique(np.array([tmp._node(v) for v in columns],
                                      dtype=np.int64))
        grid.wvals = volterra(K, g_node, half0, cols, False)
        grid.columns = cols
    if want_z:
        z = volterra(K, g_node, half0, np.array([0], dtype=np.int64), True)
        grid.zvals = z[:, 0]
    return grid


def solve_w_omega(model: LevyModel, omega: WeightFunction, c: float, b: float,
                  h: float, *, base_q: float = 0.0, points=(), columns=None,
                  backend: str | None = None) -> OmegaGrid:
    """Solve the W-type Volterra equation; all columns unless given."""
    return _solve(model, omega, c, b, h, base_q, points, columns,
                  want_w=True, want_z=False, backend=backend)


def solve_z_omega(model: LevyModel, omega: WeightFunction, c: float, b: float,
                  h: float, *, base_q: float = 0.0, points=(),
                  backend: str | None = None) -> OmegaGrid:
    """Solve the Z-type Volterra equation along the column y = c."""
    return _solve(model, omega, c, b, h, base_q, points, None,
                  want_w=False, want_z=True, backend=backend)


def solve_omega(model: LevyModel, omega: WeightFunction, c: float, b: float,
                h: float, *, base_q: float = 0.0, points=(), columns=None,
                backend: str | None = None) -> OmegaGrid:
    """Solve both systems on one mesh (W columns plus the Z column at c)."""
    return _solve(model, omega, c, b, h, base_q, points, columns,
                  want_w=True, want_z=True, backend=backend)


@dataclass(frozen=True)
class ExitLaws:
    up: float
    down: float


def omega_exit_laws(grid: OmegaGrid, x: float) -> ExitLaws:
    """Occupation-weighted two-sided exit transforms from x in [c, b]:
    up = Ww(x,c)/Ww(b,c) and down = Zw(x,c) - up * Zw(b,c)."""
    c, b = grid.c, grid.b
    if not (c <= x <= b):
        raise DomainError(f"x={x} outside [{c}, {b}]")
    den = grid.w(b, c)
    if den <= 0.0:
        raise DomainError("Ww(b, c) = 0: degenerate interval")
    up = grid.w(x, c) / den
    down = grid.z(x) - up * grid.z(b)
    return ExitLaws(up=up, down=down)


def omega_resolvent(grid: OmegaGrid, x: float, y: float) -> float:
    """Occupation-weighted resolvent density
    (Ww(x,c)/Ww(b,c)) Ww(b,y) - Ww(x,y) for x, y in (c, b)."""
    c, b = grid.c, grid.b
    if not (c < x < b) or not (c < y < b):
        raise DomainError(f"x={x}, y={y} must lie inside ({c}, {b})")
    den = grid.w(b, c)
    if den <= 0.0:
        raise DomainError("Ww(b, c) = 0: degenerate interval")
    val = (grid.w(x, c) / den) * grid.w(b, y) - grid.w(x, y)
    return max(val, 0.0)


def dump_grid_csv(grid: OmegaGrid, path: str):
    """CSV of (x_i, x_j, Ww(x_i, x_j)) triples with a provenance header."""
    if grid.wvals is None or grid.columns is None:
        raise DomainError("no W table on this grid")
    with open(path, "w") as f:
        f.write(f"# model={json.dumps(grid.base_model.to_dict())}\n")
        f.write(f"# omega={grid.weight.descriptor} base_q={grid.base_q:g} "
                f"h={grid.h:g}\n")
        f.write("x,y,w_omega\n")
        for t, j in enumerate(grid.columns):
            y = grid.mesh[j]
            for i in range(j, grid.mesh.size):
                f.write(f"{grid.mesh[i]:.12g},{y:.12g},"
                        f"{grid.wvals[i, t]:.12g}\n")
