"""Command-line front end.

Subcommands: scale (tabulate W/Z/dWdq), omega (solve and dump a Volterra
grid), law (evaluate any corridor law by id), loopsoup (both routes of the
loop-soup functional), mc-verify (Monte Carlo check of a law), conformance
(full gate table).  Model files are flat JSON with keys sigma, gamma,
jump_kind ('none' or 'cpexp'), jump_rate, jump_mean; remaining parameters are
key=value arguments.

Exit codes: 0 success, 1 computation error, 2 argument/spec error,
3 conformance failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import conformance, laws, mc
from .errors import SnlevyError
from .genscale import LevelWeights
from .laws import Corridor
from .model import LevyModel
from .omega import WeightFunction, dump_grid_csv, solve_omega
from .permanental import (
    PotentialKernel,
    logderiv_identity_check,
    loop_soup_routes,
    permanental_laplace,
    potential_density,
    tilted_lt_transform,
)
from .scale import InversionConfig, ScaleContext, scale_table


class CliError(Exception):
    """Bad usage or inputs; maps to exit code 2."""


def _load_model(path: str) -> LevyModel:
    try:
        with open(path) as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read model file {path}: {exc}")
    return LevyModel.from_dict(data)


def _parse_kv(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise CliError(f"expected key=value, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _fget(kv: dict, key: str, default=None) -> float | None:
    if key not in kv:
        if default is None:
            return None
        return float(default)
    return float(kv.pop(key))


def _flist(kv: dict, key: str):
    if key not in kv:
        return None
    return [float(v) for v in kv.pop(key).split(",") if v]


def _parse_omega(text: str) -> WeightFunction:
    """'const:Q' | 'step:b1,..|h0,..' | 'delta:a,p,eps', summable with '+'."""
    total = None
    for part in text.split("+"):
        kind, _, rest = part.partition(":")
        kind = kind.strip().lower()
        if kind == "const":
            wf = WeightFunction.constant(float(rest))
        elif kind == "step":
            braw, _, hraw = rest.partition("|")
            wf = WeightFunction.step([float(v) for v in braw.split(",") if v],
                                     [float(v) for v in hraw.split(",") if v])
        elif kind == "delta":
            a, p, eps = (float(v) for v in rest.split(","))
            wf = WeightFunction.delta_approx(a, p, eps)
        else:
            raise CliError(f"unknown omega descriptor {part!r}")
        total = wf if total is None else total + wf
    if total is None:
        raise CliError("empty omega descriptor")
    return total


def _corridor(kv: dict, need_x: bool = False) -> Corridor:
    a = _fget(kv, "a")
    b = _fget(kv, "b")
    c = _fget(kv, "c")
    if a is None or b is None or c is None:
        raise CliError("corridor laws need a=, b=, c=")
    x = _fget(kv, "x")
    if need_x and x is None:
        raise CliError("this law needs x=")
    q = _fget(kv, "q", 0.0)
    p = _fget(kv, "p", 0.0)
    levels = _flist(kv, "levels")
    weights = _flist(kv, "weights")
    lw = None
    if levels is not None:
        if weights is None or len(weights) != len(levels):
            raise CliError("levels= needs a matching weights= list")
        lw = LevelWeights(levels=tuple(levels), weights=tuple(weights), q=q)
    return Corridor(c=c, b=b, a=a, x=x, q=q, p=p, levels=lw)


def _law_table():
    """law id -> (callable(model, kv) -> dict of outputs)."""

    def simple(fn, need_x=False, extra=()):
        def run(model, kv):
            cor = _corridor(kv, need_x)
            args = [float(kv.pop(k)) for k in extra]
            return {"value": fn(model, cor, *args)}
        return run

    def run_atom(model, kv):
        law = laws.lt_atom_exp(model, _corridor(kv, need_x=True))
        return {"atom": law.atom, "rate": law.rate}

    def run_joint_exp(model, kv):
        y = _fget(kv, "y")
        if y is None:
            raise CliError("lt_exp_joint needs y=")
        law = laws.lt_exp_joint(model, _corridor(kv), y)
        return {"space_density": law.space_density, "time_rate": law.time_rate}

    def run_limit(which):
        def run(model, kv):
            q = _fget(kv, "q", 0.0)
            p = _fget(kv, "p", 0.0)
            if which == "up":
                return {"value": laws.lt_limit_up(model, q, p,
                                                  _fget(kv, "a"), _fget(kv, "b"))}
            if which == "down":
                return {"value": laws.lt_limit_down(model, q, p,
                                                    _fget(kv, "c"), _fget(kv, "a"))}
            return {"value": laws.lt_limit_exp(model, q, p)}
        return run

    def run_invlt(model, kv):
        t = _fget(kv, "t")
        if t is None:
            raise CliError("inverse-local-time laws need t=")
        cor = _corridor(kv)
        return {"value": laws.inv_lt_survival(model, cor, t),
                "rate": laws.inv_lt_rate(model, cor)}

    def run_invlt_joint(model, kv):
        t = _fget(kv, "t")
        cor = _corridor(kv)
        if t is None or cor.levels is None:
            raise CliError("needs t=, levels=, weights=")
        return {"value": laws.inv_lt_joint_transform(model, cor, t)}

    def run_potential(model, kv):
        q, b, c = _fget(kv, "q", 0.0), _fget(kv, "b"), _fget(kv, "c")
        x, y = _fget(kv, "x"), _fget(kv, "y")
        return {"value": potential_density(model, q, b, c, x, y)}

    def run_permanental(model, kv):
        q, b, c = _fget(kv, "q", 0.0), _fget(kv, "b"), _fget(kv, "c")
        levels = _flist(kv, "levels")
        weights = _flist(kv, "weights")
        beta = _fget(kv, "beta", 2.0)
        kernel = PotentialKernel(model, q, b, c, levels=levels)
        return {"value": permanental_laplace(kernel, weights, beta=beta)}

    def run_tilted(model, kv):
        q, b, c = _fget(kv, "q", 0.0), _fget(kv, "b"), _fget(kv, "c")
        a = _fget(kv, "a")
        levels = _flist(kv, "levels")
        weights = _flist(kv, "weights")
        kernel = PotentialKernel(model, q, b, c, levels=levels)
        return {"value": tilted_lt_transform(kernel, a, weights)}

    def run_logderiv(model, kv):
        rep = logderiv_identity_check(model, _fget(kv, "q", 0.0),
                                      _fget(kv, "b"), _fget(kv, "c"))
        return {"lhs": rep.lhs, "rhs": rep.rhs, "gap": rep.gap}

    def run_prefactor(model, kv):
        return {"value": laws.exp_density_prefactor(
            model, _fget(kv, "q", 0.0), _fget(kv, "a"), _fget(kv, "b"),
            _fget(kv, "c"))}

    def run_resolvent(joint):
        def run(model, kv):
            y = _fget(kv, "y")
            if y is None:
                raise CliError("resolvent laws need y=")
            cor = _corridor(kv)
            fn = laws.joint_lt_resolvent if joint else laws.lt_resolvent
            return {"value": fn(model, cor, y)}
        return run

    return {
        "lt_exit_up": simple(laws.lt_exit_up),
        "lt_exit_down": simple(laws.lt_exit_down),
        "lt_resolvent": run_resolvent(False),
        "lt_atom_exp": run_atom,
        "hitting_transform": simple(laws.hitting_transform, need_x=True),
        "lt_exp_killed_transform": simple(laws.lt_exp_killed_transform),
        "lt_exp_joint": run_joint_exp,
        "exp_density_prefactor": run_prefactor,
        "lt_limit_up": run_limit("up"),
        "lt_limit_down": run_limit("down"),
        "lt_limit_exp": run_limit("exp"),
        "joint_lt_exit_up": simple(laws.joint_lt_exit_up),
        "joint_lt_exit_down": simple(laws.joint_lt_exit_down),
        "joint_lt_resolvent": run_resolvent(True),
        "inv_lt_survival": run_invlt,
        "inv_lt_joint_transform": run_invlt_joint,
        "potential_density": run_potential,
        "permanental_laplace": run_permanental,
        "tilted_lt_transform": run_tilted,
        "logderiv_check": run_logderiv,
    }


def _emit(rows, header, fmt: str, out_path: str | None):
    """rows: list of dicts sharing the header key order."""
    if fmt == "json":
        text = json.dumps(rows if len(rows) != 1 else rows[0], indent=2,
                          sort_keys=True) + "\n"
    else:
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_fmt_cell(row[k]) for k in header))
        text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _cmd_scale(args) -> int:
    model = _load_model(args.model)
    kv = _parse_kv(args.params)
    q = _fget(kv, "q", 0.0)
    xs_spec = kv.pop("x", "0:2:0.1")
    if ":" in xs_spec:
        start, stop, step = (float(v) for v in xs_spec.split(":"))
        xs = np.arange(start, stop + 0.5 * step, step)
    else:
        xs = [float(v) for v in xs_spec.split(",")]
    if kv:
        raise CliError(f"unknown parameters {sorted(kv)}")
    ctx = ScaleContext(model, q, method=args.method,
                       inversion=InversionConfig())
    rows = [{"x": x, "W": w, "Z": z, "dWdq": d}
            for x, w, z, d in scale_table(ctx, xs)]
    _emit(rows, ["x", "W", "Z", "dWdq"], args.format, args.out)
    return 0


def _cmd_omega(args) -> int:
    model = _load_model(args.model)
    kv = _parse_kv(args.params)
    c = _fget(kv, "c", 0.0)
    b = _fget(kv, "b")
    h = _fget(kv, "h", 1e-2)
    base_q = _fget(kv, "base_q", 0.0)
    if b is None:
        raise CliError("omega needs b= (and optionally c=, h=)")
    if kv:
        raise CliError(f"unknown parameters {sorted(kv)}")
    wf = _parse_omega(args.omega)
    grid = solve_omega(model, wf, c, b, h, base_q=base_q)
    if args.out:
        dump_grid_csv(grid, args.out)
    else:
        laws_at = grid.mesh[len(grid.mesh) // 2]
        sys.stdout.write(
            f"solved {grid.mesh.size} nodes on [{c}, {b}], h={h}; "
            f"Ww(b,c)={grid.w(b, c):.10g}, Zw(b,c)={grid.z(b):.10g}, "
            f"Ww(mid,c)={grid.w(laws_at, c):.10g}\n")
    return 0


def _cmd_law(args) -> int:
    table = _law_table()
    if args.list:
        sys.stdout.write("\n".join(sorted(table)) + "\n")
        return 0
    if not args.id or args.id not in table:
        raise CliError(f"unknown law id {args.id!r}; see law --list")
    if not args.model:
        raise CliError("law needs --model")
    model = _load_model(args.model)
    kv = _parse_kv(args.params)
    inputs = dict(kv)
    outputs = table[args.id](model, kv)
    if kv:
        raise CliError(f"unknown parameters {sorted(kv)}")
    row = {"law": args.id, **inputs, **outputs}
    _emit([row], list(row), args.format, args.out)
    return 0


def _cmd_loopsoup(args) -> int:
    model = _load_model(args.model)
    kv = _parse_kv(args.params)
    q, b, c = _fget(kv, "q", 0.0), _fget(kv, "b"), _fget(kv, "c")
    levels = _flist(kv, "levels")
    weights = _flist(kv, "weights")
    if b is None or c is None or not levels or not weights:
        raise CliError("loopsoup needs b=, c=, levels=, weights=")
    if kv:
        raise CliError(f"unknown parameters {sorted(kv)}")
    kernel = PotentialKernel(model, q, b, c, levels=levels)
    via_det, via_scale = loop_soup_routes(kernel, weights)
    row = {"via_determinant": via_det, "via_scale": via_scale,
           "gap": abs(via_det - via_scale)}
    _emit([row], list(row), args.format, args.out)
    return 0


def _mc_estimators():
    """law id -> fn(model, cor, kv, ens) -> list of (name, analytic, mean, se)."""

    def exit_transform(up: bool):
        def run(model, cor, kv, ens):
            analytic = (laws.lt_exit_up if up else laws.lt_exit_down)(model, cor)
            spec = mc.TransformSpec(
                events=(mc.EXIT_UP if up else mc.EXIT_DOWN,),
                p={cor.a: cor.p})
            est = mc.empirical_transform(ens, spec)
            return [("value", analytic, est.mean, est.stderr)]
        return run

    def atom_exp(model, cor, kv, ens):
        law = laws.lt_atom_exp(model, cor)
        up = ens.mask(mc.EXIT_UP)
        atom_hat = 1.0 - ens.hit[up, 0].mean()
        se_atom = math.sqrt(max(atom_hat * (1 - atom_hat), 1e-12) / up.sum())
        sel = up & ens.hit[:, 0]
        lt = ens.local_time[sel, 0]
        mean_lt = lt.mean()
        se_lt = lt.std(ddof=1) / math.sqrt(sel.sum())
        return [("atom", law.atom, atom_hat, se_atom),
                ("mean_positive_part", 1.0 / law.rate, mean_lt, se_lt)]

    def killed_transform(model, cor, kv, ens):
        analytic = laws.lt_exp_killed_transform(model, cor)
        spec = mc.TransformSpec(events=(mc.EXIT_UP, mc.EXIT_DOWN,
                                        mc.EXIT_KILLED), p={cor.a: cor.p})
        est = mc.empirical_transform(ens, spec)
        return [("value", analytic, est.mean, est.stderr)]

    def hitting(model, cor, kv, ens):
        analytic = laws.hitting_transform(model, cor)
        hit = ens.hit[:, ens.level_index(cor.a)].astype(float)
        return [("value", analytic, float(hit.mean()),
                 float(hit.std(ddof=1) / math.sqrt(ens.n_paths)))]

    def invlt(model, cor, kv, ens):
        t = float(kv["t"])
        analytic = laws.inv_lt_survival(model, cor, t)
        ok = ens.snap_ok.astype(float)
        return [("value", analytic, float(ok.mean()),
                 float(ok.std(ddof=1) / math.sqrt(ens.n_paths)))]

    def joint_up(model, cor, kv, ens):
        analytic = laws.joint_lt_exit_up(model, cor)
        p = dict(zip(cor.levels.levels, cor.levels.weights))
        est = mc.empirical_transform(
            ens, mc.TransformSpec(events=(mc.EXIT_UP,), p=p))
        return [("value", analytic, est.mean, est.stderr)]

    return {
        "lt_exit_up": exit_transform(True),
        "lt_exit_down": exit_transform(False),
        "lt_atom_exp": atom_exp,
        "lt_exp_killed_transform": killed_transform,
        "hitting_transform": hitting,
        "inv_lt_survival": invlt,
        "joint_lt_exit_up": joint_up,
    }


def _cmd_mc_verify(args) -> int:
    table = _mc_estimators()
    if args.id not in table:
        raise CliError(
            f"mc-verify supports {sorted(table)}; got {args.id!r}")
    model = _load_model(args.model)
    kv = _parse_kv(args.params)
    n_paths = int(_fget(kv, "n_paths", 20000))
    dt = _fget(kv, "dt", 1e-4)
    seed = int(_fget(kv, "seed", 0))
    eps = _fget(kv, "eps", 5e-3)
    t_max = _fget(kv, "t_max", 80.0)
    t = kv.pop("t", None)
    cor = _corridor(kv, need_x=False)
    cfg = mc.McConfig(dt=dt, n_paths=n_paths, seed=seed, epsilon_lt=eps,
                      t_max=t_max)
    levels = (list(cor.levels.levels) if cor.levels is not None else [cor.a])
    snap_at = None
    if args.id == "inv_lt_survival":
        if t is None:
            raise CliError("inv_lt_survival needs t=")
        snap_at = (cor.a, float(t))
        if cor.a not in levels:
            levels.append(cor.a)
    ens = mc.simulate_corridor(model, cor, cfg, levels=levels,
                               backend=args.backend, snap_at=snap_at)
    rows = []
    for name, analytic, mean, stderr in table[args.id](model, cor,
                                                       {"t": t}, ens):
        z = (mean - analytic) / stderr if stderr > 0 else float("nan")
        rows.append({"law": f"{args.id}.{name}", "analytic": analytic,
                     "mc_mean": mean, "mc_stderr": stderr, "z_score": z})
    _emit(rows, ["law", "analytic", "mc_mean", "mc_stderr", "z_score"],
          args.format, args.out)
    return 0


def _cmd_conformance(args) -> int:
    ok = conformance.run_all(quick=args.quick)
    return 0 if ok else 3


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="snlevy",
        description="Scale functions and local-time laws of spectrally "
                    "negative Levy processes")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, model_required=True):
        p.add_argument("--model", required=model_required,
                       help="JSON model file (sigma, gamma, jump_kind, ...)")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("params", nargs="*", metavar="key=value")

    p = sub.add_parser("scale", help="tabulate W, Z, dWdq over an x grid "
                                     "(q=, x=start:stop:step or x=list)")
    add_common(p)
    p.add_argument("--method", choices=("auto", "closed", "inversion"),
                   default="auto")
    p.set_defaults(fn=_cmd_scale)

    p = sub.add_parser("omega", help="solve a weighted-occupation grid "
                                     "(c=, b=, h=; --omega descriptor)")
    add_common(p)
    p.add_argument("--omega", required=True,
                   help="const:Q | step:breaks|heights | delta:a,p,eps, "
                        "joined with '+'")
    p.set_defaults(fn=_cmd_omega)

    p = sub.add_parser("law", help="evaluate a corridor law by id")
    p.add_argument("--id")
    p.add_argument("--list", action="store_true", help="list law ids")
    p.add_argument("--model")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("params", nargs="*", metavar="key=value")
    p.set_defaults(fn=_cmd_law)

    p = sub.add_parser("loopsoup", help="both routes of the loop-soup "
                                        "functional and their gap")
    add_common(p)
    p.set_defaults(fn=_cmd_loopsoup)

    p = sub.add_parser("mc-verify", help="Monte Carlo check of a law "
                                         "(n_paths=, dt=, seed=, eps=)")
    p.add_argument("--id", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--backend", choices=("auto", "native", "python"),
                   default=None)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("params", nargs="*", metavar="key=value")
    p.set_defaults(fn=_cmd_mc_verify)

    p = sub.add_parser("conformance", help="run all conformance gates")
    p.add_argument("--quick", action="store_true",
                   help="reduced sizes for a fast smoke run")
    p.set_defaults(fn=_cmd_conformance)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: bad inputs: {exc}", file=sys.stderr)
        return 2
    except SnlevyError as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
