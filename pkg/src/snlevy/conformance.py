"""Conformance gates: one callable per acceptance criterion.

Each gate returns a GateResult; run_all prints one pass/fail line per gate.
The CLI `conformance` subcommand and the acceptance test suite both run
these, the latter at full scale.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .genscale import (
    LevelWeights,
    gen_w,
    gen_w_det,
    gen_w_recursive,
    gen_z,
    gen_z_det,
    gen_z_recursive,
)
from .laws import (
    Corridor,
    exp_density_prefactor,
    inv_lt_rate,
    lt_atom_exp,
    lt_exit_down,
    lt_exit_up,
    lt_exp_killed_transform,
    lt_limit_down,
    lt_limit_exp,
    lt_limit_up,
)
from .mc import (
    EXIT_DOWN,
    EXIT_KILLED,
    EXIT_UP,
    McConfig,
    TransformSpec,
    empirical_transform,
    simulate_corridor,
)
from .model import CompoundPoissonExp, LevyModel
from .omega import WeightFunction, solve_omega
from .permanental import (
    PotentialKernel,
    isomorphism_check,
    logderiv_identity_check,
    loop_soup_routes,
)
from .scale import ScaleContext

__all__ = ["GateResult", "run_all", "GATES"]


@dataclass
class GateResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _families(rng):
    while True:
        yield LevyModel(sigma=1.0)
        yield LevyModel(sigma=1.0, gamma=rng.uniform(-1.5, 1.5))
        yield LevyModel(sigma=rng.uniform(0.5, 1.5),
                        gamma=rng.uniform(-1.0, 1.0),
                        jumps=CompoundPoissonExp(rate=rng.uniform(0.3, 2.0),
                                                 mean_jump=rng.uniform(0.3, 1.5)))


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def gate_three_way(n_instances: int = 200) -> GateResult:
    """Recursion, determinant and linear-system routes agree on random
    instances: 1e-10 relative for closed forms, 1e-6 through inversion."""
    t0 = time.time()
    rng = np.random.default_rng(1234)
    worst_closed = worst_inv = 0.0
    fams = ["std", "lin", "cpexp"]
    count = 0
    for k in range(n_instances * 3):
        fam = fams[k % 3]
        n = 1 + (k // 3) % 6
        q = float(rng.uniform(0.05, 2.0))
        if fam == "std":
            model, method = LevyModel(sigma=1.0), "auto"
        elif fam == "lin":
            model, method = LevyModel(sigma=1.0, gamma=float(rng.uniform(-1.5, 1.5))), "auto"
        else:
            model = LevyModel(sigma=float(rng.uniform(0.6, 1.4)),
                              gamma=float(rng.uniform(-1.0, 1.0)),
                              jumps=CompoundPoissonExp(
                                  rate=float(rng.uniform(0.3, 2.0)),
                                  mean_jump=float(rng.uniform(0.3, 1.5))))
            method = "inversion"
        ctx = ScaleContext(model, q, method=method)
        levels = np.sort(rng.uniform(0.3, 2.7, size=n))
        while np.any(np.diff(levels) < 0.05):
            levels = np.sort(rng.uniform(0.3, 2.7, size=n))
        weights = rng.uniform(0.0, 2.0, size=n)
        lw = LevelWeights(levels=tuple(levels), weights=tuple(weights), q=q)
        y = float(rng.uniform(-0.5, levels[0] - 0.05))
        x = float(rng.uniform(y, 3.2))
        vals_w = (gen_w_recursive(lw, ctx, x, y), gen_w_det(lw, ctx, x, y),
                  gen_w(lw, ctx, x, y))
        c = min(y, levels[0] - 0.1)
        vals_z = (gen_z_recursive(lw, ctx, x, c), gen_z_det(lw, ctx, x, c),
                  gen_z(lw, ctx, x, c))
        gap = max(_rel(vals_w[0], vals_w[1]), _rel(vals_w[0], vals_w[2]),
                  _rel(vals_z[0], vals_z[1]), _rel(vals_z[0], vals_z[2]))
        if fam == "cpexp":
            worst_inv = max(worst_inv, gap)
        else:
            worst_closed = max(worst_closed, gap)
        count += 1
    passed = worst_closed <= 1e-10 and worst_inv <= 1e-6
    el = time.time() - t0
    return GateResult(
        "three-way generalized-scale agreement", passed and el < 30.0,
        f"closed {worst_closed:.2e} (tol 1e-10), inversion {worst_inv:.2e} "
        f"(tol 1e-6), {count} instances", el)


def gate_volterra(hs=(4e-3, 2e-3, 1e-3), full_h: float = 1e-3) -> GateResult:
    """Constant weight reproduces the classical scale functions at O(h^2)."""
    t0 = time.time()
    model = LevyModel(sigma=1.0)
    q = 0.5
    ctx = ScaleContext(model, q)
    wf = WeightFunction.constant(q)

    grid = solve_omega(model, wf, 0.0, 2.0, full_h)
    mesh = grid.mesh
    step = max(1, mesh.size // 40)
    max_rel_w = 0.0
    for jj in range(0, mesh.size - 1, step):
        for ii in range(jj + 1, mesh.size, step):
            truth = ctx.w(mesh[ii] - mesh[jj])
            max_rel_w = max(max_rel_w, abs(grid.wvals[ii, jj] - truth) / truth)
    max_rel_z = max(abs(grid.z(x) - ctx.z(x)) / ctx.z(x) for x in mesh[1:])

    errs_w, errs_z = [], []
    for h in hs:
        g = solve_omega(model, wf, 0.0, 2.0, h, columns=[0.0])
        errs_w.append(abs(g.w(2.0, 0.0) - ctx.w(2.0)) / ctx.w(2.0))
        errs_z.append(abs(g.z(2.0) - ctx.z(2.0)) / ctx.z(2.0))
    order_w = math.log(errs_w[0] / errs_w[-1]) / math.log(hs[0] / hs[-1])
    order_z = math.log(errs_z[0] / errs_z[-1]) / math.log(hs[0] / hs[-1])

    el = time.time() - t0
    passed = (max_rel_w <= 1e-4 and max_rel_z <= 1e-4
              and order_w >= 1.9 and order_z >= 1.9 and el < 60.0)
    return GateResult(
        "Volterra conformance vs closed scale functions", passed,
        f"max rel W {max_rel_w:.2e}, Z {max_rel_z:.2e} (tol 1e-4); "
        f"orders {order_w:.2f}/{order_z:.2f} (need >= 1.9)", el)


def gate_delta_approx(eps_seq=(0.08, 0.04, 0.02), h: float = 2e-3) -> GateResult:
    """Spiked weights converge to the generalized scale functions at O(eps)."""
    t0 = time.time()
    model = LevyModel(sigma=1.0)
    q, a, p = 0.5, 1.0, 1.0
    ctx = ScaleContext(model, q)
    lw = LevelWeights(levels=(a,), weights=(p,), q=q)
    xs = [1.2, 1.5, 1.8, 2.0]
    gaps_w, gaps_z = [], []
    for eps in eps_seq:
        wf = WeightFunction.constant(q) + WeightFunction.delta_approx(a, p, eps)
        g = solve_omega(model, wf, 0.0, 2.0, h, points=xs, columns=[0.0])
        gaps_w.append(max(abs(g.w(x, 0.0) - gen_w(lw, ctx, x, 0.0)) for x in xs))
        gaps_z.append(max(abs(g.z(x) - gen_z(lw, ctx, x, 0.0)) for x in xs))
    mono = all(u > v for u, v in zip(gaps_w, gaps_w[1:])) and all(
        u > v for u, v in zip(gaps_z, gaps_z[1:]))
    ord_w = math.log(gaps_w[0] / gaps_w[-1]) / math.log(eps_seq[0] / eps_seq[-1])
    ord_z = math.log(gaps_z[0] / gaps_z[-1]) / math.log(eps_seq[0] / eps_seq[-1])
    el = time.time() - t0
    passed = mono and ord_w >= 0.9 and ord_z >= 0.9 and el < 60.0
    return GateResult(
        "delta-approximation limit to generalized scale", passed,
        f"gaps W {['%.2e' % g for g in gaps_w]}, orders {ord_w:.2f}/{ord_z:.2f} "
        f"(need >= 0.9, monotone={mono})", el)


def gate_brownian_examples(n_random: int = 50) -> GateResult:
    """Worked Brownian identities: the killed-inside density prefactor equals
    its hyperbolic form, and the drifted rate matches its sinh expression."""
    t0 = time.time()
    model = LevyModel(sigma=1.0)
    q, a, b, c = 0.5, 1.0, 2.0, 0.0
    lhs = exp_density_prefactor(model, q, a, b, c)
    rq = math.sqrt(q / 2.0)
    rhs = rq * math.sinh(rq * (b - c)) / (
        math.cosh(rq * (b - a)) * math.cosh(rq * (a - c)))
    gap1 = abs(lhs - rhs)

    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(n_random):
        mu = float(rng.uniform(0.2, 2.0) * rng.choice([-1.0, 1.0]))
        cc = float(rng.uniform(-2.0, 0.0))
        aa = cc + float(rng.uniform(0.2, 2.0))
        bb = aa + float(rng.uniform(0.2, 2.0))
        m = LevyModel(sigma=1.0, gamma=mu)
        rate = lt_atom_exp(m, Corridor(c=cc, b=bb, a=aa)).rate
        sform = (mu / 2.0) * math.sinh(mu * (bb - cc)) / (
            math.sinh(mu * (bb - aa)) * math.sinh(mu * (aa - cc)))
        worst = max(worst, _rel(rate, sform))
    el = time.time() - t0
    passed = gap1 <= 1e-9 and worst <= 1e-12 and el < 5.0
    return GateResult(
        "Brownian worked identities", passed,
        f"prefactor {lhs:.6f}, gap {gap1:.2e} (tol 1e-9); "
        f"drifted rate worst rel {worst:.2e} (tol 1e-12)", el)


def gate_isomorphism(n_instances: int = 200) -> GateResult:
    """Determinant identities tying GW to det(I + Lambda G), loop-soup dual
    routes, and the n=1 worked value ln 2."""
    t0 = time.time()
    rng = np.random.default_rng(5150)
    worst_iso = worst_loop = 0.0
    fam = _families(rng)
    for k in range(n_instances):
        model = next(fam)
        n = 1 + k % 6
        q = float(rng.uniform(0.0, 1.5))
        c = float(rng.uniform(-1.0, 0.0))
        b = c + float(rng.uniform(1.0, 3.0))
        levels = np.sort(rng.uniform(c + 0.08, b - 0.08, size=n))
        while np.any(np.diff(levels) < 0.04):
            levels = np.sort(rng.uniform(c + 0.08, b - 0.08, size=n))
        weights = rng.uniform(0.0, 2.0, size=n)
        a = float(rng.uniform(c + 0.04, b - 0.04))
        kernel = PotentialKernel(model, q, b, c, levels=levels)
        rep = isomorphism_check(kernel, a, weights)
        worst_iso = max(worst_iso, rep.abs_gap)
        via_det, via_scale = loop_soup_routes(kernel, weights)
        worst_loop = max(worst_loop, abs(via_det - via_scale))
    km = PotentialKernel(LevyModel(sigma=1.0), 0.0, 2.0, 0.0, levels=(1.0,))
    _, via_scale = loop_soup_routes(km, (1.0,))
    gap_ln2 = abs(via_scale - math.log(2.0))
    el = time.time() - t0
    passed = (worst_iso <= 1e-9 and worst_loop <= 1e-10 and gap_ln2 <= 1e-12
              and el < 10.0)
    return GateResult(
        "kernel/scale determinant identities and loop soup", passed,
        f"iso gap {worst_iso:.2e} (tol 1e-9), loop routes {worst_loop:.2e} "
        f"(tol 1e-10), ln2 gap {gap_ln2:.2e} (tol 1e-12)", el)


def gate_logderiv() -> GateResult:
    """Integrated kernel diagonal equals the logarithmic q-derivative of W."""
    t0 = time.time()
    rep0 = logderiv_identity_check(LevyModel(sigma=1.0), 0.0, 1.0, 0.0)
    gap_third = max(abs(rep0.lhs - 1.0 / 3.0), abs(rep0.rhs - 1.0 / 3.0))
    worst = rep0.gap
    cases = [
        (LevyModel(sigma=1.0), 0.5, 2.0, 0.0),
        (LevyModel(sigma=1.0, gamma=0.8), 0.7, 1.5, -0.5),
        (LevyModel(sigma=0.8, gamma=-0.3,
                   jumps=CompoundPoissonExp(rate=1.0, mean_jump=0.6)),
         0.4, 1.2, -0.4),
    ]
    for model, q, b, c in cases:
        rep = logderiv_identity_check(model, q, b, c)
        worst = max(worst, rep.gap / max(abs(rep.rhs), 1.0))
    el = time.time() - t0
    passed = gap_third <= 1e-10 and worst <= 1e-6 and el < 5.0
    return GateResult(
        "log-derivative identity for the kernel diagonal", passed,
        f"hand value gap {gap_third:.2e}, worst rel gap {worst:.2e} "
        f"(tol 1e-6)", el)


def gate_mc_suite(n_paths: int = 100_000, dt: float = 1e-4) -> GateResult:
    """Monte Carlo statistical suite against the analytic laws."""
    t0 = time.time()
    model = LevyModel(sigma=1.0)
    msgs, ok = [], True

    # (a)+(b): q=0 corridor from x=1.5
    cor0 = Corridor(c=0.0, b=2.0, a=1.0, x=1.5, q=0.0, p=1.0)
    cfg = McConfig(dt=dt, n_paths=n_paths, seed=31, epsilon_lt=5e-3,
                   t_max=80.0)
    ens0 = simulate_corridor(model, cor0, cfg)
    up = ens0.mask(EXIT_UP)
    law = lt_atom_exp(model, cor0)
    atom_hat = 1.0 - ens0.hit[up, 0].mean()
    se_atom = math.sqrt(atom_hat * (1.0 - atom_hat) / up.sum())
    za = (atom_hat - law.atom) / se_atom
    msgs.append(f"atom z={za:+.2f}")
    ok &= abs(za) <= 3.0

    hit_up = up & ens0.hit[:, 0]
    lt0 = ens0.local_time[hit_up, 0]
    se_rate = lt0.std(ddof=1) / math.sqrt(hit_up.sum())
    zr = (lt0.mean() - 1.0 / law.rate) / se_rate
    msgs.append(f"rate z={zr:+.2f}")
    ok &= abs(zr) <= 3.0

    est = empirical_transform(ens0, TransformSpec(events=(EXIT_UP,),
                                                  p={cor0.a: cor0.p}))
    target = lt_exit_up(model, cor0)
    zt = (est.mean - target) / est.stderr
    msgs.append(f"exit-up transform z={zt:+.2f}")
    ok &= abs(zt) <= 3.0

    # (c)+(d)+(e): q=0.5 corridor from a
    cor1 = Corridor(c=0.0, b=2.0, a=1.0, q=0.5)
    rate1 = inv_lt_rate(model, cor1)
    cfg1 = McConfig(dt=dt, n_paths=n_paths, seed=20250809, epsilon_lt=5e-3,
                    t_max=80.0)
    ens1 = simulate_corridor(model, cor1, cfg1)
    lt1 = ens1.local_time[:, 0]

    ks = stats.kstest(lt1, "expon", args=(0.0, 1.0 / rate1))
    msgs.append(f"KS p={ks.pvalue:.3f}")
    ok &= ks.pvalue > 0.01

    killed = ens1.mask(EXIT_KILLED)
    rho = float(np.corrcoef(ens1.exit_pos[killed], lt1[killed])[0, 1])
    bound = 3.0 / math.sqrt(killed.sum())
    msgs.append(f"indep |rho|={abs(rho):.4f}<={bound:.4f}")
    ok &= abs(rho) <= bound

    # four conditional framings on disjoint quarters (chi-square needs
    # independent estimates)
    t_med = math.log(2.0) / rate1
    quarter = ens1.n_paths // 4
    surv = math.exp(-rate1 * t_med)
    phat, ns = [], []
    for i, framing in enumerate(("up", "killed", "down", "all")):
        sl = slice(i * quarter, (i + 1) * quarter)
        k = ens1.exit_kind[sl]
        lq = lt1[sl]
        if framing == "up":
            sel = k == EXIT_UP
        elif framing == "killed":
            sel = k == EXIT_KILLED
        elif framing == "down":
            sel = k == EXIT_DOWN
        else:
            sel = np.ones(quarter, dtype=bool)
        p = float((lq[sel] > t_med).mean())
        phat.append(p)
        ns.append(int(sel.sum()))
        z = (p - surv) / math.sqrt(p * (1 - p) / sel.sum())
        msgs.append(f"invlt[{framing}] z={z:+.2f}")
        ok &= abs(z) <= 3.0
    pooled = sum(p * n for p, n in zip(phat, ns)) / sum(ns)
    chi2 = sum(n * (p - pooled) ** 2 for p, n in zip(phat, ns)) / (
        pooled * (1.0 - pooled))
    crit = stats.chi2.ppf(0.99, df=3)
    msgs.append(f"four-way chi2={chi2:.2f}<{crit:.2f}")
    ok &= chi2 < crit

    el = time.time() - t0
    return GateResult("Monte Carlo statistical suite", ok and el < 600.0,
                      "; ".join(msgs), el)


def gate_limits() -> GateResult:
    """Finite corridors converge to the wide-corridor limit transforms."""
    t0 = time.time()
    model = LevyModel(sigma=1.0)
    q, p, a, b = 0.5, 1.0, 1.0, 2.0

    target_up = lt_limit_up(model, q, p, a, b)
    gaps_up = [abs(lt_exit_up(model, Corridor(c=cc, b=b, a=a, x=a, q=q, p=p))
                   - target_up) for cc in (-10.0, -100.0, -1000.0)]

    c = 0.0
    target_dn = lt_limit_down(model, q, p, c, a)
    gaps_dn = [abs(lt_exit_down(model, Corridor(c=c, b=bb, a=a, x=a, q=q, p=p))
                   - target_dn) for bb in (10.0, 100.0, 1000.0)]

    target_eq = lt_limit_exp(model, q, p)
    gaps_eq = [abs(lt_exp_killed_transform(
        model, Corridor(c=-r, b=r, a=0.0, q=q, p=p)) - target_eq)
        for r in (10.0, 100.0, 500.0)]

    el = time.time() - t0
    dec = all(g[0] > g[-1] for g in (gaps_up, gaps_dn, gaps_eq))
    final = max(gaps_up[-1], gaps_dn[-1], gaps_eq[-1])
    passed = (dec and final <= 1e-8 and abs(target_eq - 0.5) <= 1e-12
              and el < 5.0)
    return GateResult(
        "wide-corridor limit transforms", passed,
        f"final gaps up/down/exp {gaps_up[-1]:.1e}/{gaps_dn[-1]:.1e}/"
        f"{gaps_eq[-1]:.1e} (tol 1e-8); exp limit {target_eq}", el)


GATES = {
    "three_way": gate_three_way,
    "volterra": gate_volterra,
    "delta_approx": gate_delta_approx,
    "brownian_examples": gate_brownian_examples,
    "isomorphism": gate_isomorphism,
    "logderiv": gate_logderiv,
    "mc_suite": gate_mc_suite,
    "limits": gate_limits,
}


def run_all(quick: bool = False, stream=None) -> bool:
    """Run every gate, print one line per gate, return overall pass."""
    import sys

    out = stream or sys.stdout
    results = []
    for name, gate in GATES.items():
        if quick and name == "three_way":
            res = gate(n_instances=30)
        elif quick and name == "volterra":
            res = gate(hs=(1.6e-2, 8e-3, 4e-3), full_h=4e-3)
        elif quick and name == "delta_approx":
            res = gate(h=4e-3)
        elif quick and name == "isomorphism":
            res = gate(n_instances=40)
        elif quick and name == "mc_suite":
            res = gate(n_paths=20_000, dt=5e-4)
        else:
            res = gate()
        results.append(res)
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] {res.name} ({res.seconds:.1f}s): {res.detail}",
              file=out)
    return all(r.passed for r in results)
