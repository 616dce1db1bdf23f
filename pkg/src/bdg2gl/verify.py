"""Fast invariant battery behind ``bdg2gl verify``.

Each check returns (passed, detail). Grids are small so the whole battery runs
in well under a minute.
"""
import time

import numpy as np

from . import bcsenergy, bdgsolve, gapeq, glcoef, glsolve, model, nonlinear, opcalc
from .harness import psi_kernel, reference_coefficients


def _special_functions(ctx):
    rng = np.random.default_rng(ctx["seed"])
    E, Ep = rng.uniform(-20, 20, (2, 10_000))
    beta = rng.uniform(0.05, 5, 10_000)
    xi = model.xi_beta(E, Ep, beta)
    slack = 0.5 * (model.chi_beta(E, beta) + model.chi_beta(Ep, beta)) - xi
    z = rng.uniform(-50, 50, 1000)
    g1, g2 = model.gl_weights(z)
    g1m, g2m = model.gl_weights(-z)
    ok = (xi > 0).all() and slack.min() >= -1e-14 and np.abs(g1 + g1m).max() <= 1e-13 \
        and np.abs(g2 - g2m).max() <= 1e-13
    return ok, f"min slack {slack.min():.2e}"


def _fourier(ctx):
    grid = model.LatticeGrid.torus(64, 0.25)
    rng = np.random.default_rng(ctx["seed"])
    worst = 0.0
    for _ in range(10):
        s = opcalc.random_kernel(grid, rng, symmetric=False, real=False)
        fk = opcalc.com_rel_fourier(s)
        pars = np.sqrt(fk.dp * np.sum(np.abs(fk.values) ** 2))
        worst = max(worst, abs(pars / opcalc.norm(s) - 1),
                    opcalc.norm(opcalc.com_rel_inverse(fk) - s) / opcalc.norm(s))
    return worst <= 1e-10, f"worst relative error {worst:.2e}"


def _resolvent(ctx):
    grid = model.LatticeGrid.torus(32, 0.25)
    params = ctx["params"].with_h(0.25)
    rng = np.random.default_rng(ctx["seed"])
    s = opcalc.random_kernel(grid, rng)
    z = 1j * model.matsubara_freq(0, params.beta)
    rb = nonlinear.block_resolvent(z, s, params)
    res = max(rb.identity_residuals().values())
    bound = max(rb.norms().values()) - 1 / abs(z.imag)
    return res <= 1e-10 and bound <= 1e-12, f"identity residual {res:.2e}"


def _matsubara(ctx):
    grid = model.LatticeGrid.torus(32, 0.25)
    params = ctx["params"].with_h(0.25)
    rng = np.random.default_rng(ctx["seed"])
    s = opcalc.random_kernel(grid, rng, bandwidth=12.0)
    ex = nonlinear.NT_exact(s, params)
    errs = [opcalc.norm(ex - nonlinear.NT_matsubara(s, params, m).kernel) for m in (8, 16, 32)]
    ok = errs[0] > errs[1] > errs[2]
    return ok, "errors " + ", ".join(f"{e:.2e}" for e in errs)


def _gap(ctx):
    ref = ctx["ref"]
    res = gapeq.alpha_star_residual(ref, ctx["params"])
    golden = ctx.get("golden")
    ok = abs(ref.lowest_eig) <= 1e-8 and ref.theta > 0 and res <= 1e-8
    detail = f"Tc {ref.Tc:.12f}"
    if golden is not None:
        ok = ok and abs(ref.Tc - golden) <= 1e-7
        detail += f" (golden {golden:.12f})"
    return ok, detail


def _coefficients(ctx):
    ref, coef, params = ctx["ref"], ctx["coef"], ctx["params"]
    l3 = glcoef.lambda3_closed(ref, params)
    p = params.with_beta_c(ref.beta_c)
    H = glcoef.G_hessian(ref, p)
    L0 = glcoef.lambda0_at(p.beta, ref, p)
    err = np.abs(H / (2 * L0) - 1).max()
    ok = abs(l3 / coef.Lambda3 - 1) <= 1e-8 and err <= 1e-5
    return ok, f"Hessian mismatch {err:.2e}, closed-form mismatch {abs(l3 / coef.Lambda3 - 1):.2e}"


def _bdg(ctx):
    h = 0.25
    grid = model.LatticeGrid.torus(64, h)
    p = ctx["params"].with_h(h)
    gd = gapeq.find_Tc(p, grid)
    p = p.with_beta_c(gd.beta_c)
    coef = ctx["coef"]
    Psi = np.full(grid.n, h * np.sqrt(coef.Lambda2 * p.D / coef.Lambda3))
    sol = bdgsolve.bdg_fixed_point(p, grid, psi_kernel(grid, Psi, gd.alpha_star), tol=1e-11)
    st = bcsenergy.gamma_from_alpha(sol.alpha, p)
    crit = bcsenergy.criticality_check(st, p, n_directions=2, seed=ctx["seed"])
    ok = sol.residual_direct <= 1e-10 and sol.residual_bs <= 1e-8 and crit["relative"] <= 1e-6
    return ok, f"residuals {sol.residual_direct:.1e}/{sol.residual_bs:.1e}, criticality {crit['relative']:.1e}"


def _gl(ctx):
    coef = ctx["coef"]
    D = 2.0 * glsolve.bifurcation_thresholds(coef, 1)[1][1]
    r0 = glsolve.gl_residual(glsolve.constant_branch(coef, D), coef, D)[1]
    psi, rep = glsolve.phase_plane_1d(coef, D, with_report=True)
    r1 = glsolve.gl_residual(psi, coef, D)[1]
    ok = r0 <= 1e-12 and r1 <= 1e-8 and rep["first_integral_drift"] <= 1e-10
    return ok, f"constant {r0:.1e}, phase plane {r1:.1e}"


def _free_fermion(ctx):
    grid = model.LatticeGrid.torus(32, 0.25)
    p = ctx["params"].with_h(0.25)
    st = bcsenergy.gamma_from_alpha(opcalc.PeriodicKernel.zeros(grid), p)
    F = bcsenergy.free_energy(st, p)
    ref = bcsenergy.free_fermion_energy(grid, p.mu, p.beta)
    return abs(F - ref) <= 1e-10 * max(abs(ref), 1), f"difference {abs(F - ref):.1e}"


CHECKS = [
    ("special functions", _special_functions),
    ("fourier transform", _fourier),
    ("block resolvent", _resolvent),
    ("matsubara truncation", _matsubara),
    ("gap equation", _gap),
    ("GL coefficients", _coefficients),
    ("BdG solve and criticality", _bdg),
    ("GL solver", _gl),
    ("free fermions", _free_fermion),
]


def run_battery(params, seed=0, golden=None, n_rel_ref=256, widths_ref=40.0):
    from .harness import SweepConfig
    cfg = SweepConfig(n_rel_ref=n_rel_ref, widths_ref=widths_ref)
    ref, coef = reference_coefficients(params, cfg)
    ctx = {"params": params.with_beta_c(ref.beta_c), "seed": seed, "ref": ref,
           "coef": coef, "golden": golden}
    results = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn(ctx)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append({"check": name, "passed": bool(ok), "detail": detail,
                        "seconds": round(time.perf_counter() - t0, 3)})
    return results
