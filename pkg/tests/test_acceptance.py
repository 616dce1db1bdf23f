"""One test per acceptance criterion; each prints a PASS/FAIL line and records
it for the terminal summary."""
import json
import time
from importlib import resources

import numpy as np
import pytest

from bdg2gl import bcsenergy, glcoef, glsolve, model, nonlinear, opcalc
from bdg2gl.bdgsolve import bdg_fixed_point, bdg_map
from bdg2gl.harness import DEFAULT_H_LIST, h_sweep, psi_kernel
from bdg2gl.model import LatticeGrid, ModelParams, Potential
from bdg2gl.opcalc import PeriodicKernel, norm

from conftest import ACCEPTANCE


def report(k, checks, elapsed=None, limit=None):
    """checks: list of (name, passed, value)."""
    if limit is not None:
        checks = checks + [("runtime", elapsed < limit, f"{elapsed:.1f}s < {limit}s")]
    failed = [c for c in checks if not c[1]]
    detail = "; ".join(f"{n}={v}" for n, _, v in (failed or checks))
    ACCEPTANCE[k] = (not failed, detail)
    print(f"{'PASS' if not failed else 'FAIL'} criterion {k}: {detail}")
    assert not failed, detail


def test_criterion_01_special_functions():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    E, Ep = rng.uniform(-30, 30, (2, 10_000))
    beta = rng.uniform(0.01, 10, 10_000)
    slack = 0.5 * (model.chi_beta(E, beta) + model.chi_beta(Ep, beta)) - model.xi_beta(E, Ep, beta)
    z = np.concatenate([rng.uniform(-60, 60, 5000), rng.uniform(-1, 1, 5000)])
    g1, g2 = model.gl_weights(z)
    g1m, g2m = model.gl_weights(-z)
    parity = max(np.abs(g1 + g1m).max(), np.abs(g2 - g2m).max())
    g1_0, g2_0 = model.gl_weights(np.array([1e-12]))
    report(1, [
        ("min slack", slack.min() >= -1e-14, f"{slack.min():.2e}"),
        ("parity", parity <= 1e-13, f"{parity:.1e}"),
        ("limit at 0+", abs(g1_0[0]) <= 1e-12 and abs(g2_0[0] - 0.25) <= 1e-14,
         f"({g1_0[0]:.1e}, {g2_0[0]:.15f})"),
    ], time.perf_counter() - t0, 1.0)


def test_criterion_02_operator_calculus():
    t0 = time.perf_counter()
    grid = LatticeGrid.torus(128, 0.25)
    rng = np.random.default_rng(1)
    pars = trip = 0.0
    slack = np.inf
    for _ in range(100):
        s = opcalc.random_kernel(grid, rng, symmetric=False, real=False)
        t = opcalc.random_kernel(grid, rng, symmetric=False, real=False)
        fk = opcalc.com_rel_fourier(s)
        pars = max(pars, abs(np.sqrt(fk.dp * np.sum(np.abs(fk.values) ** 2)) / norm(s) - 1))
        trip = max(trip, norm(opcalc.com_rel_inverse(fk) - s) / norm(s))
        st = opcalc.kernel_compose(s, t)
        lhs = norm(st)
        for p, q in ((2, np.inf), (6, 3), (np.inf, 2)):
            rhs = norm(s, "Lp", p=p) * norm(t, "Lp", p=q)
            slack = min(slack, (rhs - lhs) / rhs)
    report(2, [
        ("Parseval", pars <= 1e-10, f"{pars:.1e}"),
        ("round trip", trip <= 1e-12, f"{trip:.1e}"),
        ("Holder slack", slack >= -1e-12, f"{slack:.2e}"),
    ], time.perf_counter() - t0, 10.0)


def test_criterion_03_block_resolvent(params):
    t0 = time.perf_counter()
    p = params.with_beta_c(1 / 6.84).with_h(0.25)
    grid = LatticeGrid.torus(64, 0.25)
    rng = np.random.default_rng(2)
    worst_id = 0.0
    worst_slack = np.inf
    for i in range(20):
        s = opcalc.random_kernel(grid, rng)
        s = s * (rng.uniform(0.1, 20) / norm(s, "op"))
        z = rng.uniform(-10, 10) + 1j * model.matsubara_freq(i % 4, p.beta)
        rb = nonlinear.block_resolvent(z, s, p)
        worst_id = max(worst_id, max(rb.identity_residuals().values()))
        worst_slack = min(worst_slack, 1 / abs(z.imag) - max(rb.norms().values()))
    report(3, [
        ("identities", worst_id <= 1e-10, f"{worst_id:.1e}"),
        ("norm bound slack", worst_slack >= -1e-12, f"{worst_slack:.2e}"),
    ], time.perf_counter() - t0, 30.0)


def test_criterion_04_matsubara(params):
    t0 = time.perf_counter()
    p = params.with_beta_c(1 / 6.83994515678123)
    grid = LatticeGrid.torus(64, 0.2)
    s = opcalc.random_kernel(grid, np.random.default_rng(0))
    s = s * (1.0 / norm(s, "op"))
    exact = nonlinear.NT_exact(s, p)
    nmax = np.array([8, 16, 32, 64])
    errs = np.array([norm(exact - nonlinear.NT_matsubara(s, p, m).kernel) for m in nmax])
    slope = np.polyfit(np.log(nmax), np.log(errs), 1)[0]
    report(4, [
        ("monotone", bool(np.all(np.diff(errs) < 0)), " > ".join(f"{e:.1e}" for e in errs)),
        ("decay exponent", slope <= -1.8, f"{slope:.2f}"),
    ], time.perf_counter() - t0, 60.0)


def test_criterion_05_gap_equation(params):
    from bdg2gl.gapeq import alpha_star_residual, find_Tc, reference_grid
    t0 = time.perf_counter()
    gd = find_Tc(params, reference_grid(params.potential))
    golden = json.loads(resources.files("bdg2gl").joinpath("data/golden.json").read_text())["Tc"]
    res = alpha_star_residual(gd, params)
    report(5, [
        ("|lambda_min|", abs(gd.lowest_eig) <= 1e-8, f"{abs(gd.lowest_eig):.1e}"),
        ("theta", gd.theta > 0, f"{gd.theta:.4f}"),
        ("alpha_* residual", res <= 1e-8, f"{res:.1e}"),
        ("golden Tc", abs(gd.Tc - golden) <= 1e-7, f"{abs(gd.Tc - golden):.1e}"),
    ], time.perf_counter() - t0, 60.0)


def test_criterion_06_gl_coefficients(params, reference):
    t0 = time.perf_counter()
    ref, coef = reference
    p = params.with_beta_c(ref.beta_c)
    H = glcoef.G_hessian(ref, p)
    L0 = glcoef.lambda0_at(p.beta, ref, p)
    hess = np.abs(H / (2 * L0) - 1).max()
    closed = abs(glcoef.lambda3_closed(ref, p) / coef.Lambda3 - 1)
    h = 1e-3
    lt = glcoef.lambda2_tilde(h, ref, p) / h ** 2
    lt_err = abs(lt / (coef.Lambda2 * p.D) - 1)
    report(6, [
        ("positivity", coef.Lambda2 > 0 and coef.Lambda3 > 0 and np.linalg.eigvalsh(coef.Lambda0)[0] > 0,
         f"L0={coef.Lambda0[0, 0]:.4e}, L2={coef.Lambda2:.4e}, L3={coef.Lambda3:.4e}"),
        ("Hessian vs 2 Lambda0", hess <= 1e-5, f"{hess:.1e}"),
        ("closed-form Lambda3", closed <= 1e-8, f"{closed:.1e}"),
        ("Lambda2 tilde / h^2", lt_err <= 1e-3, f"{lt_err:.1e}"),
    ], time.perf_counter() - t0, 30.0)


def test_criterion_07_bdg_solver(params, reference, bdg_point):
    t0 = time.perf_counter()
    row, rep, sol, p, gd = bdg_point
    grid = sol.alpha.grid
    zero = PeriodicKernel.zeros(grid)
    r0 = norm(bdg_map(zero, p) - zero)
    # above T_c: a small pairing dies out
    hot = p.with_beta_c(gd.beta_c / (1.25 * (1 + p.D * p.h ** 2)))  # T = 1.25 T_c
    assert hot.T > gd.Tc
    init = psi_kernel(grid, np.full(grid.n, 1e-3), gd.alpha_star)
    cold_sol = bdg_fixed_point(hot, grid, init, tol=1e-11)
    decayed = norm(cold_sol.alpha)
    elapsed = time.perf_counter() - t0 + row["seconds"]
    report(7, [
        ("zero residual", r0 == 0.0, f"{r0}"),
        ("above Tc", decayed <= 1e-10, f"||alpha|| = {decayed:.1e}"),
        ("direct residual", sol.residual_direct <= 1e-10, f"{sol.residual_direct:.1e}"),
        ("BS residual", sol.residual_bs <= 1e-8, f"{sol.residual_bs:.1e}"),
        ("nontrivial", norm(sol.alpha) > 1e-3, f"||alpha|| = {norm(sol.alpha):.3e}"),
    ], elapsed, 300.0)


def test_criterion_08_gl_solver(reference):
    _, coef = reference
    D = 1.0
    r_const = glsolve.gl_residual(glsolve.constant_branch(coef, D), coef, D)[1]
    D2 = 3.0
    pw = glsolve.plane_wave(coef, D2, 1)
    amp_formula = np.sqrt((coef.Lambda2 * D2 - 4 * np.pi ** 2 * coef.Lambda0[0, 0]) / coef.Lambda3)
    # Newton from a perturbed plane wave must return to the formula's amplitude
    m = pw.m
    x = np.arange(m) / m
    perturbed = glsolve.OrderParameter(pw.psi * (1 + 0.05 * np.cos(2 * np.pi * x)))
    sol, _ = glsolve.newton_gl(coef, D2, perturbed, tol=1e-13)
    amp_err = np.abs(np.abs(sol.psi) - amp_formula).max() / amp_formula
    r_pw = glsolve.gl_residual(pw, coef, D2)[1]
    psi, rep = glsolve.phase_plane_1d(coef, D2, with_report=True)
    r_pp = glsolve.gl_residual(psi, coef, D2)[1]
    report(8, [
        ("constant residual", r_const <= 1e-12, f"{r_const:.1e}"),
        ("plane-wave residual", r_pw <= 1e-10 * amp_formula, f"{r_pw:.1e}"),
        ("plane-wave amplitude", amp_err <= 1e-10, f"{amp_err:.1e}"),
        ("phase-plane residual", r_pp <= 1e-8, f"{r_pp:.1e}"),
        ("first-integral drift", rep["first_integral_drift"] <= 1e-10, f"{rep['first_integral_drift']:.1e}"),
    ])


@pytest.fixture(scope="module")
def sweep(params, reference):
    t0 = time.perf_counter()
    table = h_sweep(params, DEFAULT_H_LIST, coef=reference[1])
    return table, time.perf_counter() - t0


def test_criterion_09_harness(sweep):
    table, elapsed = sweep
    ok_rows = [r for r in table.rows if r["status"] == "ok"]
    a = table.column("alpha_H1h_over_h")
    hh = table.column("psi_H2_over_L2")
    g = table.column("gl_residual_over_psi_L2")
    h = table.column("h")
    xi_slope = table.fits["xi_H1h"]["slope"]
    g_slope = table.fits["gl_residual_over_psi_L2"]["slope"]
    # h_list is decreasing, so "decreasing in h" means g shrinks along the rows
    report(9, [
        ("all points converged", len(ok_rows) == len(DEFAULT_H_LIST), f"{len(ok_rows)}/{len(DEFAULT_H_LIST)}"),
        ("alpha_H1h/h max/min", a.max() / a.min() <= 3, f"{a.max() / a.min():.3f}"),
        ("xi slope", xi_slope >= 1.05, f"{xi_slope:.3f}"),
        ("psi H2/L2 max/min", hh.max() / hh.min() <= 3, f"{hh.max() / hh.min():.3f}"),
        ("GL residual monotone", bool(np.all(np.diff(g) < 0) and np.all(np.diff(h) < 0)),
         " > ".join(f"{v:.2e}" for v in g)),
        ("GL residual slope", g_slope > 0, f"{g_slope:.3f}"),
    ], elapsed, 1800.0)


def test_criterion_10_bcs_functional(bdg_point):
    _, _, sol, p, _ = bdg_point
    state = bcsenergy.gamma_from_alpha(sol.alpha, p)
    crit = bcsenergy.criticality_check(state, p, n_directions=8, seed=0)
    consist, _ = bcsenergy.state_consistency(state, sol.alpha, p)
    tol_consist = 10 * sol.residual_direct + 1e-11 * max(norm(sol.alpha), 1)
    zero_V = Potential.from_table([-1.0, 0.0, 1.0], [0.0, 0.0, 0.0])
    grid = LatticeGrid.torus(64, 0.25)
    pf = ModelParams(zero_V, 1.0, h=0.25).with_beta_c(0.15)
    st0 = bcsenergy.gamma_from_alpha(PeriodicKernel.zeros(grid), pf)
    F = bcsenergy.free_energy(st0, pf)
    F_ref = bcsenergy.free_fermion_energy(grid, 1.0, pf.beta)
    ff = abs(F - F_ref) / max(abs(F_ref), 1)
    report(10, [
        ("criticality", crit["relative"] <= 1e-6, f"{crit['relative']:.1e}"),
        ("Gamma12 = alpha", consist <= tol_consist, f"{consist:.1e} (tol {tol_consist:.1e})"),
        ("free fermions", ff <= 1e-10, f"{ff:.1e}"),
    ])
