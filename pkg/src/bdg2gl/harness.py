"""Decomposition alpha = h psi(h X) alpha_*(r) + xi of lattice BdG solutions and
h-sweeps measuring how the pieces scale."""
import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .bdgsolve import bdg_fixed_point
from .errors import ConvergenceError, ParameterError
from .gapeq import find_Tc, reference_grid
from .glcoef import gl_coefficients
from .glsolve import OrderParameter, gl_residual, phase_plane_1d
from .linear import ProjectionSet, kT_kernel, kappa_default
from .model import LatticeGrid
from .opcalc import (PeriodicKernel, _sector_columns, com_coefficients, com_samples, norm,
                     planewave_coeffs, product_kernel, relative_transform, sector_rel_momenta,
                     vhalf_matrix, wrap_index)

DEFAULT_H_LIST = (0.30, 0.24, 0.19, 0.15, 0.12)


def kept_sectors(grid, kappa):
    Q = 2 * np.pi * grid.h * wrap_index(np.arange(grid.n), grid.n)
    return Q ** 2 <= kappa


def extract_psi(phi, gapdata, kappa, h=None):
    """Psi = lambda_kappa of the relative overlap of phi with phi_*; psi(X') = Psi(X'/h)/h.

    Returns (Psi samples on the torus of length 1/h, psi on the unit torus).
    """
    grid = phi.grid
    if h is not None and not np.isclose(h, grid.h):
        raise ParameterError("h does not match the kernel grid")
    if not gapdata.grid.same_as(grid):
        raise ParameterError("gapdata must live on the kernel's torus")
    n = grid.n
    c = planewave_coeffs(phi.values)
    cols = _sector_columns(n)
    a = np.arange(n)
    mask = kept_sectors(grid, kappa)
    psi_hat = np.zeros(n, dtype=complex)
    for m in np.flatnonzero(mask):
        p = sector_rel_momenta(grid, m)
        Phi = relative_transform(grid, gapdata.phi_star, p)
        psi_hat[m] = np.sum(c[a, cols[m]] * np.conj(Phi))
    Psi = com_samples(psi_hat)
    if np.isrealobj(phi.values):
        Psi = Psi.real if np.abs(Psi.imag).max() <= 1e-8 * max(np.abs(Psi).max(), 1e-300) else Psi
    return Psi, OrderParameter(Psi / grid.h)


def psi_kernel(grid, Psi, rel):
    """Product kernel Psi(X) rel(r)."""
    return product_kernel(grid, com_coefficients(Psi), rel)


def compute_xi(alpha, phi, gapdata, kappa, params):
    """xi = alpha - k_{T_c} V^{1/2} P_kappa phi, plus the check that
    k_{T_c} V^{1/2} P_kappa phi equals the product Psi(X) alpha_*(r)."""
    grid = alpha.grid
    proj = ProjectionSet(grid, gapdata.phi_star, kappa)
    pk = proj.P_kappa(phi)
    w = vhalf_matrix(params.potential, grid)
    main = kT_kernel(pk.with_values(w * pk.values), gapdata.beta_c, params.mu)
    xi = alpha.with_values(alpha.values - main.values, symmetric=False)
    Psi, _ = extract_psi(phi, gapdata, kappa)
    product = psi_kernel(grid, Psi, gapdata.alpha_star)
    scale = max(norm(main), 1e-300)
    return xi, {"identity_residual": norm(product - main) / scale, "product": product,
                "Pkappa_phi": pk}


@dataclass(frozen=True, eq=False)
class DecompositionReport:
    h: float
    kappa: float
    psi: OrderParameter
    Psi: np.ndarray
    xi: PeriodicKernel
    norms: dict
    gl_residual_L2: float
    identity_residual: float
    reconstruction_error: float


def decompose(alpha, phi, gapdata, kappa, params, coef):
    h = alpha.grid.h
    Psi, psi = extract_psi(phi, gapdata, kappa, h)
    xi, info = compute_xi(alpha, phi, gapdata, kappa, params)
    recon = info["product"] + xi
    a_norm = max(norm(alpha), 1e-300)
    norms = {
        "alpha_H1h": norm(alpha, "Hs", s=1),
        "psi_L2": psi.norm(0),
        "psi_H1": psi.norm(1),
        "psi_H2": psi.norm(2),
        "xi_H1h": norm(xi, "Hs", s=1),
    }
    _, res = gl_residual(psi, coef, params.D)
    return DecompositionReport(h, kappa, psi, Psi, xi, norms, float(res),
                               info["identity_residual"], norm(recon - alpha) / a_norm)


def slope_fit(pairs):
    """Least squares of log(value) against log(h): (slope, intercept, r2)."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ParameterError("need at least three points")
    h, v = np.array(pairs, dtype=float).T
    if np.any(v <= 0) or np.any(h <= 0):
        raise ParameterError("slope fit needs positive values")
    fit = stats.linregress(np.log(h), np.log(v))
    return float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)


@dataclass
class SweepConfig:
    n: int = 256
    kappa_exp: float = 5.0 / 6.0
    kappa: float | None = None
    tol: float = 1e-11
    max_iter: int = 500
    damping: float = 0.5
    anderson: int = 6
    init: str = "constant"
    n_rel_ref: int = 256
    widths_ref: float = 40.0


SWEEP_COLUMNS = ["h", "n", "kappa", "Tc_lattice", "iterations", "residual_direct", "residual_bs",
                 "alpha_H1h_over_h", "psi_L2", "psi_H2_over_L2", "xi_H1h", "gl_residual",
                 "gl_residual_over_psi_L2", "identity_residual", "reconstruction_error",
                 "psi_imag_ratio", "status"]


@dataclass
class SweepTable:
    rows: list
    fits: dict
    coefficients: dict
    reports: list = field(default_factory=list)

    def column(self, name):
        return np.array([r[name] for r in self.rows if r["status"] == "ok"], dtype=float)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
            wr.writeheader()
            for r in self.rows:
                wr.writerow({k: (f"{r[k]:.12g}" if isinstance(r[k], float) else r[k]) for k in SWEEP_COLUMNS})

    def write_fits(self, path):
        with open(path, "w") as fh:
            json.dump({"fits": self.fits, "coefficients": self.coefficients}, fh, indent=2, sort_keys=True)

    def write_plot_files(self, stem):
        h = self.column("h")
        for name in ("alpha_H1h_over_h", "psi_L2", "psi_H2_over_L2", "xi_H1h", "gl_residual_over_psi_L2"):
            np.savetxt(f"{stem}_{name}.dat", np.column_stack([h, self.column(name)]), fmt="%.12g")


def initial_kernel(grid, gapdata, coef, params, kind="constant"):
    """GL ansatz h psi0(h X) alpha_*(r)."""
    h = grid.h
    if kind == "constant":
        Psi = np.full(grid.n, h * np.sqrt(coef.Lambda2 * params.D / coef.Lambda3))
    elif kind == "phase-plane":
        psi0 = phase_plane_1d(coef, params.D, m=grid.n).psi
        Psi = h * psi0
    else:
        raise ParameterError(f"unknown init {kind!r}")
    return psi_kernel(grid, Psi, gapdata.alpha_star)


def reference_coefficients(params, config=None):
    config = SweepConfig() if config is None else config
    grid = reference_grid(params.potential, config.n_rel_ref, config.widths_ref)
    ref = find_Tc(params, grid)
    params = params.with_beta_c(ref.beta_c)
    return ref, gl_coefficients(ref, params)


def run_point(params, h, config, coef):
    grid = LatticeGrid.torus(config.n, h)
    p = params.with_h(h)
    gd = find_Tc(p, grid)
    p = p.with_beta_c(gd.beta_c)
    kappa = config.kappa if config.kappa is not None else kappa_default(h, config.kappa_exp)
    init = initial_kernel(grid, gd, coef, p, config.init)
    sol = bdg_fixed_point(p, grid, init, damping=config.damping, tol=config.tol,
                          max_iter=config.max_iter, anderson=config.anderson, init_label=config.init)
    rep = decompose(sol.alpha, sol.phi, gd, kappa, p, coef)
    psi_l2 = rep.norms["psi_L2"]
    row = {
        "h": h, "n": config.n, "kappa": kappa, "Tc_lattice": gd.Tc,
        "iterations": sol.iterations, "residual_direct": sol.residual_direct,
        "residual_bs": sol.residual_bs,
        "alpha_H1h_over_h": rep.norms["alpha_H1h"] / h,
        "psi_L2": psi_l2, "psi_H2_over_L2": rep.norms["psi_H2"] / psi_l2,
        "xi_H1h": rep.norms["xi_H1h"], "gl_residual": rep.gl_residual_L2,
        "gl_residual_over_psi_L2": rep.gl_residual_L2 / psi_l2,
        "identity_residual": rep.identity_residual,
        "reconstruction_error": rep.reconstruction_error,
        "psi_imag_ratio": rep.psi.max_imag_ratio() if np.iscomplexobj(rep.psi.psi) else 0.0,
        "status": "ok",
    }
    return row, rep, sol


def h_sweep(params_template, h_list=DEFAULT_H_LIST, config=None, coef=None, keep_reports=False):
    config = SweepConfig() if config is None else config
    h_list = [float(h) for h in h_list]
    if len(h_list) < 4 or any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ParameterError("h_list needs at least four strictly decreasing values")
    if coef is None:
        _, coef = reference_coefficients(params_template, config)
    rows, reports = [], []
    for h in h_list:
        t0 = time.perf_counter()
        try:
            row, rep, _ = run_point(params_template, h, config, coef)
        except ConvergenceError as exc:
            row = {k: float("nan") for k in SWEEP_COLUMNS}
            row.update(h=h, n=config.n, status=f"failed: {exc}")
            rep = None
        row["seconds"] = time.perf_counter() - t0
        rows.append(row)
        if keep_reports:
            reports.append(rep)
    table = SweepTable(rows, {}, coef.to_json(), reports)
    ok = [r for r in rows if r["status"] == "ok"]
    if len(ok) >= 3:
        for name in ("xi_H1h", "gl_residual_over_psi_L2", "alpha_H1h_over_h"):
            slope, icpt, r2 = slope_fit([(r["h"], r[name]) for r in ok])
            table.fits[name] = {"slope": slope, "intercept": icpt, "r2": r2}
    return table
