"""Critical temperature and the pair eigenfunction.

The relative coordinate lives on a periodic box (``LatticeGrid.relative`` or
the torus itself). Samples are stored in FFT order so that index 0 is r = 0
and reflection r -> -r maps index j to (-j) mod n.
"""
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import AssumptionViolation, NumericalError, ParameterError
from .linear import dispersion, lT_matrix
from .model import LatticeGrid, chi_beta

DEFAULT_TOL = 1e-10


def even_basis(n):
    """Orthonormal basis of reflection-symmetric vectors in FFT order."""
    cols = [np.eye(n)[:, 0], np.eye(n)[:, n // 2]]
    for j in range(1, n // 2):
        v = np.zeros(n)
        v[j] = v[n - j] = np.sqrt(0.5)
        cols.append(v)
    return np.column_stack(cols)


def lowest_eig_ellT(T, params, grid, n_eigs=1):
    """Lowest eigenvalue(s) of ell_T on even functions, with eigenvector(s)
    normalized in L2 (delta-weighted)."""
    if not T > 0:
        raise ParameterError("temperature must be positive")
    B = even_basis(grid.n_rel)
    mat = B.T @ lT_matrix(params, grid, 1.0 / T) @ B
    try:
        vals, vecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolve failed at T={T}: {exc}") from exc
    vecs = (B @ vecs[:, :n_eigs]) / np.sqrt(grid.delta_rel)
    if n_eigs == 1:
        return float(vals[0]), vecs[:, 0]
    return vals[:n_eigs], vecs


@dataclass(frozen=True, eq=False)
class GapData:
    Tc: float
    grid: LatticeGrid
    phi_star: np.ndarray
    theta: float
    lowest_eig: float
    alpha_star: np.ndarray = None
    vhalf: np.ndarray = None
    potential_samples: np.ndarray = None
    bisection_steps: int = 0
    tol: float = DEFAULT_TOL
    t_grid: np.ndarray = field(default=None)
    t_values: np.ndarray = field(default=None)

    @property
    def beta_c(self):
        return 1.0 / self.Tc

    @property
    def r(self):
        return self.grid.rel_offsets()

    def t(self, p):
        """t_*(p) = 2 (2 pi)^{-1/2} integral V alpha_* cos(p r) dr (d = 1)."""
        p = np.asarray(p, dtype=float)
        u = self.potential_samples * self.alpha_star
        r = self.r
        flat = p.reshape(-1)
        out = np.empty(flat.shape)
        # chunked to keep the cos matrix small
        for s in range(0, flat.size, 4096):
            out[s:s + 4096] = np.cos(np.outer(flat[s:s + 4096], r)) @ u
        out *= 2 * self.grid.delta_rel / np.sqrt(2 * np.pi)
        return out.reshape(p.shape) if p.ndim else float(out[0])

    def to_json(self):
        return {
            "Tc": self.Tc,
            "beta_c": self.beta_c,
            "theta": self.theta,
            "lowest_eig": self.lowest_eig,
            "bisection_steps": self.bisection_steps,
            "grid": {"n_rel": self.grid.n_rel, "len_rel": self.grid.len_rel},
            "norms": {
                "phi_star_L2": float(np.sqrt(self.grid.delta_rel * np.sum(self.phi_star ** 2))),
                "vhalf_alpha_star_L2": float(np.sqrt(self.grid.delta_rel * np.sum((self.vhalf * self.alpha_star) ** 2))),
            },
        }

    def save(self, stem):
        with open(f"{stem}.json", "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
        np.save(f"{stem}_phi_star.npy", self.phi_star)
        np.save(f"{stem}_alpha_star.npy", self.alpha_star)
        if self.t_grid is not None:
            np.save(f"{stem}_t_star.npy", np.vstack([self.t_grid, self.t_values]))


def _energy_scale(params):
    return max(abs(params.mu), params.potential.linf)


def find_Tc(params, grid, tol=DEFAULT_TOL, rel_width=1e-13, max_steps=200):
    """Bisection on T for the zero of the lowest even eigenvalue of ell_T."""
    if not tol > 0:
        raise ParameterError("tol must be positive")
    scale = _energy_scale(params)
    lo, hi = 1e-4 * scale, 10.0 * scale
    lam_lo, _ = lowest_eig_ellT(lo, params, grid)
    lam_hi, _ = lowest_eig_ellT(hi, params, grid)
    if not (lam_lo < 0 < lam_hi):
        raise AssumptionViolation(
            f"no sign change of the lowest pairing eigenvalue on [{lo:.3g}, {hi:.3g}]: "
            "no critical temperature for this V, mu")
    f = lambda T: lowest_eig_ellT(T, params, grid)[0]
    Tc, info = optimize.bisect(f, lo, hi, xtol=rel_width * lo, rtol=rel_width,
                               maxiter=max_steps, full_output=True, disp=False)
    steps = info.iterations
    vals, vecs = lowest_eig_ellT(Tc, params, grid, n_eigs=2)
    if abs(vals[0]) > tol:
        raise NumericalError(f"bisection stalled with |lambda| = {abs(vals[0]):.3e} > tol")
    theta = float(vals[1] - vals[0])
    if theta < 10 * tol:
        raise AssumptionViolation("near-degenerate pairing eigenvalue: simplicity of the zero mode at risk")
    phi = vecs[:, 0]
    if phi[0] < 0:
        phi = -phi
    gd = GapData(Tc=float(Tc), grid=grid, phi_star=phi, theta=float(vals[1]),
                 lowest_eig=float(vals[0]), bisection_steps=steps, tol=tol)
    return complete_gapdata(gd, params)


def alpha_star(gapdata, params, grid=None):
    grid = gapdata.grid if grid is None else grid
    w = np.sqrt(params.potential.periodized(grid.rel_offsets(), grid.len_rel))
    chi = chi_beta(dispersion(grid, params.mu), gapdata.beta_c)
    a = np.fft.ifft(chi * np.fft.fft(w * gapdata.phi_star)).real
    a /= np.sqrt(grid.delta_rel * np.sum((w * a) ** 2))
    return 0.5 * (a + a[(-np.arange(grid.n_rel)) % grid.n_rel])


def t_star(gapdata, params, p_grid):
    return gapdata.t(p_grid)


def complete_gapdata(gd, params, p_points=513):
    grid = gd.grid
    v = params.potential.periodized(grid.rel_offsets(), grid.len_rel)
    a = alpha_star(gd, params, grid)
    filled = GapData(**{**gd.__dict__, "alpha_star": a, "vhalf": np.sqrt(v),
                        "potential_samples": v})
    p_grid = np.linspace(0, np.abs(grid.rel_momenta()).max(), p_points)
    object.__setattr__(filled, "t_grid", p_grid)
    object.__setattr__(filled, "t_values", filled.t(p_grid))
    return filled


def alpha_star_residual(gapdata, params):
    """|| alpha_* - k_{T_c} V alpha_* ||_{L2}."""
    grid = gapdata.grid
    chi = chi_beta(dispersion(grid, params.mu), gapdata.beta_c)
    a = gapdata.alpha_star
    img = np.fft.ifft(chi * np.fft.fft(gapdata.potential_samples * a)).real
    return float(np.sqrt(grid.delta_rel * np.sum((a - img) ** 2)))


def collinearity_residual(gapdata):
    u = gapdata.vhalf * gapdata.alpha_star
    u = u / np.sqrt(gapdata.grid.delta_rel * np.sum(u ** 2))
    return float(np.sqrt(gapdata.grid.delta_rel * np.sum((u - gapdata.phi_star) ** 2)))


def reference_grid(potential, n_rel=256, widths=40.0):
    """Relative box of ``widths`` potential widths (Gaussian a or table reach)."""
    scale = potential.a if potential.kind == "gaussian" else potential.reach / 4
    return LatticeGrid.relative(n_rel, widths * scale)


def torus_gapdata(params, n, tol=DEFAULT_TOL):
    return find_Tc(params, LatticeGrid.torus(n, params.h), tol=tol)
