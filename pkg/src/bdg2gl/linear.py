"""Linear pairing operators as Fourier multipliers and per-sector blocks.

K_T multiplies sigma_hat(q, p) by Xi_beta(e(k1), e(k2)), with k1, k2 = p +- hq/2
and e(k) = k^2 - mu. k_T multiplies by chi_beta(p^2 - mu). Both commute with
center-of-mass translations, so L_T = 1 - V^{1/2} K_T V^{1/2} is block diagonal
in the center-of-mass sector.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import circulant, null_space

from .errors import ParameterError
from .model import LatticeGrid, chi_beta, xi_beta
from .opcalc import (PeriodicKernel, _sector_columns, from_planewave,
                     pair_rel_momenta, planewave_coeffs, relative_transform,
                     sector_rel_momenta, vhalf_matrix, wrap_index)


def dispersion(grid, mu):
    return grid.rel_momenta() ** 2 - mu


@dataclass(frozen=True)
class MultiplierKT:
    beta: float
    mu: float
    h: float

    def __call__(self, q, p):
        kp = p + self.h * q / 2
        km = p - self.h * q / 2
        return xi_beta(kp ** 2 - self.mu, km ** 2 - self.mu, self.beta)


def apply_KT(fk, beta, mu, h=None):
    if h is not None and not np.isclose(h, fk.grid.h):
        raise ParameterError("h does not match the kernel grid")
    m = xi_beta(fk.k1 ** 2 - mu, fk.k2 ** 2 - mu, beta)
    return fk.with_values(m * fk.values)


def apply_kT(fk, beta, mu):
    return fk.with_values(chi_beta(fk.p ** 2 - mu, beta) * fk.values)


@lru_cache(maxsize=16)
def _xi_matrix(grid, beta, mu):
    e = dispersion(grid, mu)
    m = xi_beta(e[:, None], e[None, :], beta)
    m.setflags(write=False)
    return m


def KT_kernel(sigma, beta, mu):
    """K_T on a position-space kernel (exact on the lattice)."""
    c = planewave_coeffs(sigma.values) * _xi_matrix(sigma.grid, float(beta), float(mu))
    vals = from_planewave(c)
    if np.isrealobj(sigma.values):
        vals = vals.real
    return PeriodicKernel(sigma.grid, vals, sigma.symmetric)


def kT_kernel(sigma, beta, mu):
    grid = sigma.grid
    p = pair_rel_momenta(grid)
    c = planewave_coeffs(sigma.values) * chi_beta(p ** 2 - mu, beta)
    vals = from_planewave(c)
    if np.isrealobj(sigma.values):
        vals = vals.real
    return PeriodicKernel(grid, vals, sigma.symmetric)


def LT_kernel(sigma, params, beta=None):
    """L_T sigma = sigma - V^{1/2} K_T (V^{1/2} sigma), entrywise V^{1/2}."""
    beta = params.beta if beta is None else beta
    w = vhalf_matrix(params.potential, sigma.grid)
    inner = KT_kernel(sigma.with_values(w * sigma.values), beta, params.mu)
    return sigma.with_values(sigma.values - w * inner.values)


### per-sector blocks

def _vhalf_fourier(potential, grid):
    """W_hat with (V^{1/2} f)_hat(k_a) = sum_b W_hat[a-b] f_hat(k_b)."""
    w = np.sqrt(potential.periodized(grid.rel_offsets(), grid.len_rel))
    return np.fft.fft(w).real / grid.n_rel


def vhalf_convolution(potential, grid):
    return circulant(_vhalf_fourier(potential, grid))


@dataclass(frozen=True, eq=False)
class LTBlocks:
    """blocks[m] acts on the coefficients of sector m indexed by k1 = k_a."""
    grid: LatticeGrid
    beta: float
    blocks: np.ndarray

    def block(self, m):
        return self.blocks[m]

    def min_eigs(self):
        return np.array([np.linalg.eigvalsh(b)[0] for b in self.blocks])


def build_LT_blocks(params, grid, beta=None, sectors=None):
    beta = params.beta if beta is None else beta
    n = grid.n
    e = dispersion(grid, params.mu)
    cw = vhalf_convolution(params.potential, grid)
    cols = _sector_columns(n)
    sectors = range(n) if sectors is None else sectors
    out = np.empty((len(sectors), n, n))
    for i, m in enumerate(sectors):
        mult = xi_beta(e, e[cols[m]], beta)
        out[i] = np.eye(n) - (cw * mult[None, :]) @ cw
        out[i] = 0.5 * (out[i] + out[i].T)
    return LTBlocks(grid, beta, out)


def lT_matrix(params, grid, beta):
    """ell_T on the relative coordinate (FFT-ordered samples)."""
    e = dispersion(grid, params.mu)
    kmat = circulant(np.fft.ifft(chi_beta(e, beta)).real)
    w = np.sqrt(params.potential.periodized(grid.rel_offsets(), grid.len_rel))
    out = np.eye(grid.n_rel) - w[:, None] * kmat * w[None, :]
    return 0.5 * (out + out.T)


### projections

@dataclass(frozen=True, eq=False)
class ProjectionSet:
    """P onto phi_* in the relative coordinate, lambda_kappa on the
    center-of-mass sectors with (h q)^2 <= kappa, and P_kappa = lambda_kappa P."""
    grid: LatticeGrid
    phi_star: np.ndarray
    kappa: float
    vectors: np.ndarray = field(init=False)
    com_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        g = self.grid
        n = g.n
        if self.phi_star.shape != (n,):
            raise ParameterError("phi_star must live on the torus relative grid")
        vecs = np.empty((n, n), dtype=complex)
        for m in range(n):
            p = sector_rel_momenta(g, m)
            u = relative_transform(g, self.phi_star, p)
            vecs[m] = u / np.linalg.norm(u)
        object.__setattr__(self, "vectors", vecs)
        Q = 2 * np.pi * g.h * wrap_index(np.arange(n), n)
        object.__setattr__(self, "com_mask", Q ** 2 <= self.kappa)

    def _sector_apply(self, sigma, which):
        c = planewave_coeffs(sigma.values)
        n = self.grid.n
        cols = _sector_columns(n)
        a = np.arange(n)
        out = np.zeros_like(c)
        for m in range(n):
            g = c[a, cols[m]]
            u = self.vectors[m]
            proj = u * np.vdot(u, g)
            if which == "P":
                out[a, cols[m]] = proj
            elif which == "lam":
                out[a, cols[m]] = g if self.com_mask[m] else 0
            elif which == "Pk":
                out[a, cols[m]] = proj if self.com_mask[m] else 0
            else:
                raise ParameterError(which)
        vals = from_planewave(out)
        if np.isrealobj(sigma.values):
            vals = vals.real
        return sigma.with_values(vals, symmetric=False)

    def P(self, sigma):
        return self._sector_apply(sigma, "P")

    def lam(self, sigma):
        return self._sector_apply(sigma, "lam")

    def P_kappa(self, sigma):
        return self._sector_apply(sigma, "Pk")

    def P_perp(self, sigma):
        return sigma - self.P(sigma)

    def P_kappa_perp(self, sigma):
        return sigma - self.P_kappa(sigma)

    def complement_basis(self, m):
        return null_space(self.vectors[m][None, :].conj())


def kappa_default(h, exponent=5.0 / 6.0):
    return h ** exponent


def gap_diagnostics(params, gapdata, kappa, grid=None):
    """Restricted minimum eigenvalues of L_{T_c}. Non-positive values are
    reported through the ``ok`` flag rather than raised."""
    grid = LatticeGrid.torus(256, params.h) if grid is None else grid
    if not gapdata.grid.same_as(grid):
        raise ParameterError("gapdata must be computed on the same torus grid")
    proj = ProjectionSet(grid, gapdata.phi_star, kappa)
    blocks = build_LT_blocks(params, grid, beta=gapdata.beta_c)
    min_pperp = np.inf
    min_pkperp = np.inf
    for m in range(grid.n):
        b = blocks.blocks[m]
        basis = proj.complement_basis(m)
        restricted = np.linalg.eigvalsh(basis.conj().T @ b @ basis)[0]
        min_pperp = min(min_pperp, restricted)
        full = restricted if proj.com_mask[m] else np.linalg.eigvalsh(b)[0]
        min_pkperp = min(min_pkperp, full)
    rec = {
        "theta": float(gapdata.theta),
        "min_eig_Pperp_LTc_Pperp": float(min_pperp),
        "min_eig_Pkappaperp_LTc_Pkappaperp": float(min_pkperp),
        "kappa": float(kappa),
        "ratio_to_kappa": float(min_pkperp / kappa),
    }
    rec["ok"] = bool(rec["theta"] > 0 and min_pperp > 0 and min_pkperp > 0)
    return rec


def monotonicity_check(params, grid, beta_c):
    """Smallest eigenvalue of L_T + C h^2 - L_{T_c} over all sectors with
    C = ||V||_inf D; nonnegative when the monotonicity bound holds."""
    C = params.potential.linf * params.D
    lt = build_LT_blocks(params, grid, beta=params.beta)
    lc = build_LT_blocks(params, grid, beta=beta_c)
    worst = min(np.linalg.eigvalsh(a - b)[0] for a, b in zip(lt.blocks, lc.blocks))
    return float(worst + C * params.h ** 2), C
