"""BdG Hamiltonian, block resolvents and the nonlinear pairing map N_T.

Operators act on lattice functions with the delta-weighted composition rule,
so a kernel sigma enters H as the matrix delta * sigma. The single-particle
operator h = -Laplacian - mu is applied spectrally and is real symmetric.
"""
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import expit, zeta

from .errors import NumericalError, ParameterError
from .linear import KT_kernel, dispersion
from .model import matsubara_freq
from .opcalc import PeriodicKernel

IM_Z_MIN = 1e-12


@lru_cache(maxsize=16)
def _unitary_dft(n):
    F = np.fft.fft(np.eye(n), axis=0) / np.sqrt(n)
    F.setflags(write=False)
    return F


@lru_cache(maxsize=16)
def h_matrix(grid, mu):
    """Matrix of -Laplacian - mu on the torus (exact on the lattice)."""
    e = dispersion(grid, mu)
    col = np.fft.ifft(e).real
    idx = (np.arange(grid.n)[:, None] - np.arange(grid.n)[None, :]) % grid.n
    m = col[idx]
    m = 0.5 * (m + m.T)
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class BdGHamiltonian:
    sigma: PeriodicKernel
    mu: float
    matrix: np.ndarray

    @property
    def n(self):
        return self.sigma.n

    @cached_property
    def eigh(self):
        try:
            return np.linalg.eigh(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"BdG eigensolve failed: {exc}") from exc

    def function_blocks(self, fun):
        """The four n x n blocks of fun(H) by functional calculus."""
        lam, U = self.eigh
        n = self.n
        F = (U * fun(lam)[None, :]) @ U.conj().T
        return F[:n, :n], F[:n, n:], F[n:, :n], F[n:, n:]

    def block12_kernel(self, fun):
        lam, U = self.eigh
        n = self.n
        blk = (U[:n] * fun(lam)[None, :]) @ U[n:].conj().T
        vals = blk / self.sigma.delta
        if np.isrealobj(self.matrix):
            vals = vals.real
        return PeriodicKernel(self.sigma.grid, vals, False)


def build_H(sigma, params):
    vals = sigma.values
    scale = max(np.abs(vals).max(), 1.0)
    if np.abs(vals - vals.T).max() > 1e-12 * scale:
        raise ParameterError("BdG pairing kernel must satisfy sigma(x,y) = sigma(y,x)")
    hm = h_matrix(sigma.grid, float(params.mu))
    s = sigma.delta * vals
    top = np.hstack([hm, s])
    bot = np.hstack([np.conj(s), -hm])
    H = np.vstack([top, bot])
    return BdGHamiltonian(sigma, params.mu, 0.5 * (H + H.conj().T))


def tanh_block12(sigma, params, beta=None):
    """[tanh(beta H(sigma)/2)]_12 as a kernel."""
    beta = params.beta if beta is None else beta
    H = build_H(sigma, params)
    return H.block12_kernel(lambda lam: np.tanh(0.5 * beta * lam))


def fermi_blocks(sigma, params, beta=None):
    beta = params.beta if beta is None else beta
    return build_H(sigma, params).function_blocks(lambda lam: expit(-beta * lam))


@dataclass(frozen=True)
class ResolventBlocks:
    z: complex
    A11: np.ndarray
    A12: np.ndarray
    A21: np.ndarray
    A22: np.ndarray
    h_resolvent: np.ndarray
    hbar_resolvent: np.ndarray
    sigma_op: np.ndarray

    def identity_residuals(self):
        """Residuals of the block identities for (z - H)^{-1}.

        A12 = (z-h)^{-1} s A22,  A21 = (z+hbar)^{-1} sbar A11,
        A11 = (z-h)^{-1} + A12 sbar (z-h)^{-1}.
        """
        Rm, Rp, s = self.h_resolvent, self.hbar_resolvent, self.sigma_op
        sb = np.conj(s)
        return {
            "A12": float(np.linalg.norm(self.A12 - Rm @ s @ self.A22, 2)),
            "A21": float(np.linalg.norm(self.A21 - Rp @ sb @ self.A11, 2)),
            "A11": float(np.linalg.norm(self.A11 - Rm - self.A12 @ sb @ Rm, 2)),
            "A22": float(np.linalg.norm(self.A22 - Rp - self.A21 @ s @ Rp, 2)),
        }

    def norms(self):
        return {k: float(np.linalg.norm(getattr(self, k), 2)) for k in ("A11", "A12", "A21", "A22")}


def block_resolvent(z, sigma, params):
    z = complex(z)
    if abs(z.imag) < IM_Z_MIN:
        raise NumericalError("resolvent requested too close to the real axis")
    H = build_H(sigma, params)
    lam, U = H.eigh
    n = sigma.n
    R = (U * (1.0 / (z - lam))[None, :]) @ U.conj().T
    hm = h_matrix(sigma.grid, float(params.mu))
    eye = np.eye(n)
    return ResolventBlocks(z, R[:n, :n], R[:n, n:], R[n:, :n], R[n:, n:],
                           np.linalg.inv(z * eye - hm), np.linalg.inv(z * eye + hm),
                           sigma.delta * sigma.values)


def KT_of(sigma, params, beta=None):
    beta = params.beta if beta is None else beta
    return KT_kernel(sigma, beta, params.mu)


def NT_exact(sigma, params, beta=None):
    beta = params.beta if beta is None else beta
    t12 = tanh_block12(sigma, params, beta)
    kt = KT_kernel(sigma, beta, params.mu)
    return t12.with_values(t12.values - kt.values, symmetric=False)


@dataclass(frozen=True)
class MatsubaraResult:
    kernel: PeriodicKernel
    tail: float
    n_max: int


class _PlaneWaveFrame:
    """sigma, sigma-bar and the H eigenvectors in the plane-wave basis, where
    both single-particle resolvents are diagonal."""

    def __init__(self, sigma, params, need_A12=True):
        n = sigma.n
        F = _unitary_dft(n)
        s = sigma.delta * sigma.values
        self.delta = sigma.delta
        self.grid = sigma.grid
        self.F = F
        self.S = F @ s @ F.conj().T
        self.Sb = F @ np.conj(s) @ F.conj().T
        self.e = dispersion(sigma.grid, params.mu)
        if need_A12:
            lam, U = build_H(sigma, params).eigh
            self.lam = lam
            self.Ut = F @ U[:n]
            self.Ub = F @ U[n:]

    def A12(self, z):
        return (self.Ut * (1.0 / (z - self.lam))[None, :]) @ self.Ub.conj().T

    def to_kernel(self, M, real_hint):
        vals = self.F.conj().T @ M @ self.F / self.delta
        if real_hint:
            scale = max(np.abs(vals).max(), 1e-300)
            if np.abs(vals.imag).max() <= 1e-10 * scale:
                vals = vals.real
        return PeriodicKernel(self.grid, vals, False)


def _freqs(n_max, beta):
    if n_max < 1:
        raise ParameterError("n_max must be at least 1")
    return matsubara_freq(np.arange(-n_max, n_max), beta)


def matsubara_tail(sigma_op_norm, n_max, beta):
    """(2/beta) sum_{|n| beyond truncation} |omega_n|^{-3} ||sigma||^3 (diagnostic)."""
    s = 2 * (beta / np.pi) ** 3 * zeta(3, n_max + 0.5) / 8
    return float(2 / beta * s * sigma_op_norm ** 3)


def _matsubara_sum(sigma, params, n_max, beta, term):
    beta = params.beta if beta is None else beta
    fr = _PlaneWaveFrame(sigma, params)
    acc = np.zeros((sigma.n, sigma.n), dtype=complex)
    for w in _freqs(n_max, beta):
        z = 1j * w
        rm = 1.0 / (z - fr.e)
        rp = 1.0 / (z + fr.e)
        acc += term(fr, z, rm, rp)
    acc *= -2.0 / beta
    opn = np.linalg.norm(sigma.delta * sigma.values, 2)
    kern = fr.to_kernel(acc, np.isrealobj(sigma.values))
    return MatsubaraResult(kern, matsubara_tail(opn, n_max, beta), n_max)


def _nt_term(fr, z, rm, rp):
    return (rm[:, None] * fr.S * rp[None, :]) @ (fr.Sb @ fr.A12(z))


def _nt_prime_term(fr, z, rm, rp):
    left = rm[:, None] * fr.S * rp[None, :]
    right = rm[:, None] * fr.S * rp[None, :]
    return left @ fr.Sb @ right


def _nt_tilde_term(fr, z, rm, rp):
    left = rm[:, None] * fr.S * rp[None, :]
    right = rm[:, None] * fr.S * rp[None, :]
    return left @ fr.Sb @ right @ fr.Sb @ fr.A12(z)


def NT_matsubara(sigma, params, n_max=64, beta=None):
    return _matsubara_sum(sigma, params, n_max, beta, _nt_term)


def NT_prime(sigma, params, n_max=64, beta=None):
    return _matsubara_sum(sigma, params, n_max, beta, _nt_prime_term)


def NT_tilde(sigma, params, n_max=64, beta=None):
    return _matsubara_sum(sigma, params, n_max, beta, _nt_tilde_term)


def KT_matsubara(sigma, params, n_max=64, beta=None):
    """-(2/beta) sum (i w - h)^{-1} sigma (i w + hbar)^{-1}, truncated."""
    beta = params.beta if beta is None else beta
    fr = _PlaneWaveFrame(sigma, params, need_A12=False)
    mult = np.zeros((sigma.n, sigma.n), dtype=complex)
    for w in _freqs(n_max, beta):
        z = 1j * w
        mult += np.outer(1.0 / (z - fr.e), 1.0 / (z + fr.e))
    return fr.to_kernel(-2.0 / beta * mult * fr.S, np.isrealobj(sigma.values))
