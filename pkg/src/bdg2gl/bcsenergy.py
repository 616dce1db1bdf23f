"""BCS free energy of quasi-free states on the lattice torus and numerical
criticality of BdG solutions.

States are Gamma = expit(-beta K) for a BdG-structured generator K (for
BdG solutions K = H(-2 V alpha)), which keeps 0 < Gamma < 1 exactly and lets
the entropy be evaluated from the spectrum of beta K without logs of 0.
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .bdgsolve import pairing_field
from .errors import ParameterError
from .nonlinear import build_H, h_matrix, tanh_block12
from .opcalc import PeriodicKernel, norm, vhalf_matrix

CLAMP = 1e-14


@dataclass(frozen=True, eq=False)
class BCSState:
    gamma: np.ndarray
    alpha: PeriodicKernel
    Gamma: np.ndarray
    beta: float
    generator: np.ndarray | None = None
    generator_eigs: np.ndarray | None = None

    @property
    def spectrum(self):
        if self.generator_eigs is not None:
            return expit(-self.beta * self.generator_eigs)
        return np.linalg.eigvalsh(self.Gamma)


def state_from_generator(K, grid, beta):
    """Gamma = 1/(1 + exp(beta K)) with gamma, alpha read off the blocks."""
    K = 0.5 * (K + K.conj().T)
    lam, U = np.linalg.eigh(K)
    G = (U * expit(-beta * lam)[None, :]) @ U.conj().T
    n = grid.n
    a = G[:n, n:] / grid.delta
    if np.isrealobj(K):
        a = a.real
    return BCSState(G[:n, :n], PeriodicKernel(grid, a, False), G, beta, K, lam)


def gamma_from_alpha(alpha, params, beta=None):
    beta = params.beta if beta is None else beta
    H = build_H(pairing_field(alpha, params), params)
    return state_from_generator(H.matrix, alpha.grid, beta)


def state_consistency(state, alpha, params):
    """|| Gamma_12 - alpha ||_{L2_h} and || Gamma_12 + 1/2 [tanh(beta H/2)]_12 ||_{L2_h}."""
    t12 = tanh_block12(pairing_field(alpha, params), params, state.beta)
    g12 = state.alpha.values
    return (norm(alpha.with_values(g12 - alpha.values, symmetric=False)),
            norm(alpha.with_values(g12 + 0.5 * t12.values, symmetric=False)))


def _entropy_from_logodds(x):
    """S(f) = -1/2 (f ln f + (1-f) ln(1-f)) at f = expit(-x), evaluated stably."""
    f = expit(-x)
    return 0.5 * (f * np.logaddexp(0, x) + (1 - f) * np.logaddexp(0, -x))


def _entropy_from_values(g):
    if np.any((g < CLAMP) | (g > 1 - CLAMP)):
        warnings.warn("Gamma eigenvalues clamped into [1e-14, 1 - 1e-14] for the entropy", RuntimeWarning)
    g = np.clip(g, CLAMP, 1 - CLAMP)
    return -0.5 * (g * np.log(g) + (1 - g) * np.log1p(-g))


def entropy(state):
    """Tr S(Gamma) over the 2n-dimensional doubled space."""
    if state.generator_eigs is not None:
        return float(np.sum(_entropy_from_logodds(state.beta * state.generator_eigs)))
    return float(np.sum(_entropy_from_values(np.linalg.eigvalsh(state.Gamma))))


def free_energy(state, params):
    """Tr[h gamma] - T Tr S(Gamma) - sum V |alpha|^2 per torus period."""
    grid = state.alpha.grid
    hm = h_matrix(grid, float(params.mu))
    kinetic = float(np.real(np.trace(hm @ state.gamma)))
    w = vhalf_matrix(params.potential, grid)
    pair = float(grid.delta ** 2 * np.sum(w * w * np.abs(state.alpha.values) ** 2))
    return kinetic - entropy(state) / state.beta - pair


def free_fermion_energy(grid, mu, beta):
    """-(1/beta) sum_k ln(1 + exp(-beta (k^2 - mu)))."""
    e = grid.rel_momenta() ** 2 - mu
    return float(-np.sum(np.logaddexp(0, -beta * e)) / beta)


def random_direction(grid, rng, scale=1.0):
    """Random real BdG-structured generator [[k1, k2], [k2, -k1]], k1, k2 symmetric."""
    n = grid.n
    k1 = rng.standard_normal((n, n))
    k2 = rng.standard_normal((n, n))
    k1 = 0.5 * (k1 + k1.T)
    k2 = 0.5 * (k2 + k2.T)
    K = np.block([[k1, k2], [k2, -k1]])
    return scale * K / np.linalg.norm(K, 2)


def _energy_along(state, params, K, s):
    moved = state_from_generator(state.generator + s * K, state.alpha.grid, state.beta)
    return free_energy(moved, params)


def directional_derivative(state, params, K, step=1e-5):
    """Central difference with one Richardson step."""
    d1 = (_energy_along(state, params, K, step) - _energy_along(state, params, K, -step)) / (2 * step)
    half = step / 2
    d2 = (_energy_along(state, params, K, half) - _energy_along(state, params, K, -half)) / (2 * half)
    return (4 * d2 - d1) / 3


def second_difference(state, params, K, step=1e-3):
    f0 = free_energy(state, params)
    return (_energy_along(state, params, K, step) - 2 * f0 + _energy_along(state, params, K, -step)) / step ** 2


def criticality_check(state, params, n_directions=8, step=1e-5, seed=0):
    """Largest |dF/ds| along Gamma(s) = expit(-beta (K0 + s K)), with random
    BdG-structured K. Directions built this way are always admissible
    (0 < Gamma(s) < 1), so none need resampling."""
    if state.generator is None:
        raise ParameterError("criticality needs a state built from a generator")
    rng = np.random.default_rng(seed)
    scale = max(abs(params.mu), params.potential.linf)
    F0 = free_energy(state, params)
    per = []
    for _ in range(n_directions):
        K = random_direction(state.alpha.grid, rng, scale)
        per.append(float(directional_derivative(state, params, K, step)))
    mx = float(np.max(np.abs(per)))
    return {"max_abs_derivative": mx, "relative": mx / max(abs(F0), 1e-300),
            "n_directions": n_directions, "resampled": 0, "free_energy": F0,
            "per_direction": per}


def pairing_direction(grid, params, alpha_star_kernel):
    """Generator change H(-2 V a) - H(0) for a pairing profile a."""
    sigma = pairing_field(alpha_star_kernel, params)
    n = grid.n
    s = grid.delta * sigma.values
    Z = np.zeros((n, n))
    return np.block([[Z, s], [s.conj(), Z]])


def log_ratio_residual(state, params, alpha, window=1e-6):
    """|| H(-2 V alpha) + (1/beta) ln(Gamma/(1 - Gamma)) ||_op on the spectral
    subspace where window <= Gamma <= 1 - window. Outside it the eigenvalues of
    Gamma are at roundoff level and their logs carry no information.

    Returns (residual, dimension of the window subspace).
    """
    H = build_H(pairing_field(alpha, params), params).matrix
    lam, U = np.linalg.eigh(state.Gamma)
    keep = (lam >= window) & (lam <= 1 - window)
    Uk = U[:, keep]
    lk = lam[keep]
    restricted = Uk.conj().T @ H @ Uk + np.diag(np.log(lk) - np.log1p(-lk)) / state.beta
    return float(np.linalg.norm(restricted, 2)), int(keep.sum())


def entropy_of_matrix(G):
    return float(np.sum(_entropy_from_values(np.linalg.eigvalsh(0.5 * (G + G.conj().T)))))
