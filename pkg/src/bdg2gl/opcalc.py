"""Calculus for periodic two-point kernels on a single lattice torus.

A kernel K[i, j] approximates sigma(x_i, y_j) on the torus of circumference
1/h with n points. As an operator it acts as (K f)_i = delta sum_j K[i, j] f_j.

Plane-wave coefficients c(k1, k2) are defined by
    K[i, j] = sum_{k1, k2} c(k1, k2) exp(i k1 x_i - i k2 x_j).
Center-of-mass momentum is Q = k1 - k2 (wrapped to the lattice band), the
relative momentum is p = (k1 + k2)/2, and q = Q/h lies in 2 pi Z.
"""
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import circulant

from .errors import ParameterError
from .model import LatticeGrid, Potential


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PeriodicKernel:
    grid: LatticeGrid
    values: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        n = self.grid.n
        vals = np.asarray(self.values)
        if vals.shape != (n, n):
            raise ParameterError(f"kernel shape {vals.shape} does not match grid n={n}")
        if self.symmetric:
            scale = max(np.abs(vals).max(), 1.0)
            if np.abs(vals - vals.T).max() > 1e-12 * scale:
                raise ParameterError("kernel flagged symmetric but K[x,y] != K[y,x]")
        object.__setattr__(self, "values", _readonly(vals))

    @property
    def n(self):
        return self.grid.n

    @property
    def delta(self):
        return self.grid.delta

    def operator(self):
        """Matrix of the operator under the delta-weighted composition rule."""
        return self.delta * self.values

    def conj(self):
        return PeriodicKernel(self.grid, np.conj(self.values), self.symmetric)

    def with_values(self, values, symmetric=None):
        sym = self.symmetric if symmetric is None else symmetric
        return PeriodicKernel(self.grid, values, sym)

    def __add__(self, other):
        _check_same_grid(self, other)
        return PeriodicKernel(self.grid, self.values + other.values,
                              self.symmetric and other.symmetric)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return PeriodicKernel(self.grid, self.values - other.values,
                              self.symmetric and other.symmetric)

    def __mul__(self, scalar):
        return PeriodicKernel(self.grid, scalar * self.values, self.symmetric)

    __rmul__ = __mul__

    def __neg__(self):
        return PeriodicKernel(self.grid, -self.values, self.symmetric)

    @classmethod
    def zeros(cls, grid, dtype=float):
        return cls(grid, np.zeros((grid.n, grid.n), dtype=dtype), True)

    @classmethod
    def identity(cls, grid):
        return cls(grid, np.eye(grid.n) / grid.delta, True)


def _check_same_grid(a, b):
    if not a.grid.same_as(b.grid):
        raise ParameterError("kernels live on different grids")


### plane waves and sectors

def planewave_coeffs(values):
    """c(k1, k2) on the FFT-ordered momentum lattice."""
    n = values.shape[0]
    return np.fft.fft(np.fft.ifft(values, axis=1), axis=0) / n


def from_planewave(coeffs):
    n = coeffs.shape[0]
    return np.fft.fft(np.fft.ifft(coeffs, axis=0), axis=1) * n


@lru_cache(maxsize=16)
def _sector_columns(n):
    a = np.arange(n)
    cols = (a[None, :] - a[:, None]) % n
    cols.setflags(write=False)
    return cols


def wrap_index(m, n):
    m = np.asarray(m)
    return np.where(m < n // 2, m, m - n)


@dataclass(frozen=True, eq=False)
class FourierKernel:
    """sigma_hat(q, p): row m is the center-of-mass sector q = 2 pi wrap(m),
    column a is the left momentum k1 = k_a, so k2 = k_{(a - m) mod n}.

    Normalized so that sum_q sum_p |sigma_hat|^2 * dp = ||sigma||^2_{L2_h}.
    """
    grid: LatticeGrid
    values: np.ndarray

    @property
    def dp(self):
        return 2 * np.pi * self.grid.h

    @property
    def q(self):
        return 2 * np.pi * wrap_index(np.arange(self.grid.n), self.grid.n)

    @property
    def k1(self):
        k = self.grid.rel_momenta()
        return np.broadcast_to(k[None, :], (self.grid.n, self.grid.n))

    @property
    def k2(self):
        k = self.grid.rel_momenta()
        return k[_sector_columns(self.grid.n)]

    @property
    def p(self):
        """Relative momentum k1 - h q/2 in the first zone (see sector_rel_momenta)."""
        return _pair_momentum(self.k1, self.grid.h * self.q[:, None], self.grid)

    def with_values(self, values):
        return FourierKernel(self.grid, values)


def _fourier_scale(grid):
    return 1.0 / (grid.h * np.sqrt(2 * np.pi))


def to_sectors(coeffs):
    n = coeffs.shape[0]
    return coeffs[np.arange(n)[None, :], _sector_columns(n)]


def from_sectors(sector_values):
    n = sector_values.shape[0]
    out = np.empty_like(sector_values)
    out[np.arange(n)[None, :], _sector_columns(n)] = sector_values
    return out


def com_rel_fourier(sigma):
    c = planewave_coeffs(sigma.values)
    return FourierKernel(sigma.grid, to_sectors(c) * _fourier_scale(sigma.grid))


def com_rel_inverse(fk, symmetric=False, real=None):
    c = from_sectors(fk.values) / _fourier_scale(fk.grid)
    vals = from_planewave(c)
    if real or (real is None and np.abs(vals.imag).max() <= 1e-13 * max(np.abs(vals).max(), 1e-300)):
        vals = vals.real
    return PeriodicKernel(fk.grid, vals, symmetric)


### norms

def singular_values(sigma):
    return np.linalg.svd(sigma.operator(), compute_uv=False)


def norm(sigma, kind="L2h", p=None, s=None):
    """Norms of a periodic kernel.

    kind: "L2h" (position space), "Lp" (needs p >= 1, p = inf is the
    operator norm), "Hs" (needs s >= 0, Fourier weight (1+|q|^2)^s) or "op".
    """
    h = sigma.grid.h
    if kind == "L2h":
        return float(np.sqrt(h * sigma.delta ** 2 * np.sum(np.abs(sigma.values) ** 2)))
    if kind == "op":
        return float(singular_values(sigma)[0])
    if kind == "Lp":
        if p is None or not p >= 1:
            raise ParameterError("Lp norm needs p >= 1")
        sv = singular_values(sigma)
        if np.isinf(p):
            return float(sv[0])
        return float((h * np.sum(sv ** p)) ** (1.0 / p))
    if kind == "Hs":
        if s is None or not s >= 0:
            raise ParameterError("Hs norm needs s >= 0")
        fk = com_rel_fourier(sigma)
        weight = (1.0 + fk.q ** 2) ** s
        return float(np.sqrt(fk.dp * np.sum(weight[:, None] * np.abs(fk.values) ** 2)))
    raise ParameterError(f"unknown norm kind {kind!r}")


def h1_commutator_norm(sigma):
    """sqrt(||sigma||^2 + h^-2 ||[p, sigma]||^2) with spectral p = -i d/dx.

    Agrees with the Fourier-weight H1 norm except for band-edge wraparound.
    """
    grid = sigma.grid
    k = grid.rel_momenta()
    c = planewave_coeffs(sigma.values)
    comm = from_planewave((k[:, None] - k[None, :]) * c)
    comm_k = PeriodicKernel(grid, comm)
    return float(np.sqrt(norm(sigma) ** 2 + norm(comm_k) ** 2 / grid.h ** 2))


def trace_unit_volume(sigma):
    return complex(sigma.delta * np.trace(sigma.values))


### algebra

def kernel_compose(sigma, sigma2):
    _check_same_grid(sigma, sigma2)
    return PeriodicKernel(sigma.grid, sigma.delta * sigma.values @ sigma2.values)


def kernel_apply(sigma, f):
    f = np.asarray(f)
    if f.shape != (sigma.n,):
        raise ParameterError("lattice function has the wrong length")
    return sigma.delta * sigma.values @ f


@lru_cache(maxsize=32)
def _vhalf_matrix_cached(potential, grid):
    w = np.sqrt(potential.periodized(grid.rel_offsets(), grid.len_rel))
    mat = circulant(w)
    mat.setflags(write=False)
    return mat


def vhalf_matrix(potential, grid):
    """V^{1/2}(x_i - x_j) on the torus (periodized potential)."""
    if not isinstance(potential, Potential):
        raise ParameterError("expected a Potential")
    return _vhalf_matrix_cached(potential, grid)


def vhalf_multiply(potential, sigma, side="left"):
    """Entrywise V^{1/2}(x-y) sigma(x,y); side="both" multiplies by V."""
    w = vhalf_matrix(potential, sigma.grid)
    if side in ("left", "right"):
        vals = w * sigma.values
    elif side == "both":
        vals = w * w * sigma.values
    else:
        raise ParameterError(f"unknown side {side!r}")
    return PeriodicKernel(sigma.grid, vals, sigma.symmetric)


### product kernels Psi(X) f(r)

def sector_rel_momenta(grid, m):
    """Relative momenta p = k1 - Q/2 of the plane-wave pairs in sector m,
    reduced to the zone [-pi/delta, pi/delta).

    Taking k1 - Q/2 rather than (k1 + k2)/2 matters when k2 = k1 - Q has
    wrapped around the band edge: the midpoint would then sit near p = 0.
    """
    Q = 2 * np.pi * grid.h * wrap_index(m, grid.n)
    return _pair_momentum(grid.rel_momenta(), Q, grid)


def _to_zone(p, delta):
    half = np.pi / delta
    return np.mod(p + half, 2 * half) - half


def _pair_momentum(k1, Q, grid):
    """Zone-reduced k1 - Q/2. In the Nyquist sector Q = +-pi/delta is itself
    ambiguous; there the smaller of |k1 -+ Q/2| is taken, which keeps the
    choice invariant under conjugation and under swapping x and y."""
    p = _to_zone(k1 - 0.5 * Q, grid.delta)
    nyq = np.isclose(np.abs(Q), np.pi / grid.delta)
    if np.any(nyq):
        alt = _to_zone(k1 + 0.5 * Q, grid.delta)
        p = np.where(nyq & (np.abs(alt) < np.abs(p)), alt, p)
    return p


def pair_rel_momenta(grid):
    """p[a, b] = k_a - Q/2 for the plane-wave pair (k_a, k_b), Q = k_a - k_b wrapped."""
    n = grid.n
    a = np.arange(n)
    Q = 2 * np.pi * grid.h * wrap_index((a[:, None] - a[None, :]) % n, n)
    return _pair_momentum(grid.rel_momenta()[:, None], Q, grid)


def relative_transform(grid, f_rel, p):
    """F(p) = delta sum_j f(r_j) exp(-i p r_j), relative samples in FFT order."""
    r = grid.rel_offsets()
    p = np.asarray(p, dtype=float)
    return grid.delta_rel * (np.exp(-1j * p[..., None] * r) @ f_rel)


def com_coefficients(psi_com):
    """Psi_hat_m with Psi(X_i) = sum_m Psi_hat_m exp(i Q_m X_i)."""
    return np.fft.fft(psi_com) / len(psi_com)


def com_samples(psi_hat):
    return np.fft.ifft(psi_hat) * len(psi_hat)


def product_kernel(grid, psi_hat, f_rel, symmetric=True):
    """Kernel of Psi(X) f(r) for a center-of-mass profile given by its
    sector coefficients psi_hat (FFT order) and relative samples f_rel."""
    n = grid.n
    L = grid.period
    cols = _sector_columns(n)
    coeffs = np.zeros((n, n), dtype=complex)
    for m in np.flatnonzero(np.abs(psi_hat) > 0):
        a = np.arange(n)
        coeffs[a, cols[m]] = psi_hat[m] * relative_transform(grid, f_rel, sector_rel_momenta(grid, m)) / L
    vals = from_planewave(coeffs)
    if np.all(np.isreal(psi_hat)) and np.abs(vals.imag).max() <= 1e-13 * max(np.abs(vals).max(), 1e-300):
        vals = vals.real
    if symmetric:
        vals = 0.5 * (vals + vals.T)
    return PeriodicKernel(grid, vals, symmetric)


def random_kernel(grid, rng, symmetric=True, real=True, bandwidth=None):
    """Random test kernel; ``bandwidth`` limits plane waves to |k| <= bandwidth."""
    n = grid.n
    a = rng.standard_normal((n, n))
    if not real:
        a = a + 1j * rng.standard_normal((n, n))
    if bandwidth is not None:
        k = grid.rel_momenta()
        mask = (np.abs(k) <= bandwidth)
        c = planewave_coeffs(a) * (mask[:, None] & mask[None, :])
        a = from_planewave(c)
        a = a.real if real else a
    if symmetric:
        a = 0.5 * (a + a.T)
    return PeriodicKernel(grid, a, symmetric)


### external formats

_HEADER = struct.Struct("<IdI")
FLAG_SYMMETRIC = 1


def dump_kernel(sigma, path):
    flags = FLAG_SYMMETRIC if sigma.symmetric else 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(sigma.n, sigma.grid.h, flags))
        fh.write(np.ascontiguousarray(sigma.values, dtype="<c16").tobytes())


def load_kernel(path):
    with open(path, "rb") as fh:
        n, h, flags = _HEADER.unpack(fh.read(_HEADER.size))
        vals = np.frombuffer(fh.read(), dtype="<c16").reshape(n, n)
    grid = LatticeGrid.torus(n, h)
    if np.all(vals.imag == 0):
        vals = vals.real
    return PeriodicKernel(grid, vals, bool(flags & FLAG_SYMMETRIC))


def export_kernel_csv(sigma, path):
    n = sigma.n
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    vals = np.asarray(sigma.values, dtype=complex)
    table = np.column_stack([ii.ravel(), jj.ravel(), vals.real.ravel(), vals.imag.ravel()])
    np.savetxt(path, table, delimiter=",", header="x_index,y_index,re,im", comments="",
               fmt=["%d", "%d", "%.17g", "%.17g"])
