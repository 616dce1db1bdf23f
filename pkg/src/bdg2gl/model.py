"""Model parameters, potentials, lattice grids and scalar special functions.

Units: hbar = 2m = 1, so the one-body operator is -Laplacian - mu.
"""
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, ParameterError

EPS_SWITCH = 1e-4      # removable-singularity branch radius (dimensionless)
Z_BIG = 30.0           # exponent rescaling threshold for g1, g2
G_SERIES_RADIUS = 0.2  # the closed forms of g1, g2 cancel ~|z|^-2 digits below this

TABLE_HEADER = "# bdg2gl-potential v1"


### scalar special functions

def matsubara_freq(n, beta):
    """omega_n = pi (2n + 1) / beta."""
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    return np.pi * (2 * np.asarray(n) + 1) / beta


def _log_sech(x):
    ax = np.abs(x)
    return np.log(2.0) - ax - np.log1p(np.exp(-2.0 * ax))


def _log_sinhc(x):
    """log(sinh(x)/x), with a Taylor branch at the removable point."""
    ax = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(ax)
    small = ax < EPS_SWITCH
    xs = ax[small]
    out[small] = np.log1p(xs * xs / 6.0)
    xl = ax[~small]
    out[~small] = xl + np.log(-np.expm1(-2.0 * xl)) - np.log(2.0) - np.log(xl)
    return out


def xi_beta(E, Eprime, beta):
    """Xi_beta(E, E') = (tanh(beta E/2) + tanh(beta E'/2)) / (E + E').

    Evaluated through tanh a + tanh b = sinh(a+b) / (cosh a cosh b), so the
    only removable point is sinh(x)/x at x = beta (E+E')/2, handled by its
    Taylor series for |x| < EPS_SWITCH. Overflow-free for all real inputs.
    """
    if not np.all(np.asarray(beta) > 0):
        raise ParameterError("beta must be positive")
    E = np.asarray(E, dtype=float)
    Ep = np.asarray(Eprime, dtype=float)
    a = 0.5 * beta * E
    b = 0.5 * beta * Ep
    logv = _log_sinhc(a + b) + _log_sech(a) + _log_sech(b)
    out = 0.5 * beta * np.exp(logv)
    return out if out.ndim else float(out)


def chi_beta(E, beta):
    """chi_beta(E) = tanh(beta E/2)/E = Xi_beta(E, E)."""
    return xi_beta(E, E, beta)


def chi_beta_difference(E, beta, beta_ref):
    """chi_beta(E) - chi_beta_ref(E) without cancellation for beta close to beta_ref."""
    E = np.asarray(E, dtype=float)
    a = 0.5 * beta * E
    b = 0.5 * beta_ref * E
    d = 0.5 * (beta - beta_ref)
    # tanh a - tanh b = sinh(a-b)/(cosh a cosh b), and (a-b)/E = d
    logv = _log_sinhc(d * E) + _log_sech(a) + _log_sech(b)
    out = d * np.exp(logv)
    return out if out.ndim else float(out)


def _sq_norm(p, vector):
    p = np.asarray(p, dtype=float)
    return np.sum(p * p, axis=-1) if vector else p * p


def f_beta(p, q, beta, mu, vector=False):
    """f_beta(p, q) = Xi_beta(|p|^2 - mu, |q|^2 - mu).

    With ``vector=True`` the last axis of p and q holds the components.
    """
    return xi_beta(_sq_norm(p, vector) - mu, _sq_norm(q, vector) - mu, beta)


# Taylor coefficients of g1 (odd powers) and g2 (even powers) at z = 0
_G1_SERIES = np.array([1 / 12, -1 / 60, 17 / 6720, -31 / 90720, 691 / 15966720,
                       -5461 / 1037836800, 929569 / 1494484992000,
                       -3202291 / 44460928512000])
_G2_SERIES = np.array([1 / 4, -1 / 12, 17 / 960, -31 / 10080, 691 / 1451520,
                       -5461 / 79833600, 929569 / 99632332800,
                       -3202291 / 2615348736000])


def _even_poly(coeffs, z2):
    return np.polynomial.polynomial.polyval(z2, coeffs)


def gl_weights(z):
    """Return (g1(z), g2(z)).

    g1 = (e^{2z} - 2z e^z - 1) / (z^2 (1+e^z)^2),
    g2 = 2 e^z (e^z - 1) / (z (e^z+1)^3).
    """
    z = np.asarray(z, dtype=float)
    g1 = np.empty_like(z)
    g2 = np.empty_like(z)
    small = np.abs(z) < G_SERIES_RADIUS
    big = z > Z_BIG
    mid = ~small & ~big

    zs = z[small]
    g1[small] = zs * _even_poly(_G1_SERIES, zs * zs)
    g2[small] = _even_poly(_G2_SERIES, zs * zs)

    zm = z[mid]
    ez = np.exp(zm)
    g1[mid] = (ez * ez - 2 * zm * ez - 1) / (zm * zm * (1 + ez) ** 2)
    g2[mid] = 2 * ez * (ez - 1) / (zm * (ez + 1) ** 3)

    zb = z[big]
    em = np.exp(-zb)
    g1[big] = (1 - 2 * zb * em - em * em) / (zb * zb * (em + 1) ** 2)
    g2[big] = 2 * em * (1 - em) / (zb * (1 + em) ** 3)

    if z.ndim == 0:
        return float(g1), float(g2)
    return g1, g2


def g1_over_z(z):
    """g1(z)/z, an even positive function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < G_SERIES_RADIUS
    zs = z[small]
    out[small] = _even_poly(_G1_SERIES, zs * zs)
    zl = z[~small]
    out[~small] = gl_weights(zl)[0] / zl
    return out if out.ndim else float(out)


### potentials

@dataclass(frozen=True)
class Potential:
    """Radial, nonnegative interaction V(|x|).

    ``kind`` is "gaussian" (v0 exp(-x^2/(2a^2))) or "table" (PCHIP through
    samples on a symmetric grid, zero outside the tabulated range when
    periodized, domain error when evaluated directly out of range).
    """
    kind: str = "gaussian"
    v0: float = 1.0
    a: float = 1.0
    table_x: tuple = ()
    table_v: tuple = ()
    l1: float = field(init=False)
    linf: float = field(init=False)
    x2_sup: float = field(init=False)

    def __post_init__(self):
        if self.kind == "gaussian":
            if not (self.v0 > 0 and self.a > 0):
                raise ParameterError("gaussian potential needs v0 > 0 and a > 0")
            l1 = self.v0 * self.a * np.sqrt(2 * np.pi)
            linf = self.v0
            x2 = 2 * self.a ** 2 * self.v0 / np.e
        elif self.kind == "table":
            x = np.asarray(self.table_x, dtype=float)
            v = np.asarray(self.table_v, dtype=float)
            if x.ndim != 1 or x.shape != v.shape or x.size < 3:
                raise ParameterError("table potential needs matching 1D samples")
            if np.any(np.diff(x) <= 0):
                raise ParameterError("table grid must be increasing")
            if not np.allclose(x, -x[::-1], rtol=0, atol=1e-12 * np.abs(x).max()):
                raise ParameterError("table grid must be symmetric about 0")
            if np.any(v < 0):
                raise ParameterError("table potential must be nonnegative")
            if not np.allclose(v, v[::-1], rtol=0, atol=1e-12 * max(v.max(), 1.0)):
                raise ParameterError("table potential must be reflection symmetric")
            l1 = float(np.trapezoid(v, x))
            linf = float(v.max())
            x2 = float(np.max(x * x * v))
        else:
            raise ParameterError(f"unknown potential kind {self.kind!r}")
        for name, val in (("l1", l1), ("linf", linf), ("x2_sup", x2)):
            if not np.isfinite(val):
                raise ParameterError(f"potential norm {name} is not finite")
            object.__setattr__(self, name, float(val))

    @classmethod
    def gaussian(cls, v0, a):
        return cls(kind="gaussian", v0=float(v0), a=float(a))

    @classmethod
    def from_table(cls, x, v):
        return cls(kind="table", table_x=tuple(map(float, x)), table_v=tuple(map(float, v)))

    @property
    def reach(self):
        """Radius beyond which V is treated as zero."""
        if self.kind == "gaussian":
            return self.a * np.sqrt(2 * np.log(self.v0 / 1e-300))
        return float(self.table_x[-1])

    def __call__(self, x):
        return potential_eval(self, x)

    def _eval_inside(self, r):
        if self.kind == "gaussian":
            return self.v0 * np.exp(-r * r / (2 * self.a * self.a))
        spline = PchipInterpolator(np.asarray(self.table_x), np.asarray(self.table_v))
        return np.maximum(spline(r), 0.0)

    def periodized(self, r, period):
        """sum_m V(r + m*period), with images truncated at ``reach``."""
        r = np.asarray(r, dtype=float)
        reach = self.reach
        m_max = int(np.ceil(reach / period)) + 1
        out = np.zeros_like(r)
        for m in range(-m_max, m_max + 1):
            s = np.abs(r + m * period)
            inside = s <= reach
            if np.any(inside):
                out[inside] += self._eval_inside(s[inside])
        return out


def potential_eval(V, x):
    """Pointwise V(|x|); out-of-range table lookups raise DomainError."""
    r = np.abs(np.asarray(x, dtype=float))
    if V.kind == "table" and np.any(r > V.table_x[-1] * (1 + 1e-12)):
        raise DomainError("position outside the tabulated range")
    out = V._eval_inside(r)
    return out if out.ndim else float(out)


def read_potential_table(path):
    with open(path) as fh:
        first = fh.readline().strip()
        if first != TABLE_HEADER:
            raise ParameterError(f"{path}: missing header {TABLE_HEADER!r}")
        data = np.loadtxt(fh, ndmin=2)
    return Potential.from_table(data[:, 0], data[:, 1])


def write_potential_table(path, x, v):
    np.savetxt(path, np.column_stack([x, v]), header=TABLE_HEADER[2:], comments="# ")


### parameters and grids

@dataclass(frozen=True)
class ModelParams:
    potential: Potential
    mu: float
    dim: int = 1
    D: float = 1.0
    h: float = 0.2
    beta_c: float | None = None

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ParameterError("dim must be 1, 2 or 3")
        if not self.D > 0:
            raise ParameterError("D must be positive")
        if not 0 < self.h <= 1:
            raise ParameterError("h must lie in (0, 1]")
        if self.beta_c is not None and not self.beta_c > 0:
            raise ParameterError("beta_c must be positive")

    @property
    def beta(self):
        if self.beta_c is None:
            raise ParameterError("beta_c not set; run find_Tc first")
        return self.beta_c * (1.0 + self.D * self.h ** 2)

    @property
    def T(self):
        return 1.0 / self.beta

    def with_beta_c(self, beta_c):
        return replace(self, beta_c=float(beta_c))

    def with_h(self, h):
        return replace(self, h=float(h))


def _is_pow2(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class LatticeGrid:
    """Relative-coordinate box and center-of-mass torus.

    The kernel pipeline uses a single torus of circumference 1/h with n
    points for both coordinates (see ``torus``).
    """
    n_rel: int
    len_rel: float
    n_com: int
    h: float

    def __post_init__(self):
        if not (_is_pow2(self.n_rel) and _is_pow2(self.n_com)):
            raise ParameterError("grid sizes must be powers of two")
        if not (self.len_rel > 0 and self.h > 0):
            raise ParameterError("len_rel and h must be positive")

    @classmethod
    def torus(cls, n, h):
        return cls(n_rel=n, len_rel=1.0 / h, n_com=n, h=h)

    @classmethod
    def relative(cls, n_rel, len_rel):
        """A relative-coordinate box only (used for T_c and alpha_*)."""
        return cls(n_rel=n_rel, len_rel=len_rel, n_com=1, h=1.0)

    @property
    def is_torus(self):
        return self.n_rel == self.n_com and np.isclose(self.len_rel * self.h, 1.0)

    @property
    def n(self):
        if not self.is_torus:
            raise ParameterError("kernel operations need a single-torus grid")
        return self.n_com

    @property
    def period(self):
        return 1.0 / self.h

    @property
    def delta(self):
        """Center-of-mass spacing 1/(h n_com); equals the relative spacing on a torus."""
        return 1.0 / (self.h * self.n_com)

    @property
    def delta_rel(self):
        return self.len_rel / self.n_rel

    def positions(self):
        return np.arange(self.n_com) * self.delta

    def rel_offsets(self):
        """Relative coordinates in FFT order, wrapped into [-len/2, len/2)."""
        j = np.arange(self.n_rel)
        j = np.where(j < self.n_rel // 2, j, j - self.n_rel)
        return j * self.delta_rel

    def rel_momenta(self):
        return 2 * np.pi * np.fft.fftfreq(self.n_rel, self.delta_rel)

    def com_momenta(self):
        """q in 2 pi Z (unit-torus frequencies), FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n_com, 1.0 / self.n_com)

    def same_as(self, other):
        return (self.n_rel == other.n_rel and self.n_com == other.n_com
                and np.isclose(self.len_rel, other.len_rel) and np.isclose(self.h, other.h))
