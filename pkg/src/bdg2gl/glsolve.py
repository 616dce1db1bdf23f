"""Periodic Ginzburg-Landau equation on the unit torus.

    (-div Lambda0 grad - Lambda2 D) psi + Lambda3 |psi|^2 psi = 0

Pseudospectral: derivatives in Fourier space, the cubic term on a 3/2
zero-padded grid (exact for band-limited fields, i.e. 2/3-rule dealiasing).
"""
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import BifurcationError, ConvergenceError, NoSolutionError, ParameterError


@dataclass(frozen=True, eq=False)
class OrderParameter:
    psi: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.psi)
        if a.ndim not in (1, 2, 3) or len(set(a.shape)) != 1:
            raise ParameterError("psi must be sampled on an m^d grid")
        object.__setattr__(self, "psi", a)

    @property
    def dim(self):
        return self.psi.ndim

    @property
    def m(self):
        return self.psi.shape[0]

    def points(self):
        return np.arange(self.m) / self.m

    def coefficients(self):
        return np.fft.fftn(self.psi) / self.psi.size

    def norm(self, s=0):
        """H^s norm with unit-volume normalization (s = 0 gives L2)."""
        c = self.coefficients()
        return float(np.sqrt(np.sum((1 + _k2(self.m, self.dim)) ** s * np.abs(c) ** 2)))

    def max_imag_ratio(self):
        return float(np.abs(self.psi.imag).max() / max(np.abs(self.psi).max(), 1e-300))

    def translated(self, shift):
        return OrderParameter(np.roll(self.psi, shift, axis=tuple(range(self.dim))))

    def rotated(self, theta):
        return OrderParameter(np.exp(1j * theta) * self.psi)

    def to_csv(self, path):
        flat = np.asarray(self.psi, dtype=complex).ravel()
        idx = np.arange(flat.size)
        np.savetxt(path, np.column_stack([idx, flat.real, flat.imag]), delimiter=",",
                   header="grid_point,re,im", comments="", fmt=["%d", "%.17g", "%.17g"])


def _freqs(m, d):
    k = 2 * np.pi * np.fft.fftfreq(m, 1.0 / m)
    return np.meshgrid(*([k] * d), indexing="ij")


def _k2(m, d):
    return sum(k * k for k in _freqs(m, d))


def kinetic_symbol(coef, m, d):
    """(2 pi k) . Lambda0 (2 pi k) on the FFT grid."""
    ks = _freqs(m, d)
    L0 = coef.Lambda0
    if L0.shape != (d, d):
        raise ParameterError("Lambda0 dimension does not match psi")
    return sum(L0[i, j] * ks[i] * ks[j] for i in range(d) for j in range(d))


def _pad(c, M):
    """Zero-pad FFT-ordered coefficients from m^d to M^d."""
    m = c.shape[0]
    d = c.ndim
    out = np.zeros((M,) * d, dtype=complex)
    half = m // 2
    sl = [np.r_[0:half, M - half:M] for _ in range(d)]
    out[np.ix_(*sl)] = np.where(_nyquist_mask(m, d), 0, c)
    return out


def _truncate(C, m):
    M = C.shape[0]
    half = m // 2
    sl = [np.r_[0:half, M - half:M] for _ in range(C.ndim)]
    return C[np.ix_(*sl)]


def _nyquist_mask(m, d):
    idx = np.arange(m) == m // 2
    grids = np.meshgrid(*([idx] * d), indexing="ij")
    return np.logical_or.reduce(grids)


def cubic_term(psi, dealias=True):
    if not dealias:
        return np.abs(psi) ** 2 * psi
    m, d = psi.shape[0], psi.ndim
    M = 3 * m // 2
    c = np.fft.fftn(psi) / psi.size
    u = np.fft.ifftn(_pad(c, M)) * M ** d
    cub = np.fft.fftn(np.abs(u) ** 2 * u) / M ** d
    out = np.fft.ifftn(_truncate(cub, m)) * psi.size
    return out.real if np.isrealobj(psi) else out


def _linear_part(psi, coef, D):
    sym = kinetic_symbol(coef, psi.shape[0], psi.ndim) - coef.Lambda2 * D
    out = np.fft.ifftn(sym * np.fft.fftn(psi))
    return out.real if np.isrealobj(psi) else out


def gl_residual(psi, coef, D, dealias=True):
    p = psi.psi
    field = _linear_part(p, coef, D) + coef.Lambda3 * cubic_term(p, dealias)
    r = OrderParameter(field)
    return r, r.norm()


def constant_branch(coef, D, m=64, dim=None):
    dim = coef.Lambda0.shape[0] if dim is None else dim
    if not coef.Lambda2 * D > 0:
        raise ParameterError("constant branch needs Lambda2 D > 0")
    return OrderParameter(np.full((m,) * dim, np.sqrt(coef.Lambda2 * D / coef.Lambda3)))


def plane_wave(coef, D, k, m=64):
    """c exp(2 pi i k.x) with c^2 = (Lambda2 D - 4 pi^2 k.Lambda0 k)/Lambda3."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    d = k.size
    gap = coef.Lambda2 * D - 4 * np.pi ** 2 * k @ coef.Lambda0 @ k
    if gap <= 0:
        raise NoSolutionError("plane wave above the kinetic threshold has no amplitude")
    x = np.meshgrid(*([np.arange(m) / m] * d), indexing="ij")
    phase = sum(ki * xi for ki, xi in zip(k, x))
    return OrderParameter(np.sqrt(gap / coef.Lambda3) * np.exp(2j * np.pi * phase))


def bifurcation_thresholds(coef, kmax=3):
    """Sorted distinct eigenvalues 4 pi^2 k.Lambda0 k of -div Lambda0 grad,
    with the matching D = eigenvalue/Lambda2."""
    d = coef.Lambda0.shape[0]
    vals = set()
    for k in itertools.product(range(-kmax, kmax + 1), repeat=d):
        k = np.array(k, dtype=float)
        vals.add(round(float(4 * np.pi ** 2 * k @ coef.Lambda0 @ k), 12))
    ev = np.array(sorted(vals))
    return ev, ev / coef.Lambda2


### Newton

def _pack(psi, real):
    return psi.ravel().real.copy() if real else np.concatenate([psi.real.ravel(), psi.imag.ravel()])


def _unpack(x, shape, real):
    if real:
        return x.reshape(shape)
    n = x.size // 2
    return (x[:n] + 1j * x[n:]).reshape(shape)


def _linearized(psi, v, coef, D, dealias):
    """Derivative of the residual at psi in direction v (psi, v independent)."""
    lin = _linear_part(v, coef, D)
    if dealias:
        m, d = psi.shape[0], psi.ndim
        M = 3 * m // 2
        up = np.fft.ifftn(_pad(np.fft.fftn(psi) / psi.size, M)) * M ** d
        vp = np.fft.ifftn(_pad(np.fft.fftn(v) / v.size, M)) * M ** d
        nl = np.fft.fftn(2 * np.abs(up) ** 2 * vp + up * up * np.conj(vp)) / M ** d
        nl = np.fft.ifftn(_truncate(nl, m)) * psi.size
    else:
        nl = 2 * np.abs(psi) ** 2 * v + psi * psi * np.conj(v)
    out = lin + coef.Lambda3 * nl
    return out


def _jacobian(psi, coef, D, real, dealias):
    n = psi.size
    size = n if real else 2 * n
    J = np.empty((size, size))
    for j in range(size):
        e = np.zeros(size)
        e[j] = 1.0
        v = _unpack(e, psi.shape, real).astype(complex)
        col = _linearized(psi.astype(complex), v, coef, D, dealias)
        J[:, j] = _pack(col, False)[:n] if real else _pack(col, False)
    return J


def _symmetry_count(psi, real):
    count = 0
    if not real and np.abs(psi).max() > 0:
        count += 1
    c = np.fft.fftn(psi)
    for axis in range(psi.ndim):
        k = np.fft.fftfreq(psi.shape[axis], 1.0 / psi.shape[axis])
        shape = [1] * psi.ndim
        shape[axis] = -1
        if np.abs(k.reshape(shape) * c).max() > 1e-10 * max(np.abs(c).max(), 1e-300):
            count += 1
    return count


def newton_gl(coef, D, init, tol=1e-12, max_iter=50, real=None, dealias=True, sv_tol=1e-9):
    """Newton on the real-linearized GL residual (psi and conj(psi) treated
    independently). Symmetry zero modes (phase, translations) are removed by
    minimum-norm least squares; any further singular direction means psi sits
    on a bifurcation point."""
    if not tol > 0:
        raise ParameterError("tol must be positive")
    psi = np.array(init.psi)
    if real is None:
        real = np.isrealobj(psi)
    psi = psi.real.astype(float) if real else psi.astype(complex)
    history = []
    for it in range(max_iter + 1):
        r, rn = gl_residual(OrderParameter(psi), coef, D, dealias)
        history.append(rn)
        if rn <= tol:
            return OrderParameter(psi), {"iterations": it, "residual": rn, "history": history}
        J = _jacobian(psi, coef, D, real, dealias)
        U, s, Vt = np.linalg.svd(J)
        small = int(np.sum(s < sv_tol * s[0]))
        allowed = _symmetry_count(psi, real)
        if small > allowed:
            raise BifurcationError(
                f"singular GL Jacobian ({small} null directions, {allowed} from symmetries): "
                "Lambda2 D is at an eigenvalue of -div Lambda0 grad")
        keep = s >= sv_tol * s[0]
        rhs = _pack(r.psi.astype(complex), False)
        rhs = rhs[:psi.size] if real else rhs
        step = Vt[keep].T @ ((U[:, keep].T @ rhs) / s[keep])
        psi = psi - _unpack(step, psi.shape, real)
    raise ConvergenceError(f"GL Newton did not converge in {max_iter} steps", history)


### one-dimensional phase plane

def _first_integral(coef, D, psi, dpsi):
    L0, L2, L3 = coef.Lambda0[0, 0], coef.Lambda2, coef.Lambda3
    return 0.5 * L0 * dpsi ** 2 + 0.5 * L2 * D * psi ** 2 - 0.25 * L3 * psi ** 4


def _rhs(coef, D):
    L0, L2, L3 = coef.Lambda0[0, 0], coef.Lambda2, coef.Lambda3

    def f(x, y):
        return [y[1], (-L2 * D * y[0] + L3 * y[0] ** 3) / L0]
    return f


_RTOL = 1e-13
_ATOL = 1e-15


def quarter_period(coef, D, slope):
    """Distance from psi = 0 (psi' = slope > 0) to the turning point psi' = 0."""
    f = _rhs(coef, D)
    ev = lambda x, y: y[1]
    ev.terminal = True
    ev.direction = -1
    L0, L2 = coef.Lambda0[0, 0], coef.Lambda2 * D
    span = 50 * np.pi * np.sqrt(L0 / L2)
    sol = solve_ivp(f, (0, span), [0.0, slope], method="DOP853", rtol=_RTOL, atol=_ATOL, events=ev)
    if not sol.t_events[0].size:
        return np.inf
    return float(sol.t_events[0][0])


def separatrix_slope(coef, D):
    """psi'(0) of the orbit through the saddles +-sqrt(Lambda2 D/Lambda3)."""
    L0, L2, L3 = coef.Lambda0[0, 0], coef.Lambda2 * D, coef.Lambda3
    E_sep = L2 * L2 / (4 * L3)
    return np.sqrt(2 * E_sep / L0)


def linear_period(coef, D):
    return 2 * np.pi * np.sqrt(coef.Lambda0[0, 0] / (coef.Lambda2 * D))


def phase_plane_1d(coef, D, k=1, m=128, with_report=False):
    """Real non-constant solution of period 1/k by shooting from psi(0) = 0.

    Orbits around psi = 0 have periods in (linear_period, inf); the slope
    psi'(0) is tuned so that the quarter period equals 1/(4k).
    """
    if coef.Lambda0.shape != (1, 1):
        raise ParameterError("phase-plane construction is one-dimensional")
    target = 1.0 / (4 * k)
    if linear_period(coef, D) >= 1.0 / k:
        raise NoSolutionError("no periodic orbit of period 1/k at this D: below the first bifurcation")
    v_sep = separatrix_slope(coef, D)
    lo, hi = 1e-8 * v_sep, v_sep * (1 - 1e-12)
    g = lambda v: quarter_period(coef, D, v) - target
    if g(hi) < 0:
        raise NoSolutionError("orbit periods near the separatrix still below 1/k")
    slope = brentq(g, lo, hi, xtol=1e-15 * v_sep, rtol=1e-15, maxiter=200)
    x = np.arange(m) / m
    xk = np.mod(x, 1.0 / k)
    sol = solve_ivp(_rhs(coef, D), (0, 1.0 / k), [0.0, slope], method="DOP853",
                    rtol=_RTOL, atol=_ATOL, t_eval=np.unique(xk), dense_output=True)
    y = sol.sol(xk)
    psi = OrderParameter(y[0])
    if not with_report:
        return psi
    E = _first_integral(coef, D, y[0], y[1])
    return psi, {"slope": slope, "energy": float(E[0]),
                 "first_integral_drift": float(np.abs(E - E[0]).max()),
                 "amplitude": float(np.abs(y[0]).max()),
                 "linear_period": linear_period(coef, D)}


def orbit_period(coef, D, slope):
    return 4 * quarter_period(coef, D, slope)


def elliptic_solution(coef, D, k=1, m=128):
    """Closed form a sn(omega x | q) of the period-1/k orbit (independent check)."""
    from scipy.special import ellipj, ellipk
    L0, L2, L3 = coef.Lambda0[0, 0], coef.Lambda2 * D, coef.Lambda3
    per = lambda q: 4 * ellipk(q) * np.sqrt(L0 * (1 + q) / L2) - 1.0 / k
    q = brentq(per, 0.0, 1 - 1e-15, xtol=1e-16)
    omega = np.sqrt(L2 / (L0 * (1 + q)))
    amp = np.sqrt(2 * q * L2 / (L3 * (1 + q)))
    sn = ellipj(omega * np.arange(m) / m, q)[0]
    return OrderParameter(amp * sn)
