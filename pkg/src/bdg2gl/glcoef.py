"""Ginzburg-Landau coefficients from the pair function t_*.

Conventions: Lambda0, Lambda2 and the symbol G carry the 1/(2 pi)^d measure.
The cubic coefficient is normalized so that the constant GL solution
sqrt(Lambda2 D / Lambda3) matches the amplitude of the BdG solution,
Lambda3 = (beta_c^2/8) int t_*^4 g1(beta_c(p^2-mu))/(p^2-mu) dp.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import roots_legendre

from .errors import NumericalError, ParameterError
from .model import chi_beta, chi_beta_difference, g1_over_z, gl_weights, xi_beta

GL_ORDER = 20
SPHERE_AREA = {1: 2.0, 2: 2 * np.pi, 3: 4 * np.pi}
Z_CUTOFF = 60.0


@dataclass(frozen=True)
class Quadrature:
    nodes: np.ndarray
    weights: np.ndarray
    p_max: float
    rule: str
    panels: int

    @property
    def node_count(self):
        return int(self.nodes.size)

    def metadata(self):
        return {"p_max": self.p_max, "rule": self.rule, "node_count": self.node_count,
                "panels": self.panels}


def _gl_panel(a, b, order):
    x, w = roots_legendre(order)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def adaptive_panels(fun, a, b, breakpoints=(), rtol=1e-14, order=GL_ORDER, max_panels=4000):
    """Split [a, b] until each panel's GL estimate agrees with its two halves.

    ``fun`` may return several integrands stacked along the last axis; the
    resulting node set is accurate for all of them at once.
    """
    edges = sorted({a, b, *[c for c in breakpoints if a < c < b]})
    stack = list(zip(edges[:-1], edges[1:]))
    whole = 0.0
    for lo, hi in stack:
        x, w = _gl_panel(lo, hi, order)
        whole = whole + np.abs(w @ fun(x))
    scale = np.maximum(np.atleast_1d(whole), 1e-300)
    accepted = []
    while stack:
        lo, hi = stack.pop()
        x, w = _gl_panel(lo, hi, order)
        coarse = w @ fun(x)
        mid = 0.5 * (lo + hi)
        xl, wl = _gl_panel(lo, mid, order)
        xr, wr = _gl_panel(mid, hi, order)
        fine = wl @ fun(xl) + wr @ fun(xr)
        if np.all(np.abs(np.atleast_1d(fine - coarse)) <= rtol * scale) or hi - lo < 1e-10 * (b - a):
            accepted.append((lo, hi))
        else:
            stack.extend([(lo, mid), (mid, hi)])
        if len(accepted) + len(stack) > max_panels:
            raise NumericalError("adaptive quadrature exceeded the panel budget")
    accepted.sort()
    xs, ws = zip(*(_gl_panel(lo, hi, order) for lo, hi in accepted))
    return np.concatenate(xs), np.concatenate(ws), accepted


def p_cutoff(beta, mu, margin=1.25):
    """Largest |p| with beta (p^2 - mu) <= 60, times a margin."""
    return margin * np.sqrt(max(mu, 0.0) + Z_CUTOFF / beta)


def radial_quadrature(gapdata, params, beta=None, rtol=1e-14, order=GL_ORDER, refine=1):
    beta = gapdata.beta_c if beta is None else beta
    mu = params.mu
    d = params.dim
    p_max = p_cutoff(beta, mu)
    t = _t_function(gapdata)

    def probe(p):
        E = p ** 2 - mu
        t2 = t(p) ** 2
        z = beta * E
        g1, g2 = gl_weights(z)
        cosh2 = np.exp(-2 * np.logaddexp(0.5 * z, -0.5 * z) + 2 * np.log(2.0))
        return np.column_stack([t2 * np.abs(g1), t2 * p * p * g2 * beta, t2 * cosh2,
                                t2 * t2 * g1_over_z(z)]) * p[:, None] ** (d - 1)

    breaks = [np.sqrt(mu)] if mu > 0 else []
    x, w, panels = adaptive_panels(probe, 0.0, p_max, breaks, rtol, order)
    if refine > 1:
        # split every accepted panel into ``refine`` equal pieces
        panels = [(lo + (hi - lo) * i / refine, lo + (hi - lo) * (i + 1) / refine)
                  for lo, hi in panels for i in range(refine)]
        xs, ws = zip(*(_gl_panel(lo, hi, order) for lo, hi in panels))
        x, w = np.concatenate(xs), np.concatenate(ws)
    return Quadrature(x, w, float(p_max), f"adaptive-gauss-legendre-{order}", len(panels))


def _t_function(gapdata):
    return gapdata.t


def _measure(d):
    """Radial measure factor |S^{d-1}| / (2 pi)^d."""
    return SPHERE_AREA[d] / (2 * np.pi) ** d


@dataclass(frozen=True)
class GLCoefficients:
    Lambda0: np.ndarray
    Lambda2: float
    Lambda3: float
    beta_c: float
    dim: int = 1
    quadrature: dict = field(default_factory=dict)
    lambda3_as_printed: float = float("nan")

    def __post_init__(self):
        L0 = np.atleast_2d(np.asarray(self.Lambda0, dtype=float))
        object.__setattr__(self, "Lambda0", L0)

    @classmethod
    def from_values(cls, Lambda0, Lambda2, Lambda3, dim=1, beta_c=1.0):
        return cls(np.atleast_2d(Lambda0) * np.ones((1, 1)) if np.ndim(Lambda0) == 0 else np.asarray(Lambda0),
                   float(Lambda2), float(Lambda3), float(beta_c), dim)

    def check(self):
        if not (self.Lambda2 > 0 and self.Lambda3 > 0):
            raise NumericalError("GL coefficients not positive: refine the quadrature")
        if not np.allclose(self.Lambda0, self.Lambda0.T) or np.linalg.eigvalsh(self.Lambda0)[0] <= 0:
            raise NumericalError("Lambda0 not positive definite: refine the quadrature")
        return self

    def to_json(self):
        return {"Lambda0": self.Lambda0.tolist(), "Lambda2": self.Lambda2,
                "Lambda3": self.Lambda3, "beta_c": self.beta_c, "dim": self.dim,
                "lambda3_as_printed": self.lambda3_as_printed,
                "quadrature": self.quadrature}


def lambda0_at(beta, gapdata, params, quad=None):
    quad = radial_quadrature(gapdata, params, beta) if quad is None else quad
    d = params.dim
    p = quad.nodes
    z = beta * (p ** 2 - params.mu)
    g1, g2 = gl_weights(z)
    t2 = gapdata.t(p) ** 2
    # angular average of p_i p_j is p^2 delta_ij / d
    integrand = t2 * (g1 + 2 * beta * p ** 2 * g2 / d) * p ** (d - 1)
    val = beta ** 2 / 16 * _measure(d) * (quad.weights @ integrand)
    return val * np.eye(d)


def gl_coefficients(gapdata, params, quad=None):
    beta = gapdata.beta_c
    d = params.dim
    quad = radial_quadrature(gapdata, params, beta) if quad is None else quad
    p = quad.nodes
    w = quad.weights * p ** (d - 1)
    z = beta * (p ** 2 - params.mu)
    t2 = gapdata.t(p) ** 2
    sech2 = np.exp(2 * np.log(2.0) - 2 * np.logaddexp(0.5 * z, -0.5 * z))
    L0 = lambda0_at(beta, gapdata, params, quad)
    L2 = beta / 8 * _measure(d) * (w @ (t2 * sech2))
    L3 = beta ** 3 / 8 * SPHERE_AREA[d] * (w @ (t2 * t2 * g1_over_z(z)))
    coef = GLCoefficients(L0, float(L2), float(L3), beta, d, quad.metadata(),
                          lambda3_as_printed=float(L3 / (2 * (2 * np.pi) ** d)))
    return coef.check()


def G_symbol(hq, gapdata, params, beta=None, quad=None, n_angle=64):
    """G(hq) = 1/(4 (2pi)^d) int (f(p,p) - f(p+hq/2, p-hq/2)) t_*^2 dp."""
    beta = params.beta if beta is None else beta
    hq = np.atleast_1d(np.asarray(hq, dtype=float))
    d = params.dim
    if hq.shape != (d,):
        raise ParameterError("hq must have dim components")
    if hq @ hq > 1:
        raise ParameterError("|hq|^2 must not exceed 1")
    quad = radial_quadrature(gapdata, params, beta) if quad is None else quad
    p = quad.nodes
    mu = params.mu
    t2 = gapdata.t(p) ** 2
    k2 = hq @ hq
    E0 = p ** 2 - mu
    if d == 1:
        # integrand even in p; sum over +-p covers R
        s = hq[0] * p
        diff = chi_beta(E0, beta) - xi_beta(E0 + s + k2 / 4, E0 - s + k2 / 4, beta)
        return float(2 * (quad.weights @ (diff * t2)) / (4 * 2 * np.pi))
    k = np.sqrt(k2)
    if k == 0:
        return 0.0
    if d == 2:
        th = (np.arange(n_angle) + 0.5) * 2 * np.pi / n_angle
        c, wc = np.cos(th), np.full(n_angle, 2 * np.pi / n_angle)
    else:
        c, wc = roots_legendre(n_angle)
        wc = 2 * np.pi * wc
    s = k * p[:, None] * c[None, :]
    diff = chi_beta(E0, beta)[:, None] - xi_beta(E0[:, None] + s + k2 / 4, E0[:, None] - s + k2 / 4, beta)
    radial = (diff @ wc) * t2 * p ** (d - 1)
    return float((quad.weights @ radial) / (4 * (2 * np.pi) ** d))


def G_hessian(gapdata, params, beta=None, step=1e-3, quad=None):
    """Central finite-difference Hessian of G at 0 (G(0) = 0)."""
    beta = params.beta if beta is None else beta
    quad = radial_quadrature(gapdata, params, beta) if quad is None else quad
    d = params.dim
    e = np.eye(d) * step
    H = np.empty((d, d))
    G = lambda v: G_symbol(v, gapdata, params, beta, quad)
    for i in range(d):
        H[i, i] = (G(e[i]) + G(-e[i])) / step ** 2
        for j in range(i):
            H[i, j] = H[j, i] = (G(e[i] + e[j]) - G(e[i] - e[j]) - G(e[j] - e[i]) + G(-e[i] - e[j])) / (4 * step ** 2)
    return H


def lambda2_tilde(h, gapdata, params, quad=None):
    """(1/(4 (2pi)^d)) int t_*^2 (chi_beta - chi_beta_c)(p^2 - mu) dp at beta = beta_c (1 + D h^2)."""
    if not 0 <= h <= 1:
        raise ParameterError("h must lie in [0, 1]")
    beta_c = gapdata.beta_c
    beta = beta_c * (1 + params.D * h ** 2)
    d = params.dim
    quad = radial_quadrature(gapdata, params, beta_c) if quad is None else quad
    p = quad.nodes
    diff = chi_beta_difference(p ** 2 - params.mu, beta, beta_c)
    t2 = gapdata.t(p) ** 2
    return float(SPHERE_AREA[d] * (quad.weights @ (t2 * diff * p ** (d - 1))) / (4 * (2 * np.pi) ** d))


_BRACKET_SERIES = np.array([2 / 3, -8 / 15, 34 / 105, -496 / 2835])
BRACKET_SERIES_RADIUS = 1e-2


def lambda3_bracket(E, beta):
    """tanh(beta E/2)/(2E^3) - beta/(4 E^2 cosh^2(beta E/2)), even in E."""
    E = np.asarray(E, dtype=float)
    x = 0.5 * beta * E
    out = np.empty_like(x)
    small = np.abs(x) < BRACKET_SERIES_RADIUS
    xs = x[small]
    out[small] = beta ** 3 / 16 * np.polynomial.polynomial.polyval(xs * xs, _BRACKET_SERIES)
    Eb = E[~small]
    xb = np.abs(x[~small])
    Eb = np.abs(Eb)
    sech2 = np.exp(2 * np.log(2.0) - 2 * (xb + np.log1p(np.exp(-2 * xb))))
    out[~small] = np.tanh(xb) / (2 * Eb ** 3) - beta * sech2 / (4 * Eb ** 2)
    return out if out.ndim else float(out)


def lambda3_closed(gapdata, params, epsrel=1e-13):
    """(1/4) int t_*^4 * bracket dp, by adaptive QUADPACK on [0, p_max]."""
    beta = gapdata.beta_c
    d = params.dim
    p_max = p_cutoff(beta, params.mu)
    f = lambda p: float(gapdata.t(p)) ** 4 * lambda3_bracket(p * p - params.mu, beta) * p ** (d - 1)
    pts = [np.sqrt(params.mu)] if params.mu > 0 else None
    val, err = integrate.quad(f, 0.0, p_max, points=pts, epsabs=0.0, epsrel=epsrel, limit=500)
    return float(SPHERE_AREA[d] / 4 * val)
