"""Self-consistent solution of alpha = -1/2 [tanh(beta H(-2 V alpha)/2)]_12."""
import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, ParameterError
from .linear import KT_kernel
from .nonlinear import NT_exact, NT_matsubara, tanh_block12
from .opcalc import PeriodicKernel, norm, vhalf_matrix


def pairing_field(alpha, params):
    """sigma = -2 V alpha (entrywise in x - y)."""
    w = vhalf_matrix(params.potential, alpha.grid)
    return alpha.with_values(-2.0 * w * w * alpha.values, symmetric=True)


def bdg_map(alpha, params, beta=None):
    t12 = tanh_block12(pairing_field(alpha, params), params, beta)
    vals = -0.5 * t12.values
    return PeriodicKernel(alpha.grid, 0.5 * (vals + vals.T), True)


@dataclass(frozen=True, eq=False)
class BdGSolution:
    alpha: PeriodicKernel
    phi: PeriodicKernel
    residual_direct: float
    residual_bs: float
    iterations: int
    h: float
    T: float
    converged: bool = True
    init_label: str = ""
    history: list = field(default_factory=list)

    def write_trace(self, path):
        cols = ["iteration", "residual_direct", "residual_bs", "norm_L2h", "norm_H1h"]
        with open(path, "w", newline="") as fh:
            wr = csv.DictWriter(fh, fieldnames=cols)
            wr.writeheader()
            for row in self.history:
                wr.writerow({k: (f"{row[k]:.17g}" if isinstance(row[k], float) else row[k]) for k in cols})


def phi_of(alpha, params):
    w = vhalf_matrix(params.potential, alpha.grid)
    return alpha.with_values(w * alpha.values)


class _Anderson:
    """Type-II Anderson acceleration on flattened real iterates."""

    def __init__(self, depth):
        self.depth = depth
        self.dx, self.df = [], []
        self.prev = None

    def reset(self):
        self.dx, self.df = [], []
        self.prev = None

    def step(self, x, f, damping):
        if self.prev is not None:
            px, pf = self.prev
            self.dx.append(x - px)
            self.df.append(f - pf)
            if len(self.dx) > self.depth:
                self.dx.pop(0)
                self.df.pop(0)
        self.prev = (x, f)
        if self.depth == 0 or not self.dx:
            return x + damping * f
        DF = np.column_stack(self.df)
        DX = np.column_stack(self.dx)
        gamma, *_ = np.linalg.lstsq(DF, f, rcond=1e-12)
        return x + damping * f - (DX + damping * DF) @ gamma


def bdg_fixed_point(params, grid, init, damping=0.5, tol=1e-11, max_iter=500,
                    anderson=6, beta=None, bs_nmax=None, init_label="", divergence_window=20):
    """Damped fixed-point iteration with optional Anderson mixing.

    Converged when ||F(alpha) - alpha||_{L2_h} <= tol max(||alpha||_{L2_h}, 1);
    the returned alpha is the iterate at which that residual was measured.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    if not 0 < damping <= 1:
        raise ParameterError("damping must lie in (0, 1]")
    if not init.grid.same_as(grid):
        raise ParameterError("init lives on a different grid")
    if np.iscomplexobj(init.values):
        raise ParameterError("init must be real")
    beta = params.beta if beta is None else beta
    alpha = PeriodicKernel(grid, 0.5 * (init.values + init.values.T), True)
    acc = _Anderson(anderson)
    history = []
    s = damping
    best = np.inf
    growth = 0
    prev_res = np.inf
    shape = alpha.values.shape
    for it in range(max_iter + 1):
        F = bdg_map(alpha, params, beta)
        diff = alpha.with_values(F.values - alpha.values)
        res = norm(diff)
        a_norm = norm(alpha)
        history.append({"iteration": it, "residual_direct": res, "residual_bs": float("nan"),
                        "norm_L2h": a_norm, "norm_H1h": norm(alpha, "Hs", s=1)})
        if res <= tol * max(a_norm, 1.0):
            rbs = bs_residual(phi_of(alpha, params), params, bs_nmax, beta)
            history[-1]["residual_bs"] = rbs
            return BdGSolution(alpha, phi_of(alpha, params), res, rbs, it, grid.h,
                               1.0 / beta, True, init_label, history)
        if res > prev_res:
            growth += 1
            if res > 2 * best:
                # mixing went astray: restart from plain damped steps
                acc.reset()
                s = max(0.5 * s, 1e-3)
        else:
            growth = 0
        best = min(best, res)
        prev_res = res
        if growth >= divergence_window:
            raise ConvergenceError(f"residual grew for {divergence_window} consecutive steps", history)
        x_new = acc.step(alpha.values.ravel(), diff.values.ravel(), s)
        v = x_new.reshape(shape)
        alpha = PeriodicKernel(grid, 0.5 * (v + v.T), True)
    raise ConvergenceError(f"no convergence in {max_iter} iterations (residual {res:.3e})", history)


def bs_residual(phi, params, n_max=None, beta=None):
    """|| phi - V^{1/2} K_T V^{1/2} phi + 1/2 V^{1/2} N_T(-2 V^{1/2} phi) ||_{L2_h}."""
    beta = params.beta if beta is None else beta
    w = vhalf_matrix(params.potential, phi.grid)
    sigma = phi.with_values(-2.0 * w * phi.values)
    kt = KT_kernel(phi.with_values(w * phi.values), beta, params.mu)
    nt = _nt(sigma, params, n_max, beta)
    res = phi.values - w * kt.values + 0.5 * w * nt.values
    return norm(phi.with_values(res, symmetric=False))


def _nt(sigma, params, n_max, beta):
    if n_max is None:
        return NT_exact(sigma, params, beta)
    return NT_matsubara(sigma, params, n_max, beta).kernel


def bs_to_alpha(phi, params, beta=None):
    """alpha = K_T V^{1/2} phi - 1/2 N_T(-2 V^{1/2} phi)."""
    beta = params.beta if beta is None else beta
    w = vhalf_matrix(params.potential, phi.grid)
    kt = KT_kernel(phi.with_values(w * phi.values), beta, params.mu)
    nt = NT_exact(phi.with_values(-2.0 * w * phi.values), params, beta)
    vals = kt.values - 0.5 * nt.values
    return PeriodicKernel(phi.grid, 0.5 * (vals + vals.T), True)
