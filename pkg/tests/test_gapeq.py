import numpy as np
import pytest
from scipy.integrate import quad

from bdg2gl.errors import AssumptionViolation
from bdg2gl.gapeq import (alpha_star_residual, collinearity_residual, find_Tc,
                          lowest_eig_ellT, reference_grid)
from bdg2gl.model import LatticeGrid, ModelParams, Potential

SMALL = dict(n_rel=128, widths=40.0)


def _params(v0=20.0):
    return ModelParams(Potential.gaussian(v0, 0.25), 1.0)


def test_zero_potential_gives_identity():
    p = ModelParams(Potential.from_table([-1.0, 0.0, 1.0], [0.0, 0.0, 0.0]), 1.0)
    lam, _ = lowest_eig_ellT(1.0, p, LatticeGrid.relative(64, 10.0))
    assert lam == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(AssumptionViolation):
        find_Tc(p, LatticeGrid.relative(64, 10.0))


def test_lowest_eig_increasing_in_T():
    p = _params()
    grid = reference_grid(p.potential, **SMALL)
    T = np.linspace(1.0, 20.0, 20)
    lam = [lowest_eig_ellT(t, p, grid)[0] for t in T]
    assert np.all(np.diff(lam) > 0)


def test_stronger_coupling_lowers_eigenvalue_and_raises_Tc():
    grid = reference_grid(Potential.gaussian(20.0, 0.25), **SMALL)
    a, _ = lowest_eig_ellT(5.0, _params(20.0), grid)
    b, _ = lowest_eig_ellT(5.0, _params(40.0), grid)
    assert b < a
    assert find_Tc(_params(40.0), grid).Tc > find_Tc(_params(20.0), grid).Tc


def test_tolerance_insensitivity():
    p = _params()
    grid = reference_grid(p.potential, **SMALL)
    a = find_Tc(p, grid, tol=1e-10).Tc
    b = find_Tc(p, grid, tol=1e-8).Tc
    assert abs(a - b) <= 1e-7


def test_reference_gapdata_properties(params, reference):
    gd, _ = reference
    assert abs(gd.lowest_eig) <= 1e-8
    assert gd.theta > 0
    assert alpha_star_residual(gd, params) <= 1e-8
    assert collinearity_residual(gd) <= 1e-8
    n = gd.grid.n_rel
    refl = (-np.arange(n)) % n
    for f in (gd.phi_star, gd.alpha_star):
        assert np.isrealobj(f)
        assert np.abs(f - f[refl]).max() <= 1e-10 * np.abs(f).max()


def test_t_star_values(reference):
    gd, _ = reference
    p = np.linspace(0, 10, 11)
    assert np.allclose(gd.t(p), gd.t(-p), rtol=0, atol=1e-14)
    u = gd.potential_samples * gd.alpha_star
    t0 = 2 * gd.grid.delta_rel * np.sum(u) / np.sqrt(2 * np.pi)
    assert gd.t(0.0) == pytest.approx(t0, rel=1e-13)


def test_t_star_plancherel(reference):
    """int |t_*|^2 dp = 4 ||V alpha_*||^2 (unitary FT in d = 1)."""
    gd, _ = reference
    u = gd.potential_samples * gd.alpha_star
    rhs = 4 * gd.grid.delta_rel * np.sum(u ** 2)
    pmax = np.abs(gd.grid.rel_momenta()).max()
    lhs = 2 * quad(lambda x: gd.t(x) ** 2, 0, pmax, limit=400, epsabs=0, epsrel=1e-12)[0]
    assert lhs == pytest.approx(rhs, rel=1e-8)


def test_golden_tc_oracle(reference):
    import json
    from importlib import resources
    golden = json.loads(resources.files("bdg2gl").joinpath("data/golden.json").read_text())
    assert abs(reference[0].Tc - golden["Tc"]) <= 1e-7
