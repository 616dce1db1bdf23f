import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdg2gl.errors import ParameterError
from bdg2gl.model import LatticeGrid, Potential
from bdg2gl.opcalc import (PeriodicKernel, com_coefficients, com_rel_fourier, com_rel_inverse,
                           dump_kernel, export_kernel_csv, h1_commutator_norm, kernel_apply,
                           kernel_compose, load_kernel, norm, product_kernel, random_kernel,
                           trace_unit_volume, vhalf_multiply)

seeds = st.integers(0, 2 ** 32 - 1)
sizes = st.sampled_from([8, 16, 32])
hs = st.floats(0.1, 1.0)


def _kernel(n, h, seed, **kw):
    return random_kernel(LatticeGrid.torus(n, h), np.random.default_rng(seed), **kw)


@settings(max_examples=30, deadline=None)
@given(sizes, hs, seeds, st.booleans())
def test_parseval_and_round_trip(n, h, seed, real):
    s = _kernel(n, h, seed, symmetric=False, real=real)
    fk = com_rel_fourier(s)
    assert np.sqrt(fk.dp * np.sum(np.abs(fk.values) ** 2)) == pytest.approx(norm(s), rel=1e-12)
    back = com_rel_inverse(fk)
    assert norm(back - s) <= 1e-12 * norm(s)


@settings(max_examples=30, deadline=None)
@given(sizes, hs, seeds)
def test_holder_and_triangle(n, h, seed):
    s = _kernel(n, h, seed, symmetric=False, real=False)
    t = _kernel(n, h, seed + 1, symmetric=False, real=False)
    st_ = kernel_compose(s, t)
    for p, q in ((2, np.inf), (6, 3), (np.inf, 2)):
        assert norm(st_) <= norm(s, "Lp", p=p) * norm(t, "Lp", p=q) * (1 + 1e-12)
    assert norm(s + t) <= (norm(s) + norm(t)) * (1 + 1e-12)


def test_translation_invariant_kernel_has_only_q0():
    grid = LatticeGrid.torus(32, 0.5)
    r = grid.rel_offsets()
    phi = np.exp(-r ** 2)
    i = np.arange(32)
    vals = phi[(i[:, None] - i[None, :]) % 32]
    fk = com_rel_fourier(PeriodicKernel(grid, vals, True))
    assert np.abs(fk.values[1:]).max() <= 1e-14 * np.abs(fk.values[0]).max()


def test_constant_product_kernel_norm():
    grid = LatticeGrid.torus(64, 0.5)
    r = grid.rel_offsets()
    f = np.exp(-r ** 2)
    f /= np.sqrt(grid.delta * np.sum(f ** 2))
    c = 1.7
    k = product_kernel(grid, com_coefficients(np.full(64, c)), f)
    assert norm(k) == pytest.approx(c, rel=1e-13)
    fk = com_rel_fourier(k)
    assert np.abs(fk.values[1:]).max() <= 1e-13


@pytest.mark.parametrize("s", [0, 1, 2])
def test_product_kernel_hs_norm_matches_com_norm(s):
    """For a narrow normalized relative profile, ||Psi f||_{H^s_h} = ||Psi||_{H^s}."""
    grid = LatticeGrid.torus(128, 0.25)
    r = grid.rel_offsets()
    f = np.exp(-2 * r ** 2)
    f /= np.sqrt(grid.delta * np.sum(f ** 2))
    X = grid.positions() * grid.h
    Psi = 1 + 0.3 * np.cos(2 * np.pi * X) + 0.1 * np.sin(4 * np.pi * X)
    ph = com_coefficients(Psi)
    m = np.fft.fftfreq(grid.n, 1.0 / grid.n)
    expected = np.sqrt(np.sum((1 + (2 * np.pi * m) ** 2) ** s * np.abs(ph) ** 2))
    k = product_kernel(grid, ph, f)
    assert norm(k, "Hs", s=s) == pytest.approx(expected, rel=1e-6)


def test_zero_kernel_norms():
    z = PeriodicKernel.zeros(LatticeGrid.torus(16, 0.5))
    assert norm(z) == norm(z, "op") == norm(z, "Hs", s=1) == norm(z, "Lp", p=6) == 0.0


def test_norm_validation():
    z = PeriodicKernel.zeros(LatticeGrid.torus(16, 0.5))
    with pytest.raises(ParameterError):
        norm(z, "Lp", p=0.5)
    with pytest.raises(ParameterError):
        norm(z, "bogus")


def test_trace_identity_and_rank_one():
    grid = LatticeGrid.torus(32, 0.5)
    assert trace_unit_volume(PeriodicKernel.identity(grid)).real == pytest.approx(32)
    f = np.random.default_rng(0).standard_normal(32)
    f /= np.sqrt(grid.delta * np.sum(f ** 2))
    assert trace_unit_volume(PeriodicKernel(grid, np.outer(f, f))).real == pytest.approx(1.0)


@settings(max_examples=20, deadline=None)
@given(sizes, seeds)
def test_trace_cyclicity(n, seed):
    s = _kernel(n, 0.5, seed, symmetric=False, real=False)
    sa = s.with_values(s.values.conj().T)
    assert trace_unit_volume(kernel_compose(sa, s)) == pytest.approx(
        trace_unit_volume(kernel_compose(s, sa)), rel=1e-12)


def test_compose_with_identity_and_apply():
    s = _kernel(16, 0.5, 3, symmetric=False)
    e = PeriodicKernel.identity(s.grid)
    assert np.allclose(kernel_compose(e, s).values, s.values, rtol=1e-14)
    f = np.arange(16.0)
    assert np.allclose(kernel_apply(e, f), f)


def test_vhalf_multiply_matches_loop():
    V = Potential.gaussian(3.0, 0.4)
    s = _kernel(16, 0.5, 7, symmetric=False)
    grid = s.grid
    x = grid.positions()
    out = vhalf_multiply(V, s, side="both").values
    for i in range(16):
        for j in range(16):
            d = (x[i] - x[j] + grid.period / 2) % grid.period - grid.period / 2
            assert out[i, j] == pytest.approx(V.periodized(np.array([d]), grid.period)[0] * s.values[i, j],
                                              rel=1e-12, abs=1e-300)


def test_h1_commutator_close_to_fourier_h1():
    grid = LatticeGrid.torus(64, 0.25)
    s = random_kernel(grid, np.random.default_rng(0), bandwidth=10.0)
    assert h1_commutator_norm(s) == pytest.approx(norm(s, "Hs", s=1), rel=1e-10)


def test_symmetric_flag_enforced():
    with pytest.raises(ParameterError):
        PeriodicKernel(LatticeGrid.torus(8, 0.5), np.arange(64.0).reshape(8, 8), True)


def test_dump_load_round_trip(tmp_path):
    s = _kernel(16, 0.3, 1)
    dump_kernel(s, tmp_path / "k.bin")
    t = load_kernel(tmp_path / "k.bin")
    assert t.symmetric and t.grid.same_as(s.grid)
    assert np.array_equal(t.values, s.values)
    export_kernel_csv(s, tmp_path / "k.csv")
    rows = np.loadtxt(tmp_path / "k.csv", delimiter=",", skiprows=1)
    assert rows.shape == (256, 4)
