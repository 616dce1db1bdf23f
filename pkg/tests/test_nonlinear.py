import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdg2gl.errors import NumericalError, ParameterError
from bdg2gl.linear import KT_kernel
from bdg2gl.model import LatticeGrid, ModelParams, Potential, matsubara_freq
from bdg2gl.nonlinear import (NT_exact, NT_matsubara, NT_prime, NT_tilde, block_resolvent,
                              build_H, fermi_blocks, h_matrix, matsubara_tail, tanh_block12)
from bdg2gl.opcalc import PeriodicKernel, norm, random_kernel

GRID = LatticeGrid.torus(32, 0.25)


@pytest.fixture(scope="module")
def p():
    return ModelParams(Potential.gaussian(20.0, 0.25), 1.0, h=0.25).with_beta_c(0.146)


def test_H_zero_sigma_is_block_diagonal(p):
    H = build_H(PeriodicKernel.zeros(GRID), p).matrix
    hm = h_matrix(GRID, 1.0)
    n = GRID.n
    assert np.array_equal(H[:n, n:], np.zeros((n, n)))
    assert np.allclose(H[n:, n:], -hm)
    e = np.sort(np.linalg.eigvalsh(hm))
    assert np.allclose(e, np.sort(GRID.rel_momenta() ** 2 - 1.0), atol=1e-10)


def test_H_rejects_asymmetric_sigma(p):
    s = random_kernel(GRID, np.random.default_rng(0), symmetric=False)
    with pytest.raises(ParameterError):
        build_H(s, p)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.1, 30.0))
def test_H_spectrum_symmetric(p, seed, scale):
    """The BdG particle-hole symmetry pairs eigenvalues +-lambda for real sigma."""
    s = random_kernel(GRID, np.random.default_rng(seed))
    s = s * (scale / norm(s, "op"))
    lam = np.linalg.eigvalsh(build_H(s, p).matrix)
    assert np.allclose(np.sort(lam), np.sort(-lam), atol=1e-10 * max(1, np.abs(lam).max()))


def test_fermi_blocks_identity(p):
    """Gamma + (particle-hole transform of Gamma) = 1 and Gamma_12 = -1/2 tanh_12."""
    s = random_kernel(GRID, np.random.default_rng(1))
    g11, g12, g21, g22 = fermi_blocks(s, p)
    n = GRID.n
    assert np.allclose(g11 + np.conj(g22), np.eye(n), atol=1e-12)
    t12 = tanh_block12(s, p)
    assert np.allclose(g12 / GRID.delta, -0.5 * t12.values, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(0, 5), st.floats(-20, 20))
def test_block_resolvent_identities(p, seed, nfreq, re):
    s = random_kernel(GRID, np.random.default_rng(seed))
    z = re + 1j * matsubara_freq(nfreq, p.beta)
    rb = block_resolvent(z, s, p)
    assert max(rb.identity_residuals().values()) <= 1e-10
    assert max(rb.norms().values()) <= 1 / abs(z.imag) + 1e-12


def test_block_resolvent_real_axis_rejected(p):
    with pytest.raises(NumericalError):
        block_resolvent(1.0 + 1e-14j, PeriodicKernel.zeros(GRID), p)


def test_NT_zero_and_cubic_scaling(p):
    z = PeriodicKernel.zeros(GRID)
    assert norm(NT_exact(z, p)) == 0.0
    s = random_kernel(GRID, np.random.default_rng(2))
    # small enough for the quintic term, large enough to beat eigensolver roundoff
    s = s * (0.05 / norm(s, "op"))
    a = norm(NT_exact(s, p))
    b = norm(NT_exact(2 * s, p))
    assert b / a == pytest.approx(8.0, rel=1e-3)


def test_tanh_linear_part_is_KT(p):
    s = random_kernel(GRID, np.random.default_rng(3))
    s = s * (0.05 / norm(s, "op"))
    t12 = tanh_block12(s, p)
    # the remainder is N_T, cubic in sigma
    assert norm(t12 - KT_kernel(s, p.beta, p.mu)) <= 1e-3 * norm(t12)


def test_matsubara_split_and_tail(p):
    s = random_kernel(GRID, np.random.default_rng(4))
    s = s * (1.0 / norm(s, "op"))
    full = NT_matsubara(s, p, 16)
    split = NT_prime(s, p, 16).kernel + NT_tilde(s, p, 16).kernel
    assert norm(split - full.kernel) <= 1e-11 * norm(full.kernel)
    ex = NT_exact(s, p)
    assert norm(full.kernel - ex) > 0
    assert matsubara_tail(1.0, 32, p.beta) < matsubara_tail(1.0, 16, p.beta)


def test_matsubara_decay_rate(p):
    s = random_kernel(GRID, np.random.default_rng(5))
    s = s * (1.0 / norm(s, "op"))
    ex = NT_exact(s, p)
    nmax = np.array([8, 16, 32, 64])
    errs = [norm(ex - NT_matsubara(s, p, m).kernel) for m in nmax]
    assert np.all(np.diff(errs) < 0)
    assert np.polyfit(np.log(nmax), np.log(errs), 1)[0] <= -1.8


def test_NT_matsubara_validates_nmax(p):
    with pytest.raises(ParameterError):
        NT_matsubara(PeriodicKernel.zeros(GRID), p, 0)
