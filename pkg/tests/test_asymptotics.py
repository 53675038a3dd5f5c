import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catmap_qe import asymptotics as asy
from catmap_qe import theta
from catmap_qe.torus import TorusPoint

unit = st.floats(0, 1, exclude_max=True)


@given(unit, unit, unit, unit)
def test_log_kernel_matches_basis_sum(zx, zy, wx, wy):
    N = 12
    space = theta.make_space(N)
    Bz = theta.basis_matrix(space, [zx], [zy])[0]
    Bw = theta.basis_matrix(space, [wx], [wy])[0]
    direct = complex(np.vdot(Bw, Bz))
    lk = theta.bergman_log_kernel(N, [zx], [zy], [wx], [wy])[0]
    assert abs(np.exp(lk) - direct) < 1e-10 * N


def test_log_kernel_hermitian():
    z = np.array([[0.1, 0.2], [0.7, 0.9]])
    w = np.array([[0.4, 0.3], [0.2, 0.6]])
    a = theta.bergman_log_kernel(64, z[:, 0], z[:, 1], w[:, 0], w[:, 1])
    b = theta.bergman_log_kernel(64, w[:, 0], w[:, 1], z[:, 0], z[:, 1])
    assert np.allclose(np.exp(a), np.conj(np.exp(b)), rtol=1e-10)


def test_exact_gaussian_modulus():
    # |Pi_N(z, w)| = N exp(-(pi N / 2) d^2) up to exponentially small lattice corrections
    N = 256
    ps = asy.sample_pairs(N, 0.0, 0.2, 32, seed=1)
    lk = asy.log_abs_kernel(N, ps.z, ps.w)
    assert np.abs(lk - (math.log(N) - math.pi * N / 2 * ps.d**2)).max() < 1e-9


def test_sample_pairs():
    ps = asy.sample_pairs(64, 0.1, 0.3, 50, seed=2)
    assert np.all((ps.d >= 0.1 - 1e-12) & (ps.d <= 0.3 + 1e-12))
    again = asy.sample_pairs(64, 0.1, 0.3, 50, seed=2)
    assert np.array_equal(ps.z, again.z)
    with pytest.raises(ValueError):
        asy.sample_pairs(64, 0.1, 0.6)


def test_gaussian_fit_constant():
    fit = asy.gaussian_neardiag_check(1024, seed=0, metric_constant=math.pi)
    assert fit.constants["c"] == pytest.approx(math.pi / 2, rel=1e-8)
    assert abs(fit.constants["A3"]) < 1e-8
    assert fit.residual < 1e-8
    with pytest.raises(ValueError):
        asy.gaussian_neardiag_check(64, d_hi=0.5)


def test_agmon_fit():
    fit = asy.agmon_fit([64, 256, 1024], n_samples=32)
    assert fit.n_range == (256, 1024) and fit.extra["empty_range_N"] == [64]
    assert fit.constants["A2"] > 0 and fit.constants["A1"] > 0
    assert fit.residual < 0.2
    with pytest.raises(ValueError):
        asy.agmon_fit([64])


def test_scaling_limit():
    U, V = asy.scaling_grid(5)
    assert U.size == 625 and np.abs(U).max() <= 2 + 1e-12
    for N in (64, 1024):
        assert asy.scaling_limit_compare(N, U, V) < 1e-11
    diag = asy.scaled_kernel(256, TorusPoint(0.3, 0.4), U[:5], U[:5])
    assert np.allclose(diag, 1, atol=1e-12)
    with pytest.raises(ValueError):
        asy.scaling_limit_compare(64, [3.0], [0.0])


def test_bargmann_fock_model():
    u, v = np.array([0.3 + 0.1j]), np.array([-0.2 + 0.5j])
    m = asy.bargmann_fock_model(u, v, math.pi)
    assert abs(m[0]) == pytest.approx(math.exp(-math.pi / 2 * abs(u[0] - v[0]) ** 2))
    assert asy.bargmann_fock_model(u, u, 2.0)[0] == pytest.approx(1.0)


def test_regime_overlap():
    N = 1024
    a = asy.agmon_fit([N], n_samples=32)
    g = asy.gaussian_neardiag_check(N)
    assert asy.regime_overlap_factor(N, a, g) >= 1.0
