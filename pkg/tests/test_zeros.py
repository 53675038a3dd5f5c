import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catmap_qe import theta, zeros
from catmap_qe.torus import TorusPoint
from oracles import fine_grid_windings, lattice_zeros


def _section(N, coeffs):
    return theta.SectionCoeffs(theta.make_space(N), np.asarray(coeffs, dtype=complex))


def _zero_set(pts, N=None):
    pts = np.asarray(pts, dtype=float)
    N = N or len(pts)
    return zeros.ZeroSet(N=N, j=-1, zeros=pts, multiplicities=np.ones(len(pts), dtype=int), total_count=len(pts),
                         windings=np.zeros((1, 1), dtype=int), residuals=np.zeros(len(pts)))


@pytest.mark.parametrize("N", [1, 5, 8])
def test_basis_section_zeros_known(N):
    # theta_0 at level N vanishes exactly at ((m + 1/2)/N, 1/2)
    zs = zeros.locate_zeros(_section(N, np.eye(N)[0]))
    expect = np.stack([(np.arange(N) + 0.5) / N, np.full(N, 0.5)], axis=1)
    assert zs.total_count == N and np.all(zs.multiplicities == 1)
    assert np.abs(zs.zeros - expect).max() < 1e-9


def test_double_zero():
    # theta(z | i)^2 written in the level-2 basis has a double zero at (1/2, 1/2)
    s_even = sum(math.exp(-2 * math.pi * k * k) for k in range(-10, 11))
    s_odd = sum(math.exp(-2 * math.pi * (k + 0.5) ** 2) for k in range(-10, 10))
    zs = zeros.locate_zeros(_section(2, [s_even, s_odd]))
    assert zs.total_count == 2
    assert zs.multiplicities.tolist() == [2]
    assert np.abs(zs.zeros[0] - 0.5).max() < 1e-6


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.sampled_from([2, 9, 16, 33]))
def test_random_section_zero_count(seed, N):
    s = zeros.random_section(theta.make_space(N), np.random.default_rng(seed))
    zs = zeros.locate_zeros(s)
    assert zs.total_count == N
    assert np.all((zs.zeros >= 0) & (zs.zeros < 1))
    # polished zeros are zeros of the section
    hn = theta.hnorm_sq_points(s, zs.zeros[:, 0], zs.zeros[:, 1])
    assert np.sqrt(hn).max() < 1e-7 * s.norm


@pytest.mark.parametrize("N", [4, 16])
def test_grid_windings_match_fine_oracle(N):
    s = zeros.random_section(theta.make_space(N), np.random.default_rng(N))
    n = int(math.ceil(4 * math.sqrt(N)))

    def fn(x, y):
        X, Y = np.broadcast_arrays(x, y)
        return theta.weighted_eval(s.space, s.coeffs, X.ravel(), Y.ravel()).reshape(X.shape)

    ref = fine_grid_windings(fn, n, sub=256, shift=zeros.GRID_SHIFT)
    assert np.array_equal(zeros.grid_windings(s, n), ref)


def test_zero_section_rejected():
    with pytest.raises(zeros.ZeroError):
        zeros.locate_zeros(_section(4, np.zeros(4)))


def test_counts_in_balls():
    zs = _zero_set(lattice_zeros(10))
    centers = np.array([[0.5, 0.5], [0.0, 0.0], [0.05, 0.95]])
    counts = zeros.counts_in_balls(zs, centers, 0.11)
    for c, k in zip(centers, counts):
        assert k == zeros.count_in_ball(zs, TorusPoint(*c), 0.11)


def test_disk_reference():
    assert zeros.disk_reference(lambda u, v: np.ones_like(u)) == pytest.approx(math.pi, rel=1e-12)
    assert zeros.disk_reference(lambda u, v: u * u + v * v) == pytest.approx(math.pi / 2, rel=1e-12)


def test_pairing_on_uniform_lattice():
    side = 200
    zs = _zero_set(lattice_zeros(side))
    eta = lambda u, v: (1 - u * u - v * v) ** 2
    st_ = zeros.scaled_zero_pairing(zs, TorusPoint(0.31, 0.47), 0.1, eta, prefactor=0.125)
    assert st_.value == pytest.approx(st_.reference, rel=0.05)
    assert 0 <= st_.value <= st_.bound + 1e-12


def test_discrepancy_small_for_lattice():
    zs = _zero_set(lattice_zeros(100))
    d = zeros.zero_discrepancy_in_ball(zs, TorusPoint(0.5, 0.5), 0.1, prefactor=0.125)
    assert d < 5e-3
    centers = np.array([[0.2, 0.2], [0.7, 0.1]])
    assert zeros.ball_discrepancies(zs, centers, 0.1).max() < 5e-3


def test_potential_l1_finite():
    N = 32
    s = zeros.random_section(theta.make_space(N), np.random.default_rng(0))
    zs = zeros.locate_zeros(s)
    rec = zeros.potential_l1(s, TorusPoint(0.3, 0.4), 0.1, zs=zs, prefactor=0.125)
    assert np.isfinite(rec.value) and rec.value > 0
    assert rec.excised_correction >= 0
    assert rec.normalized == pytest.approx(rec.value / (0.125 * math.log(N) ** -0.1) ** 2)
