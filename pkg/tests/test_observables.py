import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catmap_qe import observables as ob
from catmap_qe import theta
from catmap_qe.dynamics import validate_cat_map
from catmap_qe.quantization import character_operator, quantize, toeplitz_of_function, toeplitz_of_spectrum
from catmap_qe.spectral import eigensections
from catmap_qe.torus import Ball, TorusPoint
from oracles import markov_bruteforce

CAT = validate_cat_map(((1, 2), (2, 5)))


@pytest.fixture(scope="module")
def es32():
    return eigensections(quantize(CAT, 32), seed=0)[0]


def test_trig_symbol_basics():
    f = ob.TrigSymbol.cos(1, 0)
    assert f.mean == 0 and f.sup == pytest.approx(1.0) and f.l2_sq() == pytest.approx(0.5)
    assert f(np.array([0.0]), np.array([0.3]))[0] == pytest.approx(1.0)
    g = f.pullback(CAT.A, 1)
    assert set(g.as_dict()) == {(1, 2), (-1, -2)}
    assert ob.TrigSymbol.constant(2.5).mean == 2.5


def test_constant_symbol_zero_variance(es32):
    rec = ob.quantum_variance(ob.TrigSymbol.constant(1.0), CAT, 32, es32)
    assert rec.variance < 1e-28 and np.allclose(rec.elements, 1)


def test_variance_nonnegative_and_recomputable(es32):
    rec = ob.quantum_variance(ob.TrigSymbol.cos(2, 1), CAT, 32, es32)
    assert rec.variance >= 0
    assert rec.recompute() == pytest.approx(rec.variance, rel=1e-14)


def test_symbol_elements_match_grid_toeplitz():
    N = 12
    es = eigensections(quantize(CAT, N), seed=0)[0]
    f = ob.TrigSymbol.from_dict({(1, 1): 0.5, (-1, -1): 0.5, (0, 2): 0.3j, (0, -2): -0.3j})
    T = toeplitz_of_function(theta.make_space(N), f, G=4 * theta.grid_size(N))
    assert np.abs(ob.matrix_elements(T, es) - ob.symbol_elements(f, es)).max() < 1e-9


def test_disk_transform_small_k():
    r = 0.1
    assert ob.disk_transform(r, np.array([0.0]))[0] == pytest.approx(math.pi * r * r)
    kk = np.array([1e-6])
    assert ob.disk_transform(r, kk)[0] == pytest.approx(math.pi * r * r, rel=1e-9)


def test_bump_transform_matches_grid_fft():
    eps = 0.1
    sym = ob.BumpSymbol(TorusPoint(0.3, 0.6), eps)
    G = 1024
    t = np.arange(G) / G
    X, Y = np.meshgrid(t, t, indexing="ij")
    F = sym(X, Y)
    C = np.fft.fft2(F) / G**2  # C[a, b] pairs with frequency (a, b) in (x, y)
    ks, cs = sym.spectrum(64)
    for (k1, k2), c in list(zip(ks.tolist(), cs))[:: max(1, len(cs) // 40)]:
        assert abs(C[k1 % G, k2 % G] - c) < 2e-5
    assert sym.mean == pytest.approx(F.mean(), abs=2e-5)


@given(st.lists(st.floats(0, 10), min_size=1, max_size=50), st.floats(0.01, 20))
def test_markov_extraction_matches_bruteforce(values, a):
    rec = ob.density_one_extract(values, a)
    exc, density, bound = markov_bruteforce(values, a)
    assert rec.exceptional.tolist() == exc
    assert rec.exceptional_density == pytest.approx(density)
    assert rec.exceptional_density <= bound + 1e-12
    assert rec.generic.size + rec.exceptional.size == len(values)


def test_markov_rejects_bad_input():
    with pytest.raises(ValueError):
        ob.density_one_extract([1.0, -1.0], 1.0)
    with pytest.raises(ValueError):
        ob.density_one_extract([1.0], 0.0)


def test_szego_and_egorov_at_zero():
    f = ob.TrigSymbol.cos(1, 1)
    lhs, rhs = ob.szego_trace_check(f, CAT, 256)
    assert lhs == pytest.approx(rhs * math.exp(-2 * math.pi / 256), rel=1e-12)
    assert ob.egorov_remainder(CAT, 32, f, 0).value < 1e-28
    assert ob.egorov_remainder(CAT, 32, f, 2).value > 0
    with pytest.raises(ValueError):
        ob.egorov_remainder(CAT, 8, f, 17)


def test_density_modes_match_characters(es32):
    V = es32.vectors[:, :3]
    W = ob.density_modes(V, 3)
    for k in [(0, 0), (1, -2), (-3, 3), (2, 1)]:
        C = character_operator(32, k)
        direct = np.einsum("ij,ij->j", V.conj(), C @ V)
        assert np.abs(W[:, k[0] + 3, k[1] + 3] - direct).max() < 1e-12


def test_point_mass_matches_grid(es32):
    p, r = TorusPoint(0.3, 0.7), 0.15
    m = ob.point_masses(es32.vectors[:, :4], p, r)
    for j in range(4):
        s = theta.SectionCoeffs(theta.make_space(32), es32.vectors[:, j])
        assert m[j] == pytest.approx(theta.mass_integral(s, Ball(p, r), "sharp", G=1200), abs=3e-4)
    full = ob.point_masses(es32.vectors, p, 0.49)
    assert np.all((full > 0) & (full < 1))


def test_ball_masses_lattice_agrees_with_points(es32):
    M, r = 5, 0.08
    sharp, smooth = ob.ball_masses(es32.vectors[:, :2], M, r)
    for a, b in [(0, 0), (1, 3), (4, 2)]:
        pm = ob.point_masses(es32.vectors[:, :2], TorusPoint(a / M, b / M), r)
        assert np.abs(sharp[:, a * M + b] - pm).max() < 1e-12
    assert np.all(smooth >= sharp - 1e-12)


def test_mass_sweep_sums():
    N = 64
    es = eigensections(quantize(CAT, N), seed=0)[0]
    sw = ob.mass_sweep(CAT, N, es, 0.15, prefactor=0.125, sample=8, seed=1)
    assert sw.sharp.shape == (8, sw.cover.count)
    assert np.all(sw.ratios > 0)
    summ = sw.summary()
    assert summ["sections"] == 8 and summ["balls"] == sw.cover.count


def test_time_average_substitution(es32):
    U = quantize(CAT, 32)
    T_f = toeplitz_of_spectrum(32, ob.TrigSymbol.cos(1, 0).spectrum(32))
    assert ob.time_average_substitution_defect(U, T_f, 4, es32) < 1e-12


def test_dilated_variance_record(es32):
    rec = ob.variance_dilated_symbol(TorusPoint(0.3, 0.4), 0.1, CAT, 32, es32, prefactor=0.125)
    assert rec.epsilon == pytest.approx(0.125 * math.log(32) ** -0.1)
    assert rec.comparison > 0 and rec.variance >= 0
    filt, gs = ob.filtered_variance(rec)
    assert filt <= rec.variance * math.sqrt(math.log(32)) + 1e-15
    assert gs.generic_density >= 1 - 1 / math.sqrt(math.log(32)) - 1e-12


def test_fixed_point_mass_records(es32):
    out = ob.fixed_point_mass(CAT, [32], [es32], TorusPoint(0.3, 0.4), 0.2, prefactor=0.125)
    assert len(out) == 1 and out[0].filtered_mean <= out[0].raw_mean * 2
