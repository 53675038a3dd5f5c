import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catmap_qe import theta
from catmap_qe.dynamics import apply, matmul, validate_cat_map
from catmap_qe.quantization import (
    FactorizationError,
    Sl2Word,
    apply_generator,
    character_operator,
    character_translation,
    damping,
    factor_sl2z,
    grid_spectrum,
    heisenberg_translation,
    quantize,
    quantize_word,
    time_average_operator,
    toeplitz_of_function,
    toeplitz_of_spectrum,
)
from oracles import character_explicit, generator_matrix, quantize_explicit

CAT = validate_cat_map(((1, 2), (2, 5)))
MAPS = [((1, 2), (2, 5)), ((5, 2), (2, 1)), ((3, 4), (2, 3)), ((1, 4), (2, 9)), ((-1, 2), (2, -5))]


@pytest.mark.parametrize("A", MAPS)
def test_factorization_round_trip(A):
    w = factor_sl2z(A)
    assert w.matrix() == A and w.admissible


def test_factorization_rejects_odd():
    with pytest.raises(FactorizationError):
        factor_sl2z(((2, 1), (1, 1)))


@pytest.mark.parametrize("name,e", [("S", 1), ("S", 3), ("U", 2), ("U", -4), ("L", 2), ("L", -2)])
def test_generators_match_dense(name, e):
    N = 12
    M = np.random.default_rng(0).normal(size=(N, N)) + 0j
    assert np.abs(apply_generator(name, e, M) - generator_matrix(name, e, N) @ M).max() < 1e-12


@pytest.mark.parametrize("N", [1, 2, 7, 32])
def test_quantize_matches_dense_product(N):
    U = quantize(CAT, N)
    assert U.unitarity_defect() < 1e-12
    assert np.abs(U.entries - quantize_explicit(CAT.word, N)).max() < 1e-12


@given(st.integers(-6, 6), st.integers(-6, 6), st.integers(2, 24))
def test_character_operator(k1, k2, N):
    C = character_operator(N, (k1, k2))
    assert np.abs(C - character_explicit(N, (k1, k2))).max() < 1e-10
    assert np.abs(C @ C.conj().T - np.eye(N)).max() < 1e-12
    # C(k)^* = C(-k)
    assert np.abs(C.conj().T - character_operator(N, (-k1, -k2))).max() < 1e-12


@pytest.mark.parametrize("N", [8, 15, 64])
def test_exact_intertwining(N):
    U = quantize(CAT, N).entries
    for v in [(1, 0), (0, 1), (2, -3), (4, 1)]:
        lhs = U.conj().T @ heisenberg_translation(N, v).entries @ U
        rhs = heisenberg_translation(N, apply(CAT.A, v)).entries
        assert np.abs(lhs - rhs).max() < 1e-11


def test_anti_homomorphism():
    N = 10
    A, B = ((1, 2), (2, 5)), ((3, 4), (2, 3))
    UA, UB = quantize(validate_cat_map(A), N).entries, quantize(validate_cat_map(B), N).entries
    UAB = quantize(validate_cat_map(matmul(A, B)), N).entries
    P = UB @ UA
    phase = P[np.unravel_index(np.abs(P).argmax(), P.shape)] / UAB[np.unravel_index(np.abs(P).argmax(), P.shape)]
    assert abs(abs(phase) - 1) < 1e-12
    assert np.abs(P - phase * UAB).max() < 1e-11


@pytest.mark.parametrize("N", [6, 16])
def test_toeplitz_of_character_matches_quadrature(N):
    space = theta.make_space(N)
    for k in [(1, 0), (0, 1), (2, -1), (3, 3)]:
        Tq = toeplitz_of_function(space, lambda X, Y, k=k: np.exp(2j * np.pi * (k[0] * X + k[1] * Y)), G=4 * theta.grid_size(N))
        Tx = damping(N, k) * heisenberg_translation(N, character_translation(k)).entries
        assert np.abs(Tq.entries - Tx).max() < 1e-9
        Ts = toeplitz_of_spectrum(N, {k: 1.0}).entries
        assert np.abs(Ts - Tx).max() < 1e-12


def test_toeplitz_real_symbol_hermitian():
    spec = {(1, 0): 0.5, (-1, 0): 0.5, (2, 3): 0.2 + 0.1j, (-2, -3): 0.2 - 0.1j}
    T = toeplitz_of_spectrum(20, spec)
    assert T.hermitian_defect() < 1e-14
    assert np.abs(toeplitz_of_spectrum(20, {(0, 0): 1.0}).entries - np.eye(20)).max() < 1e-15


def test_grid_spectrum_round_trip():
    G = 16
    t = np.arange(G) / G
    Y, X = np.meshgrid(t, t, indexing="ij")
    F = 2 * np.cos(2 * np.pi * (X + 2 * Y)) + 0.5
    ks, cs = grid_spectrum(F, tol=1e-12)
    got = {tuple(k): c for k, c in zip(ks.tolist(), cs)}
    assert set(got) == {(0, 0), (1, 2), (-1, -2)}
    assert got[(1, 2)] == pytest.approx(1.0)


def test_egorov_exact_for_characters():
    N = 24
    U = quantize(CAT, N).entries
    k = (1, 2)
    C = character_operator(N, k)
    # e_k o A = e_{A^T k}, and U C(k) U^* = C(A^T k) exactly
    lhs = U @ C @ U.conj().T
    from catmap_qe.dynamics import transpose
    kk = apply(transpose(CAT.A), k)
    assert np.abs(lhs - character_operator(N, kk)).max() < 1e-11


def test_time_average_trivial():
    N = 9
    U = quantize(CAT, N)
    T_f = toeplitz_of_spectrum(N, {(0, 0): 2.0})
    assert np.abs(time_average_operator(U, T_f, 3) - 2 * np.eye(N)).max() < 1e-12
    word = Sl2Word((("S", 1),))
    assert np.abs(quantize_word(word, N).entries - generator_matrix("S", 1, N)).max() < 1e-12
