import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from catmap_qe.dynamics import (
    MapError,
    apply,
    c2_growth,
    correlation_exact,
    correlation_horizon,
    correlation_quadrature,
    matinv,
    matmul,
    matpow,
    validate_cat_map,
)
from oracles import correlation_float_grid

CAT = ((1, 2), (2, 5))


def test_validate_examples():
    m = validate_cat_map(CAT)
    assert m.admissible and m.trace == 6
    assert m.delta0 == pytest.approx(math.log(3 + 2 * math.sqrt(2)))
    with pytest.raises(MapError, match="hyperbolic"):
        validate_cat_map(((1, 1), (0, 1)))
    with pytest.raises(MapError, match="symplectic"):
        validate_cat_map(((2, 1), (1, 2)))
    classic = validate_cat_map(((2, 1), (1, 1)))
    assert not classic.admissible and classic.diagnostic


small = st.integers(-4, 4)


@given(small, small, small)
def test_matpow_group_law(a, s, t):
    A = ((1, 2), (2, 5)) if a >= 0 else ((2, 3), (1, 2))
    assert matpow(A, s + t) == matmul(matpow(A, s), matpow(A, t))
    assert matmul(matpow(A, t), matpow(A, -t)) == ((1, 0), (0, 1))
    assert matinv(matpow(A, t)) == matpow(A, -t)


def test_c2_growth():
    m = validate_cat_map(CAT)
    for T in range(0, 8):
        assert c2_growth(m, T) == pytest.approx(math.exp(m.delta0 * T), rel=1e-6)
    with pytest.raises(MapError):
        c2_growth(m, 65)


def test_correlation_examples():
    m = validate_cat_map(CAT)
    f = {(1, 0): 0.5, (-1, 0): 0.5}
    assert correlation_exact(f, f, m, 0) == pytest.approx(0.5)
    for T in range(1, 6):
        assert correlation_exact(f, f, m, T) == 0
    const = {(0, 0): 3.0}
    assert correlation_exact(const, const, m, 2) == 0


@pytest.mark.parametrize("T", [-3, -1, 0, 1, 2, 3])
def test_correlation_matches_quadrature(T):
    m = validate_cat_map(CAT)
    f = {(1, 0): 1.0, (0, 1): 0.5j, (0, -1): -0.5j, (2, 1): 0.25, (1, 2): 0.3}
    g = {(1, 2): 1.0, (5, 12): 0.7, (0, 1): 0.2}
    ex = correlation_exact(f, g, m, T)
    assert abs(ex - correlation_quadrature(f, g, m, T)) < 1e-10
    if abs(T) <= 2:
        assert abs(ex - correlation_float_grid(f, g, CAT, T)) < 1e-8


def test_correlation_horizon():
    m = validate_cat_map(CAT)
    f = {(1, 0): 1.0, (1, 2): 1.0, (5, 12): 1.0}
    T0 = correlation_horizon(f, f, m)
    assert T0 >= 2
    for T in range(T0 + 1, T0 + 6):
        assert correlation_exact(f, f, m, T) == 0
        assert correlation_exact(f, f, m, -T) == 0


def test_quadrature_aliasing_guard():
    m = validate_cat_map(CAT)
    with pytest.raises(MapError, match="aliasing"):
        correlation_quadrature({(1, 0): 1}, {(1, 0): 1}, m, 12)


@given(small, small)
def test_apply_linear(k1, k2):
    assert apply(CAT, (k1, k2)) == (k1 + 2 * k2, 2 * k1 + 5 * k2)
