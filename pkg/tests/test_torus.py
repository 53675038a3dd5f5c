import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catmap_qe.torus import (
    GeometryError,
    BumpProfile,
    TorusPoint,
    build_log_good_cover,
    bump_cutoff,
    dilate,
    inverse_dilate,
    log_scale,
    probe_grid,
    torus_distance,
    verify_cover,
)
from oracles import brute_distance

coord = st.floats(min_value=-3, max_value=3, allow_nan=False)
unit = st.floats(min_value=0, max_value=1, exclude_max=True)


def test_point_canonical():
    p = TorusPoint(1.25, -0.25)
    assert (p.x, p.y) == (0.25, 0.75)


def test_distance_examples():
    assert torus_distance(TorusPoint(0, 0), TorusPoint(0, 0)) == 0
    assert torus_distance(TorusPoint(0.1, 0), TorusPoint(0.9, 0)) == pytest.approx(0.2, abs=1e-15)


@given(coord, coord, coord, coord)
def test_distance_matches_bruteforce(a, b, c, d):
    p, q = TorusPoint(a, b), TorusPoint(c, d)
    dist = torus_distance(p, q)
    assert dist == pytest.approx(brute_distance((p.x, p.y), (q.x, q.y)), abs=1e-12)
    assert dist == torus_distance(q, p)
    assert 0 <= dist <= math.sqrt(2) / 2 + 1e-15


@given(coord, coord, coord, coord, coord, coord)
def test_triangle_inequality(a, b, c, d, e, f):
    p, q, r = TorusPoint(a, b), TorusPoint(c, d), TorusPoint(e, f)
    assert torus_distance(p, r) <= torus_distance(p, q) + torus_distance(q, r) + 1e-12


def test_log_scale():
    s = log_scale(0.1, 15)
    assert s.epsilon == pytest.approx(math.log(15) ** -0.1, rel=1e-15)
    assert log_scale(1e-9, 1000).epsilon == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(GeometryError, match="open interval"):
        log_scale(1 / 6, 100)
    with pytest.raises(GeometryError):
        log_scale(0.1, 2)
    assert log_scale(0.1, 100, prefactor=0.125).epsilon == pytest.approx(0.125 * math.log(100) ** -0.1)


def test_dilate_examples():
    p = TorusPoint(0.5, 0.5)
    q = dilate(p, 0.1, (0.9, 0))
    assert (q.x, q.y) == pytest.approx((0.59, 0.5))
    assert dilate(p, 0.1, (0, 0)) == p
    with pytest.raises(GeometryError):
        dilate(p, 0.3, (0, 0))
    with pytest.raises(GeometryError):
        dilate(p, 0.1, (1.0, 0))
    with pytest.raises(GeometryError):
        inverse_dilate(p, 0.1, TorusPoint(0.8, 0.5))


def test_dilate_round_trip_bulk():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        p = TorusPoint(*rng.random(2))
        r, th = math.sqrt(rng.random()) * 0.999, rng.random() * 2 * math.pi
        w = np.array([r * math.cos(th), r * math.sin(th)])
        eps = 0.01 + 0.2 * rng.random()
        worst = max(worst, float(np.abs(inverse_dilate(p, eps, dilate(p, eps, w)) - w).max()))
    assert worst < 1e-12


def test_bump_profile():
    f = BumpProfile()
    r = np.linspace(0, 3, 3001)
    v = f(r)
    assert np.all(v[r <= 1] == 1) and np.all(v[r >= 2] == 0)
    assert np.all(np.diff(v) <= 0)
    assert 0 < f(1.5) < 1


def test_bump_cutoff():
    p = TorusPoint(0.2, 0.9)
    eps = 0.05
    cut = bump_cutoff(BumpProfile(), p, eps)
    assert cut(p.x, p.y) == 1
    assert cut(p.x + 2.5 * eps, p.y) == 0
    P = probe_grid(64)
    d = np.array([torus_distance(p, TorusPoint(*q)) for q in P])
    vals = cut(P[:, 0], P[:, 1])
    assert np.all(vals[d <= eps] == 1) and np.all(vals[d >= 2 * eps] == 0)
    with pytest.raises(GeometryError):
        bump_cutoff(BumpProfile(), p, 0.25)


def test_bump_holder_seminorm_grows_like_eps_power():
    beta = 0.5
    t = np.linspace(0, 0.5, 4001)
    semis = []
    for eps in (0.1, 0.05, 0.025):
        cut = bump_cutoff(BumpProfile(), TorusPoint(0, 0), eps)
        v = cut(t, np.zeros_like(t))
        h = t[1] - t[0]
        semis.append(max(np.abs(v[k:] - v[:-k]).max() / (k * h) ** beta for k in 2 ** np.arange(12)))
    ratios = [semis[i + 1] / semis[i] for i in range(2)]
    for r in ratios:
        assert r == pytest.approx(2**beta, rel=0.1)


@pytest.mark.parametrize("eps", [0.25, 0.12, 0.06])
def test_log_good_cover(eps):
    from catmap_qe.torus import LogScale

    cover = build_log_good_cover(LogScale(gamma=0.1, N=100, epsilon=eps))
    probes = probe_grid(32)
    assert len(probes) >= 1000
    chk = verify_cover(cover, probes)
    assert chk["all_contain_shrunken"] and chk["all_covered"] and chk["count_ok"]
    assert chk["max_multiplicity"] <= cover.c2
    assert cover.count <= cover.c1 * eps**-2 + 1e-9
    assert cover.spacing <= eps / 3 + 1e-15


def test_cover_rejects_large_epsilon():
    from catmap_qe.torus import LogScale

    with pytest.raises(GeometryError):
        build_log_good_cover(LogScale(gamma=0.1, N=100, epsilon=0.3))
