"""Flat geometry of the unit torus R^2/Z^2.

Points are stored as canonical representatives in [0, 1)^2; the Kahler form is
dx^dy, so the torus has unit volume and the flat metric is exact in every chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GAMMA_MAX = 1.0 / 6.0


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class TorusPoint:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x) % 1.0)
        object.__setattr__(self, "y", float(self.y) % 1.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class Ball:
    center: TorusPoint
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError(f"ball radius must be positive, got {self.radius}")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2


@dataclass(frozen=True)
class LogScale:
    """epsilon = prefactor * |log N|^(-gamma)."""

    gamma: float
    N: int
    epsilon: float
    prefactor: float = 1.0


def _wrap(d):
    return d - np.round(d)


def torus_distance(a, b) -> float:
    """Flat distance: minimum over lattice translates of the Euclidean distance."""
    d = _wrap(np.asarray([a.x - b.x, a.y - b.y]))
    return float(math.hypot(d[0], d[1]))


def torus_distance_array(p, xs, ys):
    """Vectorized distance from point ``p`` to the points (xs, ys)."""
    dx = _wrap(np.asarray(xs) - p.x)
    dy = _wrap(np.asarray(ys) - p.y)
    return np.hypot(dx, dy)


def log_scale(gamma: float, N: int, prefactor: float = 1.0, gamma_max: float = GAMMA_MAX) -> LogScale:
    if N < 3:
        raise GeometryError(f"log scale needs N >= 3, got {N}")
    if not 0.0 < gamma < gamma_max:
        raise GeometryError(f"gamma must lie in the open interval (0, {gamma_max:.6g}); got {gamma}")
    if not prefactor > 0:
        raise GeometryError(f"scale prefactor must be positive, got {prefactor}")
    eps = prefactor * math.log(N) ** (-gamma)
    return LogScale(gamma=gamma, N=N, epsilon=eps, prefactor=prefactor)


def dilate(p: TorusPoint, epsilon: float, w) -> TorusPoint:
    """Flat chart dilation p + epsilon*w for w in the open unit disk."""
    w = np.asarray(w, dtype=float)
    if not epsilon < 0.25:
        raise GeometryError(f"dilation needs epsilon < 1/4, got {epsilon}")
    if np.hypot(w[0], w[1]) >= 1.0:
        raise GeometryError("dilation argument must lie in the open unit disk")
    return TorusPoint(p.x + epsilon * w[0], p.y + epsilon * w[1])


def inverse_dilate(p: TorusPoint, epsilon: float, z) -> np.ndarray:
    """Planar point w with dilate(p, epsilon, w) == z; requires d(z, p) < epsilon."""
    if not epsilon < 0.25:
        raise GeometryError(f"dilation needs epsilon < 1/4, got {epsilon}")
    d = _wrap(np.array([z.x - p.x, z.y - p.y]))
    if np.hypot(d[0], d[1]) >= epsilon:
        raise GeometryError("point lies outside the dilation chart B(p, epsilon)")
    return d / epsilon


def inverse_dilate_array(p: TorusPoint, epsilon: float, xs, ys) -> np.ndarray:
    """Unchecked vectorized inverse dilation; returns shape (n, 2)."""
    dx = _wrap(np.asarray(xs) - p.x)
    dy = _wrap(np.asarray(ys) - p.y)
    return np.stack([dx, dy], axis=-1) / epsilon


def _q(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


@dataclass(frozen=True)
class BumpProfile:
    """Smooth radial cutoff: 1 on r <= 1, 0 on r >= 2."""

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        a = _q(2.0 - r)
        b = _q(r - 1.0)
        return a / (a + b)


def bump_cutoff(profile: BumpProfile, p: TorusPoint, epsilon: float):
    """Return z -> profile(d(z, p)/epsilon), accepting TorusPoint or coordinate arrays."""
    if not 2.0 * epsilon < 0.5:
        raise GeometryError(f"bump support B(p, {2 * epsilon:.4g}) wraps the torus")

    def f(z, y=None):
        if y is None:
            return float(profile(torus_distance(z, p) / epsilon))
        return profile(torus_distance_array(p, z, y) / epsilon)

    f.center = p
    f.epsilon = epsilon
    f.profile = profile
    return f


@dataclass(frozen=True)
class LogGoodCover:
    scale: LogScale
    centers: tuple = field(repr=False)
    count: int = 0
    c1: float = 0.0
    c2: int = 0
    spacing: float = 0.0
    lattice_size: int = 0

    def center_array(self) -> np.ndarray:
        return np.array([[c.x, c.y] for c in self.centers])


def probe_grid(n: int = 32) -> np.ndarray:
    t = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(t, t, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def verify_cover(cover: LogGoodCover, probes: np.ndarray | None = None) -> dict:
    """Check the three log-good properties on a probe grid; returns the measured quantities."""
    eps = cover.scale.epsilon
    if probes is None:
        probes = probe_grid(32)
    C = cover.center_array()
    dx = _wrap(probes[:, None, 0] - C[None, :, 0])
    dy = _wrap(probes[:, None, 1] - C[None, :, 1])
    D = np.hypot(dx, dy)
    meets = (D < 2 * eps).sum(axis=1)
    contains_shrunk = (D <= 2 * eps / 3).any(axis=1)
    covered = (D < eps).any(axis=1)
    return {
        "max_multiplicity": int(meets.max()),
        "all_contain_shrunken": bool(contains_shrunk.all()),
        "all_covered": bool(covered.all()),
        "count_ok": cover.count <= cover.c1 * eps**-2 + 1e-9,
    }


def build_log_good_cover(scale: LogScale, probes: np.ndarray | None = None) -> LogGoodCover:
    """Square lattice of centers with spacing 1/ceil(3/eps) <= eps/3."""
    eps = scale.epsilon
    if not eps <= 0.25:
        raise GeometryError(f"log-good cover needs epsilon <= 1/4, got {eps}")
    m = math.ceil(3.0 / eps)
    h = 1.0 / m
    centers = tuple(TorusPoint(i * h, j * h) for i in range(m) for j in range(m))
    R = len(centers)
    cover = LogGoodCover(scale=scale, centers=centers, count=R, c1=R * eps**2, spacing=h, lattice_size=m)
    checks = verify_cover(cover, probes)
    if not (checks["all_contain_shrunken"] and checks["all_covered"]):
        raise GeometryError("lattice cover failed its own probe verification")
    return LogGoodCover(
        scale=scale, centers=centers, count=R, c1=R * eps**2, c2=checks["max_multiplicity"],
        spacing=h, lattice_size=m,
    )
