"""Theta-function model of the section space H^0(T^2, L^N).

Conventions: z = x + iy, Kahler potential 2*pi*y^2, so the pointwise h^N weight
is exp(-2*pi*N*y^2). Sections are entire functions with f(z+1) = f(z) and
f(z+i) = exp(pi*N - 2*pi*i*N*z) f(z). The basis is

    theta_j(z) = sum_n exp(-pi*N*(n + j/N)^2) exp(2*pi*i*N*(n + j/N)*z),

rescaled by (2N)^(1/4) to be orthonormal for dV = dx dy.

Every evaluation works with the weighted function g(z) = f(z) exp(-pi*N*y^2).
Writing l = N*n + j, its terms are exp(-pi*(l + N*y)^2/N + 2*pi*i*l*x), which never
overflow; |g|^2 is the pointwise h^N-norm and arg g = arg f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .torus import Ball, BumpProfile, GeometryError, TorusPoint, bump_cutoff, torus_distance_array

# terms below exp(-TAIL) relative to the peak are dropped (~1e-18)
TAIL = 18 * math.log(10)


@dataclass(frozen=True)
class ThetaSpace:
    N: int
    truncation_radius: int
    norm_constant: float

    @property
    def dim(self) -> int:
        return self.N

    @property
    def normalization(self) -> np.ndarray:
        return np.full(self.N, self.norm_constant)


def make_space(N: int) -> ThetaSpace:
    if not 1 <= N <= 8192:
        raise ValueError(f"N must be in [1, 8192], got {N}")
    L = int(math.ceil(math.sqrt(TAIL * N / math.pi))) + 1
    return ThetaSpace(N=N, truncation_radius=L, norm_constant=(2.0 * N) ** 0.25)


@dataclass(frozen=True)
class SectionCoeffs:
    space: ThetaSpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.space.N,):
            raise ValueError(f"expected {self.space.N} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True)
class KernelEval:
    N: int
    z: TorusPoint
    w: TorusPoint
    value: complex
    hnorm_value: float


def _frequencies(space: ThetaSpace, y):
    """Integer frequencies l (shape (P, 2L+1)) and their Gaussian log-weights."""
    N = space.N
    y = np.atleast_1d(np.asarray(y, dtype=float))
    L = space.truncation_radius
    center = np.rint(-N * y).astype(np.int64)
    ell = center[:, None] + np.arange(-L, L + 1)[None, :]
    logw = -math.pi * (ell + N * y[:, None]) ** 2 / N
    return ell, logw


def _phase(ell, x):
    x = np.atleast_1d(np.asarray(x, dtype=float)) % 1.0
    t = (ell * x[:, None]) % 1.0
    return np.exp(2j * math.pi * t)


def weighted_eval(space: ThetaSpace, coeffs, x, y, derivative: bool = False):
    """g = f*exp(-pi N y^2) at points (x, y); with ``derivative`` also g' = f'*exp(-pi N y^2)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    ell, logw = _frequencies(space, y)
    terms = np.exp(logw) * _phase(ell, x) * coeffs[ell % space.N]
    g = space.norm_constant * terms.sum(axis=1)
    if not derivative:
        return g
    gd = space.norm_constant * (2j * math.pi * ell * terms).sum(axis=1)
    return g, gd


def basis_matrix(space: ThetaSpace, x, y) -> np.ndarray:
    """Weighted orthonormal basis values, shape (P, N): B[p, j] = theta_hat_j(z_p) exp(-pi N y_p^2)."""
    ell, logw = _frequencies(space, y)
    vals = space.norm_constant * np.exp(logw) * _phase(ell, x)
    P = ell.shape[0]
    B = np.zeros((P, space.N), dtype=complex)
    rows = np.repeat(np.arange(P), ell.shape[1])
    np.add.at(B, (rows, (ell % space.N).ravel()), vals.ravel())
    return B


def section_eval(s: SectionCoeffs, z: TorusPoint) -> complex:
    """Value of the represented entire function f at z (not weighted)."""
    logmag, arg = section_log_eval(s, z)
    if logmag > 700:
        raise OverflowError(f"|f(z)| = exp({logmag:.1f}) overflows; use section_log_eval")
    return complex(math.exp(logmag) * np.exp(1j * arg)) if np.isfinite(logmag) else 0j


def section_log_eval(s: SectionCoeffs, z: TorusPoint) -> tuple[float, float]:
    """(log|f(z)|, arg f(z)) computed without forming exp(pi N y^2)."""
    g = weighted_eval(s.space, s.coeffs, [z.x], [z.y])[0]
    if g == 0:
        return -math.inf, 0.0
    return math.log(abs(g)) + math.pi * s.space.N * z.y**2, float(np.angle(g))


def hnorm_sq(s: SectionCoeffs, z: TorusPoint) -> float:
    g = weighted_eval(s.space, s.coeffs, [z.x], [z.y])[0]
    return float(abs(g) ** 2)


def hnorm_sq_points(s: SectionCoeffs, x, y) -> np.ndarray:
    return np.abs(weighted_eval(s.space, s.coeffs, x, y)) ** 2


def weighted_rows(space: ThetaSpace, coeffs, ys, M: int, ox: float = 0.0) -> np.ndarray:
    """g at x_p = ox + p/M on each horizontal line y in ``ys``; shape (len(ys), M).

    Along a horizontal line g is a trigonometric sum in x, evaluated exactly by binning
    frequencies mod M and one inverse FFT per line.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    Q = ys.size
    ell, logw = _frequencies(space, ys)
    a = space.norm_constant * np.exp(logw) * coeffs[ell % space.N]
    a = a * np.exp(2j * math.pi * ((ell * ox) % 1.0))
    flat = (np.arange(Q)[:, None] * M + ell % M).ravel()
    A = np.bincount(flat, weights=a.real.ravel(), minlength=Q * M) + 1j * np.bincount(
        flat, weights=a.imag.ravel(), minlength=Q * M
    )
    return M * np.fft.ifft(A.reshape(Q, M), axis=1)


def weighted_grid(space: ThetaSpace, coeffs, G: int, offset=(0.0, 0.0), rows: int | None = None) -> np.ndarray:
    """g on the grid x_p = ox + p/G, y_q = oy + q/G; shape (rows, G), rows defaults to G."""
    ox, oy = offset
    Q = G if rows is None else rows
    return weighted_rows(space, coeffs, oy + np.arange(Q) / G, G, ox)


def hnorm_grid(s: SectionCoeffs, G: int) -> np.ndarray:
    """Pointwise h^N norm squared on the G x G grid; index [q, p] = (y_q, x_p)."""
    return np.abs(weighted_grid(s.space, s.coeffs, G)) ** 2


def grid_size(N: int, eps_min: float | None = None) -> int:
    """Resolution rule: 8 points per N^(-1/2) oscillation and 64 cells across the smallest radius."""
    n = 8.0 * math.sqrt(N)
    if eps_min is not None:
        n = max(n, 64.0 / eps_min)
    return int(math.ceil(max(n, 16.0)))


def grid_points(G: int):
    t = np.arange(G) / G
    Y, X = np.meshgrid(t, t, indexing="ij")
    return X, Y


def gram_matrix(space: ThetaSpace, G: int | None = None) -> np.ndarray:
    G = G or grid_size(space.N)
    X, Y = grid_points(G)
    B = basis_matrix(space, X.ravel(), Y.ravel())
    return (B.conj().T @ B) / G**2


def raw_basis_norms(space: ThetaSpace, G: int | None = None) -> np.ndarray:
    """Quadrature L^2 norms^2 of the un-normalized theta_j; analytically 1/sqrt(2N) for every j."""
    G = G or grid_size(space.N)
    X, Y = grid_points(G)
    B = basis_matrix(space, X.ravel(), Y.ravel()) / space.norm_constant
    return (np.abs(B) ** 2).sum(axis=0) / G**2


def bergman_kernel(space: ThetaSpace, z: TorusPoint, w: TorusPoint) -> KernelEval:
    """Metric-contracted kernel sum_j theta_hat_j(z) conj(theta_hat_j(w)) exp(-pi N (y_z^2 + y_w^2))."""
    B = basis_matrix(space, [z.x, w.x], [z.y, w.y])
    val = complex(B[0] @ B[1].conj())
    return KernelEval(N=space.N, z=z, w=w, value=val, hnorm_value=abs(val))


def bergman_diag(space: ThetaSpace, z: TorusPoint) -> float:
    B = basis_matrix(space, [z.x], [z.y])
    return float((np.abs(B[0]) ** 2).sum())


def bergman_diag_grid(space: ThetaSpace, G: int, chunk: int = 4096) -> np.ndarray:
    X, Y = grid_points(G)
    xs, ys = X.ravel(), Y.ravel()
    out = np.empty(xs.size)
    for s in range(0, xs.size, chunk):
        B = basis_matrix(space, xs[s : s + chunk], ys[s : s + chunk])
        out[s : s + chunk] = (np.abs(B) ** 2).sum(axis=1)
    return out.reshape(G, G)


def bergman_log_kernel(N: int, zx, zy, wx, wy):
    """log of the contracted kernel via its Poisson-resummed lattice form.

    Same quantity as :func:`bergman_kernel` (same gauge), but summed over lattice
    translates so that values far below machine epsilon relative to N stay accurate.
    Returns complex log values; exp of the result is the kernel.
    """
    zx, zy, wx, wy = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (zx, zy, wx, wy))
    dx = zx - wx
    dy = zy - wy
    r = int(math.ceil(math.sqrt(2.0 * 40.0 / (math.pi * N)))) + 1
    offs = np.arange(-r, r + 1)
    q = np.rint(dx)[:, None, None] + offs[None, :, None]
    k = np.rint(-dy)[:, None, None] + offs[None, None, :]
    zc = (zx + 1j * zy)[:, None, None]
    wbar = (wx - 1j * wy)[:, None, None]
    E = (
        -0.5 * math.pi * N * ((zc - wbar - q) ** 2 + k**2)
        + 1j * math.pi * N * k * (zc + wbar - q)
        - math.pi * N * (zy**2 + wy**2)[:, None, None]
    )
    E = E.reshape(E.shape[0], -1)
    m = E.real.max(axis=1, keepdims=True)
    s = np.exp(E - m).sum(axis=1)
    return math.log(N) + m[:, 0] + np.log(s)


def _ball_mask(ball: Ball, X, Y):
    return torus_distance_array(ball.center, X, Y) < ball.radius


def mass_integral(s: SectionCoeffs, ball: Ball, mode: str = "sharp", G: int | None = None) -> float:
    """Mass of the section in a ball.

    sharp: Riemann sum of |s|^2 over grid points inside the ball times the cell area.
    smooth: quadrature of |s|^2 against the bump that is 1 on the ball and 0 beyond twice its radius.
    """
    whole = ball.radius >= math.sqrt(2) / 2
    if G is None:
        G = grid_size(s.space.N, None if whole else ball.radius)
    if not whole and ball.radius < 4.0 / G:
        raise GeometryError(f"ball radius {ball.radius} is below 4 grid cells (G={G}); refine the grid")
    H = hnorm_grid(s, G)
    X, Y = grid_points(G)
    if mode == "sharp":
        w = np.ones_like(H) if whole else _ball_mask(ball, X, Y)
    elif mode == "smooth":
        f = bump_cutoff(BumpProfile(), ball.center, ball.radius)
        w = f(X, Y)
    else:
        raise ValueError(f"unknown mass mode {mode!r}")
    return float((H * w).sum() / G**2)


def full_integral(f, s: SectionCoeffs, G: int | None = None) -> float | complex:
    """Trapezoid quadrature of f * |s|^2 over the torus; f is a callable f(X, Y) or a (G, G) array."""
    G = G or grid_size(s.space.N)
    H = hnorm_grid(s, G)
    if callable(f):
        X, Y = grid_points(G)
        F = np.broadcast_to(f(X, Y), H.shape)
    else:
        F = np.asarray(f)
        if F.shape != H.shape:
            raise ValueError(f"symbol grid shape {F.shape} does not match ({G}, {G})")
    val = (F * H).sum() / G**2
    return complex(val) if np.iscomplexobj(val) else float(val)
