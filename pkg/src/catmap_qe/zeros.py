"""Zeros of holomorphic sections: argument-principle counting, Newton polishing, and
the log-scale zero statistics (scaled pairings, ball discrepancies, dilated potentials).

All work is done on the weighted function g = f exp(-pi N y^2); the weight is a positive
real factor, so g and f have the same zeros and the same argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .theta import SectionCoeffs, hnorm_sq_points, weighted_eval, weighted_rows
from .torus import TorusPoint, inverse_dilate_array, log_scale, torus_distance_array

EDGE_SAMPLES = 16
GRID_SHIFT = (math.sqrt(2) / 1000, math.sqrt(3) / 1000)
_MAX_STEP = math.pi / 4
_STABLE = 0.01 * 2 * math.pi
_MAX_LEVEL = 14
_EXCISION = 1e-4
_CLUSTER = 1e-6  # cells below this size with winding w > 1 are one zero of multiplicity w
# split fractions for cell subdivision: midpoint first, then irrational jiggles
_SPLITS = (0.5, 0.5 + math.sqrt(2) / 100, 0.5 - math.sqrt(3) / 100, 0.5 + math.sqrt(5) / 50)


class ZeroError(RuntimeError):
    pass


@dataclass(frozen=True)
class ZeroSet:
    N: int
    j: int
    zeros: np.ndarray  # (n, 2) points in [0,1)^2, sorted by (x, y)
    multiplicities: np.ndarray
    total_count: int
    windings: np.ndarray = field(repr=False)  # per-cell winding numbers of the base grid
    residuals: np.ndarray = field(repr=False)  # |g| at each polished zero

    def points(self):
        return [TorusPoint(float(x), float(y)) for x, y in self.zeros]


@dataclass(frozen=True)
class PairingStatistic:
    p: TorusPoint
    gamma: float
    N: int
    j: int
    value: float
    reference: float
    bound: float


@dataclass(frozen=True)
class PotentialL1Record:
    p: TorusPoint
    N: int
    j: int
    value: float
    normalized: float
    excised_correction: float


# ----------------------------------------------------------------------------- winding numbers


def _increments(vals: np.ndarray, N: int = 0, z=None) -> np.ndarray:
    """Arg increments of f between consecutive samples along the last axis.

    By Cauchy-Riemann, arg f drifts by -2 pi N y dx beyond what |g| dictates; that
    known drift is removed before taking principal values and added back afterwards.
    """
    raw = vals[..., 1:] * vals[..., :-1].conj()
    if not N or z is None:
        return np.angle(raw)
    drift = -math.pi * N * (z[..., 1:].real - z[..., :-1].real) * (z[..., 1:].imag + z[..., :-1].imag)
    return np.angle(raw * np.exp(-1j * drift)) + drift


def _segment_increment(space, coeffs, z0: complex, z1: complex) -> float:
    """Arg increment of g along [z0, z1], refined by interval halving until stable."""
    prev = None
    for level in range(2, _MAX_LEVEL + 1):
        t = np.linspace(0.0, 1.0, 2**level + 1)
        z = z0 + (z1 - z0) * t
        g = weighted_eval(space, coeffs, z.real, z.imag)
        if (g == 0).any():
            raise ZeroError(f"zero on segment {z0}..{z1}")
        d = _increments(g, space.N, z)
        total = float(d.sum())
        if np.abs(d - _drift(space.N, z)).max() < _MAX_STEP and prev is not None and abs(total - prev) < _STABLE:
            return total
        prev = total
    raise ZeroError(f"arg increment along {z0}..{z1} did not stabilize (winding budget exhausted)")


def _refine(space, coeffs, inc: np.ndarray, vals: np.ndarray, z_start: np.ndarray, dz: complex, floor: float):
    """Replace suspicious increments (large jumps or near-zero samples) by refined values."""
    small = np.minimum(np.abs(vals[..., 1:]), np.abs(vals[..., :-1])) < floor
    z_all = np.concatenate([z_start, z_start[..., -1:] + dz], axis=-1)
    bad = np.argwhere((np.abs(inc - _drift(space.N, z_all)) > _MAX_STEP) | small)
    for idx in bad:
        idx = tuple(idx)
        z0 = z_start[idx]
        inc[idx] = _segment_increment(space, coeffs, z0, z0 + dz)
    return inc


def _drift(N: int, z) -> np.ndarray:
    return -math.pi * N * (z[..., 1:].real - z[..., :-1].real) * (z[..., 1:].imag + z[..., :-1].imag)


def _cell_winding(space, coeffs, x0: float, y0: float, h: float, hy: float | None = None) -> int:
    """Winding number of g around the rectangle [x0, x0+h] x [y0, y0+hy] (square by default)."""
    hy = h if hy is None else hy
    c = [complex(x0, y0), complex(x0 + h, y0), complex(x0 + h, y0 + hy), complex(x0, y0 + hy)]
    total = 0.0
    for a, b in zip(c, c[1:] + c[:1]):
        t = np.linspace(0.0, 1.0, EDGE_SAMPLES + 1)
        z = a + (b - a) * t
        g = weighted_eval(space, coeffs, z.real, z.imag)
        d = _increments(g, space.N, z)
        if np.abs(d - _drift(space.N, z)).max() >= _MAX_STEP or (g == 0).any():
            total += _segment_increment(space, coeffs, a, b)
        else:
            total += float(d.sum())
    w = total / (2 * math.pi)
    if abs(w - round(w)) > 0.1:
        raise ZeroError(f"non-integer winding {w:.4f} on cell ({x0}, {y0}, h={h})")
    return int(round(w))


def grid_windings(s: SectionCoeffs, n: int, shift=GRID_SHIFT) -> np.ndarray:
    """Winding numbers of all n x n cells of the shifted unit grid; W[a, b] for cell (x_a, y_b)."""
    space, coeffs = s.space, s.coeffs
    ox, oy = shift
    h = 1.0 / n
    m = EDGE_SAMPLES
    M = m * n
    # horizontal lines y_b, b = 0..n; g is 1-periodic in x
    ys = oy + np.arange(n + 1) * h
    H = weighted_rows(space, coeffs, ys, M, ox)
    H = np.concatenate([H, H[:, :1]], axis=1)
    scale = float(np.sqrt(np.mean(np.abs(H) ** 2)))
    floor = 1e-6 * scale
    zs_h = (ox + np.arange(M) / M)[None, :] + 1j * ys[:, None]
    zh = np.concatenate([zs_h, zs_h[:, -1:] + 1.0 / M], axis=1)
    dh = _refine(space, coeffs, _increments(H, space.N, zh), H, zs_h, 1.0 / M, floor)
    # vertical lines x_a, a = 0..n-1, sampled upward over the full period
    xs = ox + np.arange(n) * h
    yv = oy + np.arange(M + 1) / M
    # sampling each row at the n line abscissae is exact (frequencies binned mod n)
    V = weighted_rows(space, coeffs, yv, n, ox).T
    zs_v = xs[:, None] + 1j * yv[None, :-1]
    dv = _refine(space, coeffs, _increments(V), V, zs_v, 1j / M, floor)
    # per-edge sums
    bottom = dh.reshape(n + 1, n, m).sum(axis=2)  # [b, a]
    up = dv.reshape(n, n, m).sum(axis=2)  # [a, b]
    total = bottom[:-1, :].T + np.roll(up, -1, axis=0) - bottom[1:, :].T - up
    w = total / (2 * math.pi)
    if np.abs(w - np.rint(w)).max() > 0.1:
        a, b = np.unravel_index(np.argmax(np.abs(w - np.rint(w))), w.shape)
        raise ZeroError(f"non-integer winding {w[a, b]:.4f} on cell ({a}, {b})")
    return np.rint(w).astype(int)


# ----------------------------------------------------------------------------- Newton


def _newton(space, coeffs, z: np.ndarray, iters: int = 50, mult: int = 1):
    """Newton on the locally gauged F = f exp(2 pi i N y_c (z - z_c)), whose modulus tracks |g|.

    Plain Newton on f sees the exp(pi N y^2) growth as a huge linear log-derivative and
    has a tiny basin; the gauge removes it. F/F' = g / (g' + 2 pi i N y_c g).
    ``mult`` scales the step, which restores quadratic convergence at a zero of that order.
    """
    z = np.array(z, dtype=complex)
    a = 2j * math.pi * space.N * z.imag
    for _ in range(iters):
        g, gd = weighted_eval(space, coeffs, z.real, z.imag, derivative=True)
        den = gd + a * g
        step = np.where(den != 0, g / np.where(den != 0, den, 1), 0)
        z = z - mult * step
        if np.all(np.abs(step) < 1e-14):
            break
    g = weighted_eval(space, coeffs, z.real, z.imag)
    return z, np.abs(g)


def _inside(z: complex, x0: float, y0: float, h: float) -> bool:
    tol = 1e-9 * h
    return x0 - tol <= z.real <= x0 + h + tol and y0 - tol <= z.imag <= y0 + h + tol


def _solve_cell(space, coeffs, x0, y0, h, w, out, depth=0):
    _solve_rect(space, coeffs, x0, y0, h, h, w, out, depth)


def _solve_rect(space, coeffs, x0, y0, hx, hy, w, out, depth):
    """Newton on simple cells; otherwise split (midpoint, then jiggled) and recurse on windings."""
    if w == 0:
        return
    z, r = _newton(space, coeffs, [complex(x0 + hx / 2, y0 + hy / 2)])
    if w == 1 and x0 - 1e-9 * hx <= z[0].real <= x0 + hx * (1 + 1e-9) and y0 - 1e-9 * hy <= z[0].imag <= y0 + hy * (1 + 1e-9) and r[0] < 1e-8:
        out.append((z[0], 1, r[0]))
        return
    if w > 1 and max(hx, hy) < _CLUSTER:
        z, r = _newton(space, coeffs, [complex(x0 + hx / 2, y0 + hy / 2)], mult=w)
        if r[0] < 1e-8:
            out.append((z[0], w, r[0]))
            return
        raise ZeroError(f"Newton failed in cell ({x0}, {y0}) with winding {w}")
    if depth > 40:
        raise ZeroError(f"subdivision depth exhausted at cell ({x0}, {y0})")
    for frac in _SPLITS:
        ax, ay = hx * frac, hy * frac
        subs = [(x0, y0, ax, ay), (x0 + ax, y0, hx - ax, ay), (x0, y0 + ay, ax, hy - ay), (x0 + ax, y0 + ay, hx - ax, hy - ay)]
        try:
            ws = [_cell_winding(space, coeffs, sx, sy, sw, sh) for sx, sy, sw, sh in subs]
        except ZeroError:
            continue
        if sum(ws) == w:
            break
    else:
        raise ZeroError(f"sub-cell windings do not add up to {w} at ({x0}, {y0}) for any split")
    for (sx, sy, sw, sh), sub_w in zip(subs, ws):
        _solve_rect(space, coeffs, sx, sy, sw, sh, sub_w, out, depth + 1)


def locate_zeros(s: SectionCoeffs, j: int = -1, shift=GRID_SHIFT) -> ZeroSet:
    """All zeros of s in the fundamental domain, with multiplicities from winding numbers."""
    if not np.any(s.coeffs):
        raise ZeroError("the zero section has no isolated zeros")
    space, coeffs, N = s.space, s.coeffs, s.space.N
    n = int(math.ceil(4 * math.sqrt(N)))
    h = 1.0 / n
    ox, oy = shift
    W = grid_windings(s, n, shift)
    if W.sum() != N:
        raise ZeroError(f"total winding {W.sum()} != N = {N}")
    # vectorized Newton for simple cells, fallback to subdivision
    A, B = np.nonzero(W == 1)
    x0 = ox + A * h
    y0 = oy + B * h
    z, r = _newton(space, coeffs, (x0 + h / 2) + 1j * (y0 + h / 2))
    found = []
    for i in range(z.size):
        if _inside(z[i], x0[i], y0[i], h) and r[i] < 1e-8:
            found.append((z[i], 1, r[i]))
        else:
            _solve_cell(space, coeffs, x0[i], y0[i], h, 1, found)
    for a, b in zip(*np.nonzero(W > 1)):
        _solve_cell(space, coeffs, ox + a * h, oy + b * h, h, int(W[a, b]), found)
    pts = np.array([[z.real % 1.0, z.imag % 1.0] for z, _, _ in found]).reshape(-1, 2)
    mult = np.array([m for _, m, _ in found], dtype=int)
    res = np.array([r for _, _, r in found])
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    total = int(mult.sum())
    if total != N:
        raise ZeroError(f"located multiplicity {total} != N = {N}")
    return ZeroSet(N=N, j=j, zeros=pts[order], multiplicities=mult[order], total_count=total, windings=W, residuals=res[order])


def random_section(space, rng: np.random.Generator) -> SectionCoeffs:
    """Gaussian random section: iid standard complex normal coefficients in the orthonormal basis."""
    c = (rng.standard_normal(space.N) + 1j * rng.standard_normal(space.N)) / math.sqrt(2)
    return SectionCoeffs(space, c)


# ----------------------------------------------------------------------------- statistics


def count_in_ball(zs: ZeroSet, p: TorusPoint, radius: float) -> int:
    if zs.zeros.size == 0:
        return 0
    d = torus_distance_array(p, zs.zeros[:, 0], zs.zeros[:, 1])
    return int(zs.multiplicities[d < radius].sum())


def counts_in_balls(zs: ZeroSet, centers: np.ndarray, radius: float) -> np.ndarray:
    """Multiplicity-weighted zero counts in B(c, radius) for each row c of ``centers``."""
    dx = np.abs(zs.zeros[None, :, 0] - centers[:, None, 0]) % 1.0
    dy = np.abs(zs.zeros[None, :, 1] - centers[:, None, 1]) % 1.0
    d = np.hypot(np.minimum(dx, 1 - dx), np.minimum(dy, 1 - dy))
    return ((d < radius) * zs.multiplicities[None, :]).sum(axis=1)


def disk_reference(eta, n_r: int = 64, n_t: int = 128) -> float:
    """int_{B(0,1)} eta dA: the flat (Lebesgue) reference measure on the unit disk."""
    t, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (t + 1)
    wr = 0.5 * w * r
    th = 2 * math.pi * np.arange(n_t) / n_t
    U = r[:, None] * np.cos(th)[None, :]
    V = r[:, None] * np.sin(th)[None, :]
    return float((eta(U, V) * wr[:, None]).sum() * 2 * math.pi / n_t)


def scaled_zero_pairing(zs: ZeroSet, p: TorusPoint, gamma: float, eta, prefactor: float = 1.0) -> PairingStatistic:
    """(1/(N eps^2)) sum over zeros w in B(p, eps) of eta(inverse_dilate(p, eps, w))."""
    eps = log_scale(gamma, zs.N, prefactor).epsilon
    N = zs.N
    val = 0.0
    if zs.zeros.size:
        d = torus_distance_array(p, zs.zeros[:, 0], zs.zeros[:, 1])
        sel = d < eps
        if sel.any():
            u = inverse_dilate_array(p, eps, zs.zeros[sel, 0], zs.zeros[sel, 1])
            val = float((eta(u[:, 0], u[:, 1]) * zs.multiplicities[sel]).sum()) / (N * eps * eps)
    U, V = np.meshgrid(np.linspace(-1, 1, 201), np.linspace(-1, 1, 201))
    inside = U**2 + V**2 <= 1
    eta_max = float(np.abs(eta(U[inside], V[inside])).max())
    bound = eta_max * count_in_ball(zs, p, 2 * eps) / (N * eps * eps)
    return PairingStatistic(p=p, gamma=gamma, N=N, j=zs.j, value=val, reference=disk_reference(eta), bound=bound)


def zero_discrepancy_in_ball(zs: ZeroSet, p: TorusPoint, gamma: float, prefactor: float = 1.0) -> float:
    """|count(B(p, eps_N))/N - pi eps_N^2|; a ball reaching the whole torus is capped to it."""
    eps = log_scale(gamma, zs.N, prefactor).epsilon
    if eps >= math.sqrt(2) / 2:
        return abs(zs.total_count / zs.N - 1.0)
    return abs(count_in_ball(zs, p, eps) / zs.N - math.pi * eps * eps)


def ball_discrepancies(zs: ZeroSet, centers: np.ndarray, eps: float) -> np.ndarray:
    return np.abs(counts_in_balls(zs, centers, eps) / zs.N - math.pi * eps * eps)


def potential_l1(s: SectionCoeffs, p: TorusPoint, gamma: float, zs: ZeroSet | None = None, prefactor: float = 1.0,
                 n_r: int = 48, n_t: int = 96, j: int = -1) -> PotentialL1Record:
    """int_{B(0,1)} |(1/N) log ||s(p + eps w)||^2| dA(w), excising discs of radius 1e-4 around zeros.

    Each excised disc contributes at most pi delta^2 (|log m| + 1)/N, with m the pointwise
    norm on its rim (simple-zero model); these bounds are added to the quadrature value.
    """
    N = s.space.N
    eps = log_scale(gamma, N, prefactor).epsilon
    t, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (t + 1)
    wr = 0.5 * w * r
    th = 2 * math.pi * (np.arange(n_t) + 0.5) / n_t
    U = (r[:, None] * np.cos(th)[None, :]).ravel()
    V = (r[:, None] * np.sin(th)[None, :]).ravel()
    W = np.repeat(wr, n_t) * 2 * math.pi / n_t
    keep = np.ones(U.size, dtype=bool)
    mapped = np.zeros((0, 2))
    if zs is not None and zs.zeros.size:
        mapped = inverse_dilate_array(p, eps, zs.zeros[:, 0], zs.zeros[:, 1])
        mapped = mapped[np.hypot(mapped[:, 0], mapped[:, 1]) < 1 + _EXCISION]
        for u0, v0 in mapped:
            keep &= np.hypot(U - u0, V - v0) >= _EXCISION
    hn = hnorm_sq_points(s, (p.x + eps * U[keep]) % 1.0, (p.y + eps * V[keep]) % 1.0)
    vals = np.abs(np.log(np.maximum(hn, 1e-300))) / N
    value = float((vals * W[keep]).sum())
    corr = 0.0
    for u0, v0 in mapped:
        du = _EXCISION if math.hypot(u0 + _EXCISION, v0) < 1 else -_EXCISION
        rim = TorusPoint(p.x + eps * (u0 + du), p.y + eps * v0)
        m = float(hnorm_sq_points(s, [rim.x], [rim.y])[0])
        corr += math.pi * _EXCISION**2 * (abs(math.log(max(m, 1e-300))) + 1) / N
    total = value + corr
    return PotentialL1Record(p=p, N=N, j=j, value=total, normalized=total / eps**2, excised_correction=corr)
