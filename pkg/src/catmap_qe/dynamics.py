"""Hyperbolic toral automorphisms z -> A z (mod 1) and exact correlation algebra.

Observables are finite trigonometric polynomials f = sum_k f_k e_k with
e_k(z) = exp(2 pi i k.z). Pullback acts on frequencies by k -> A^T k, so all
transport is integer arithmetic (Python ints, no overflow).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class MapError(ValueError):
    pass


def _mat(A):
    (a, b), (c, d) = A
    return ((int(a), int(b)), (int(c), int(d)))


def matmul(A, B):
    (a, b), (c, d) = A
    (e, f), (g, h) = B
    return ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))


def matinv(A):
    (a, b), (c, d) = A
    return ((d, -b), (-c, a))


def matpow(A, T: int):
    A = _mat(A)
    if T < 0:
        A, T = matinv(A), -T
    R = ((1, 0), (0, 1))
    while T:
        if T & 1:
            R = matmul(R, A)
        A = matmul(A, A)
        T >>= 1
    return R


def transpose(A):
    (a, b), (c, d) = A
    return ((a, c), (b, d))


def apply(A, k):
    (a, b), (c, d) = A
    return (a * k[0] + b * k[1], c * k[0] + d * k[1])


@dataclass(frozen=True)
class CatMap:
    A: tuple
    delta0: float
    admissible: bool
    word: tuple = field(default=())
    diagnostic: str = ""

    @property
    def trace(self) -> int:
        return self.A[0][0] + self.A[1][1]


@dataclass(frozen=True)
class CharacterIndex:
    k: tuple

    def pullback(self, A, T: int = 1) -> "CharacterIndex":
        return CharacterIndex(apply(matpow(transpose(_mat(A)), T), self.k))


def validate_cat_map(A) -> CatMap:
    """Check symplecticity and hyperbolicity; record admissibility (even-shear factorization)."""
    from .quantization import FactorizationError, factor_sl2z

    try:
        A = _mat(A)
    except (TypeError, ValueError) as exc:
        raise MapError(f"map must be a 2x2 integer matrix: {exc}") from None
    det = A[0][0] * A[1][1] - A[0][1] * A[1][0]
    if det != 1:
        raise MapError(f"map is not symplectic: det A = {det}, expected 1")
    t = A[0][0] + A[1][1]
    if abs(t) <= 2:
        raise MapError(f"map is not hyperbolic: |trace A| = {abs(t)} <= 2")
    delta0 = math.log((abs(t) + math.sqrt(t * t - 4)) / 2)
    try:
        word = factor_sl2z(A)
    except FactorizationError as exc:
        return CatMap(A=A, delta0=delta0, admissible=False, diagnostic=str(exc))
    return CatMap(A=A, delta0=delta0, admissible=True, word=tuple(word.generators))


def c2_growth(cmap: CatMap, T: int) -> float:
    """Operator norm of A^T; for a linear map this is its C^2 norm (second derivatives vanish)."""
    if abs(T) > 64:
        raise MapError(f"|T| must be <= 64, got {T}")
    M = np.array(matpow(cmap.A, T), dtype=float)
    return float(np.linalg.norm(M, 2))


def _as_spectrum(spec) -> dict:
    return {tuple(int(v) for v in k): complex(c) for k, c in dict(spec).items() if c != 0}


def correlation_exact(f_hat, g_hat, cmap: CatMap, T: int) -> complex:
    """int (g o chi^T) conj(f) dV - int g dV * conj(int f dV), from frequency transport.

    For real f this is the usual correlation int (g o chi^T) f - int f int g.
    """
    f = _as_spectrum(f_hat)
    g = _as_spectrum(g_hat)
    P = matpow(transpose(cmap.A), T)
    total = 0j
    for k, gk in g.items():
        fk = f.get(apply(P, k))
        if fk is not None:
            total += gk * fk.conjugate()
    total -= g.get((0, 0), 0j) * f.get((0, 0), 0j).conjugate()
    return total


def correlation_horizon(f_hat, g_hat, cmap: CatMap) -> int:
    """Smallest T0 with correlation_exact == 0 for every |T| > T0.

    A nonzero frequency k can meet the support of f only while |(A^T)^T k| stays below
    the support radius; along a hyperbolic orbit the norm is eventually monotone, so we
    iterate until it exceeds the radius and keeps growing for several steps.
    """
    f = _as_spectrum(f_hat)
    g = _as_spectrum(g_hat)
    supp = set(f)
    radius = max((abs(a) + abs(b) for a, b in supp), default=0)
    At = transpose(cmap.A)
    T0 = 0
    for k in g:
        if k == (0, 0):
            continue
        for step in (At, matinv(At)):
            v, t, grow = k, 0, 0
            prev = abs(v[0]) + abs(v[1])
            while grow < 4:
                if v in supp:
                    T0 = max(T0, t)
                v = apply(step, v)
                t += 1
                size = abs(v[0]) + abs(v[1])
                grow = grow + 1 if (size > radius and size > prev) else 0
                prev = size
    return T0


def _character_grid(spec: dict, G: int) -> np.ndarray:
    q = np.arange(G)
    Q, P = np.meshgrid(q, q, indexing="ij")
    out = np.zeros((G, G), dtype=complex)
    for (k1, k2), c in spec.items():
        out += c * np.exp(2j * math.pi * (((k1 * P + k2 * Q) % G) / G))
    return out


def correlation_quadrature(f_hat, g_hat, cmap: CatMap, T: int, G: int = 257) -> complex:
    """Grid quadrature cross-check of :func:`correlation_exact`.

    g o chi^T is sampled at exact lattice images: A^T (p, q) is formed in integers
    and reduced mod G, so the composed grid values carry no rounding from the map.
    """
    P = matpow(cmap.A, T)
    if max(abs(v) for row in P for v in row) >= 10**6:
        raise MapError(f"aliasing guard: entries of A^{T} exceed 1e6")
    f = _as_spectrum(f_hat)
    g = _as_spectrum(g_hat)
    Fg = _character_grid(f, G)
    q = np.arange(G)
    Qy, Px = np.meshgrid(q, q, indexing="ij")
    (a, b), (c, d) = P
    Xi = (a * Px + b * Qy) % G
    Yi = (c * Px + d * Qy) % G
    gc = np.zeros((G, G), dtype=complex)
    for (k1, k2), coef in g.items():
        gc += coef * np.exp(2j * math.pi * (((k1 * Xi + k2 * Yi) % G) / G))
    mean_f = Fg.mean()
    mean_g = gc.mean()
    return complex((gc * Fg.conj()).mean() - mean_g * np.conj(mean_f))
