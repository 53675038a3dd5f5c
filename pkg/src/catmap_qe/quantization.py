"""Metaplectic quantization of even-shear cat maps and Toeplitz operators on theta space.

Operators act on coefficient vectors in the orthonormal theta basis. The basic
objects are the character operators

    C(k) = exp(-i pi k1 k2 / N) X^k1 Z^-k2,   X e_j = e_{j+1},   Z = diag(exp(2 pi i j / N)),

for which Toeplitz quantization of a character is exact:
T[e_k] = exp(-pi |k|^2 / (2N)) C(k). Conjugation by the generator unitaries maps
C(k) to C(M^T k) exactly, with M the generator's torus matrix:

    S = [[0, 1], [-1, 0]]  ->  unitary DFT  F_{jl} = exp(-2 pi i j l / N) / sqrt(N)
    U^b = [[1, b], [0, 1]] ->  diag(exp(-i pi b j^2 / N))
    L^b = [[1, 0], [b, 1]] ->  F diag(exp(i pi b j^2 / N)) F^*

Pullback is contravariant, so for A = G1 G2 ... Gn the quantized map is
Q(Gn) ... Q(G1); it satisfies U T[f] U^* ~ T[f o A] and quantize(A) quantize(B)
equals quantize(B A) up to a phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .theta import ThetaSpace, basis_matrix, grid_points, grid_size

SHEAR_S = ((0, 1), (-1, 0))


class FactorizationError(ValueError):
    pass


class QuantizationError(ValueError):
    pass


def _gen_matrix(name: str, e: int):
    from .dynamics import matpow

    if name == "S":
        return matpow(SHEAR_S, e)
    if name == "U":
        return ((1, e), (0, 1))
    if name == "L":
        return ((1, 0), (e, 1))
    raise ValueError(f"unknown generator {name!r}")


@dataclass(frozen=True)
class Sl2Word:
    generators: tuple = field(default=())

    def matrix(self):
        from .dynamics import matmul

        M = ((1, 0), (0, 1))
        for name, e in self.generators:
            M = matmul(M, _gen_matrix(name, e))
        return M

    @property
    def admissible(self) -> bool:
        return all(e % 2 == 0 for name, e in self.generators if name != "S")


def _simplify(gens):
    out = []
    for name, e in gens:
        if out and out[-1][0] == name:
            e = out.pop()[1] + e
        if name == "S":
            e %= 4
        if e != 0:
            out.append((name, e))
    return tuple(out)


def _nearest_even(a: int, c: int) -> int:
    """Even k minimizing |a + k c|."""
    q = -a / (2 * c)
    cands = (2 * math.floor(q), 2 * math.ceil(q))
    return min(cands, key=lambda k: (abs(a + k * c), abs(k)))


def factor_sl2z(A, max_depth: int = 64) -> Sl2Word:
    """Factor A into S and even shears by an even-step Euclidean reduction of its first column."""
    from .dynamics import _mat

    A = _mat(A)
    (a, b), (c, d) = A
    if a * d - b * c != 1:
        raise FactorizationError(f"det A = {a * d - b * c}, expected 1")
    applied = []
    M = A
    for _ in range(max_depth):
        (a, b), (c, d) = M
        if a == 0 or c == 0:
            break
        if abs(a) == abs(c):
            raise FactorizationError(
                f"first column ({a}, {c}) is odd in both entries mod 2; no even-shear word exists"
            )
        if abs(a) > abs(c):
            k = _nearest_even(a, c)
            M = ((a + k * c, b + k * d), (c, d))
            applied.append(("U", k))
        else:
            k = _nearest_even(c, a)
            M = ((a, b), (c + k * a, d + k * b))
            applied.append(("L", k))
    else:
        raise FactorizationError(f"no even-shear word found within depth {max_depth}")
    (a, b), (c, d) = M
    if c == 0:
        # a = d = +-1
        x = b * a
        if x % 2:
            raise FactorizationError(f"terminal upper shear exponent {x} is odd")
        tail = [("U", x)] if a == 1 else [("S", 2), ("U", x)]
    else:
        # a == 0, b = -c = +-1
        if d % 2:
            raise FactorizationError(f"terminal shear exponent {d} is odd")
        tail = [("S", 1), ("U", -d)] if b == 1 else [("S", 3), ("U", d)]
    gens = [(name, -k) for name, k in applied] + tail
    word = Sl2Word(_simplify(gens))
    if word.matrix() != A:
        raise FactorizationError("internal error: word does not multiply back to A")
    return word


@dataclass(frozen=True)
class UnitaryMatrix:
    N: int
    entries: np.ndarray

    def unitarity_defect(self) -> float:
        U = self.entries
        return float(np.abs(U.conj().T @ U - np.eye(self.N)).max())


@dataclass(frozen=True)
class ToeplitzMatrix:
    N: int
    symbol: str
    entries: np.ndarray

    def hermitian_defect(self) -> float:
        T = self.entries
        return float(np.abs(T - T.conj().T).max())


def _dft(M, inverse=False):
    return np.fft.ifft(M, axis=0, norm="ortho") if inverse else np.fft.fft(M, axis=0, norm="ortho")


def _shear_phase(N: int, b: int) -> np.ndarray:
    j = np.arange(N, dtype=np.int64)
    # b even: exp(-i pi b j^2 / N) = exp(-2 pi i (b/2) j^2 / N), exact modular reduction
    r = ((b // 2) * (j * j % N)) % N
    return np.exp(-2j * math.pi * r / N)


def apply_generator(name: str, e: int, M: np.ndarray) -> np.ndarray:
    N = M.shape[0]
    if name == "S":
        for _ in range(e % 4):
            M = _dft(M)
        return M
    if e % 2:
        raise QuantizationError(f"shear exponent {e} is odd; quantization condition violated")
    if name == "U":
        return _shear_phase(N, e)[:, None] * M
    if name == "L":
        M = _dft(M, inverse=True)
        M = _shear_phase(N, -e)[:, None] * M
        return _dft(M)
    raise ValueError(f"unknown generator {name!r}")


def quantize_word(word: Sl2Word, N: int) -> UnitaryMatrix:
    M = np.eye(N, dtype=complex)
    for name, e in word.generators:
        M = apply_generator(name, e, M)
    return UnitaryMatrix(N=N, entries=M)


def quantize(cmap, N: int) -> UnitaryMatrix:
    if not cmap.admissible:
        raise QuantizationError(f"map {cmap.A} is not admissible: {cmap.diagnostic}")
    return quantize_word(Sl2Word(cmap.word), N)


def character_operator(N: int, k) -> np.ndarray:
    """C(k): the exact Toeplitz operator of e_k divided by its damping."""
    k1, k2 = int(k[0]), int(k[1])
    j = np.arange(N, dtype=np.int64)
    # exp(-i pi (2 k2 j + k1 k2) / N) with the exponent reduced mod 2N in integers
    r = (2 * k2 * j + k1 * k2) % (2 * N)
    M = np.zeros((N, N), dtype=complex)
    M[(j + k1) % N, j] = np.exp(-1j * math.pi * r / N)
    return M


def character_translation(k) -> tuple:
    """Translation vector v with heisenberg_translation(v) = C(k)."""
    return (int(k[1]), -int(k[0]))


def heisenberg_translation(N: int, v) -> UnitaryMatrix:
    """Weyl operator translating sections by v/N on the torus.

    Labeled by translation vector, so quantize(A)^* T(v) quantize(A) = T(A v); as an
    operator it is C(J v) with J v = (-v2, v1).
    """
    return UnitaryMatrix(N=N, entries=character_operator(N, (-int(v[1]), int(v[0]))))


def damping(N: int, k) -> float:
    return math.exp(-math.pi * (k[0] ** 2 + k[1] ** 2) / (2.0 * N))


def toeplitz_of_spectrum(N: int, spectrum, symbol: str = "trig") -> ToeplitzMatrix:
    """Toeplitz operator of sum_k c_k e_k, assembled exactly from character operators.

    ``spectrum`` is a dict {(k1, k2): c} or a pair (ks, cs) of arrays. Entries on the
    k1-th cyclic diagonal are an FFT over the folded k2 coefficients.
    """
    if isinstance(spectrum, dict):
        ks = np.array(list(spectrum.keys()), dtype=np.int64).reshape(-1, 2)
        cs = np.array(list(spectrum.values()), dtype=complex)
    else:
        ks, cs = np.asarray(spectrum[0], dtype=np.int64).reshape(-1, 2), np.asarray(spectrum[1], dtype=complex)
    T = np.zeros((N, N), dtype=complex)
    j = np.arange(N)
    if len(ks) == 0:
        return ToeplitzMatrix(N=N, symbol=symbol, entries=T)
    w = cs * np.exp(-math.pi * (ks[:, 0] ** 2 + ks[:, 1] ** 2) / (2.0 * N))
    w = w * np.exp(-1j * math.pi * ((ks[:, 0] * ks[:, 1]) % (2 * N)) / N)
    for k1 in np.unique(ks[:, 0]):
        sel = ks[:, 0] == k1
        folded = np.zeros(N, dtype=complex)
        np.add.at(folded, ks[sel, 1] % N, w[sel])
        # diag_j = sum_k2 folded[k2] exp(-2 pi i k2 j / N)
        diag = np.fft.fft(folded)
        T[(j + k1) % N, j] += diag
    return ToeplitzMatrix(N=N, symbol=symbol, entries=T)


def toeplitz_of_function(space: ThetaSpace, f, G: int | None = None, symbol: str = "grid", chunk: int = 8192) -> ToeplitzMatrix:
    """(T_f)_{jk} = grid quadrature of f * theta_hat_k * conj(theta_hat_j) * weight."""
    G = G or grid_size(space.N)
    X, Y = grid_points(G)
    F = f(X, Y) if callable(f) else np.asarray(f)
    F = np.broadcast_to(F, X.shape).ravel()
    xs, ys = X.ravel(), Y.ravel()
    T = np.zeros((space.N, space.N), dtype=complex)
    for s in range(0, xs.size, chunk):
        B = basis_matrix(space, xs[s : s + chunk], ys[s : s + chunk])
        T += B.conj().T @ (F[s : s + chunk, None] * B)
    return ToeplitzMatrix(N=space.N, symbol=symbol, entries=T / G**2)


def grid_spectrum(F: np.ndarray, tol: float = 0.0):
    """Fourier coefficients of grid samples F[q, p] = f(p/G, q/G) as arrays (ks, cs)."""
    G = F.shape[0]
    C = np.fft.fft2(F) / G**2  # C[a, b] is the coefficient of frequency (k1, k2) = (b, a)
    freqs = np.fft.fftfreq(G, d=1.0 / G).astype(np.int64)
    A, Bq = np.meshgrid(freqs, freqs, indexing="ij")
    ks = np.stack([Bq.ravel(), A.ravel()], axis=1)
    cs = C.ravel()
    keep = np.abs(cs) > tol
    return ks[keep], cs[keep]


def time_average_operator(U: UnitaryMatrix, T_f: ToeplitzMatrix, T: int) -> np.ndarray:
    """(2T+1)^-1 sum_{n=-T}^{T} U^n T_f U^-n."""
    Um = U.entries
    acc = T_f.entries.copy()
    fwd = T_f.entries
    bwd = T_f.entries
    for _ in range(T):
        fwd = Um @ fwd @ Um.conj().T
        bwd = Um.conj().T @ bwd @ Um
        acc = acc + fwd + bwd
    return acc / (2 * T + 1)
