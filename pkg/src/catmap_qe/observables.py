"""Eigensection statistics: matrix elements, quantum variances, Szego traces,
Egorov remainders, ball masses over log-good covers, and Markov extraction of
density-one index sets.

Integrals of the form int f |s|^2 dV are evaluated through the Fourier modes of the
density |s|^2: with W(k) = v^* C(k) v,

    int f |s|^2 dV = sum_k f_k exp(-pi |k|^2 / (2N)) W(k),

which is exact for any integrable f (the Gaussian factor truncates the sum). This
route is independent of the grid quadrature in :mod:`catmap_qe.theta`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special

from . import dynamics
from .quantization import ToeplitzMatrix, character_operator, damping, toeplitz_of_spectrum
from .torus import BumpProfile, TorusPoint, build_log_good_cover, log_scale

# Gaussian mode cutoff: exp(-pi |k|^2/(2N)) < 1e-15 beyond this radius
_MODE_TAIL = 15 * math.log(10)
_GL_NODES = 400


def mode_radius(N: int) -> int:
    return int(math.ceil(math.sqrt(2.0 * N * _MODE_TAIL / math.pi)))


# ----------------------------------------------------------------------------- symbols


@dataclass(frozen=True)
class TrigSymbol:
    """Real trigonometric polynomial sum_k c_k e_k (caller supplies conjugate pairs)."""

    coeffs: tuple
    label: str = "trig"

    @classmethod
    def from_dict(cls, spec: dict, label: str = "trig") -> "TrigSymbol":
        return cls(tuple(sorted((tuple(int(v) for v in k), complex(c)) for k, c in spec.items())), label)

    @classmethod
    def cos(cls, k1: int, k2: int = 0) -> "TrigSymbol":
        if (k1, k2) == (0, 0):
            return cls.constant(1.0)
        return cls.from_dict({(k1, k2): 0.5, (-k1, -k2): 0.5}, label=f"cos({k1},{k2})")

    @classmethod
    def constant(cls, c: float) -> "TrigSymbol":
        return cls.from_dict({(0, 0): c}, label=f"const({c:g})")

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def spectrum(self, N: int):
        d = self.as_dict()
        return np.array(list(d.keys()), dtype=np.int64).reshape(-1, 2), np.array(list(d.values()), dtype=complex)

    @property
    def mean(self) -> complex:
        return self.as_dict().get((0, 0), 0j)

    @property
    def sup(self) -> float:
        return float(sum(abs(c) for _, c in self.coeffs))

    def l2_sq(self) -> float:
        return float(sum(abs(c) ** 2 for _, c in self.coeffs))

    def pullback(self, A, T: int) -> "TrigSymbol":
        P = dynamics.matpow(dynamics.transpose(dynamics._mat(A)), T)
        return TrigSymbol.from_dict({dynamics.apply(P, k): c for k, c in self.coeffs}, self.label + f"@T{T}")

    def __call__(self, X, Y):
        out = np.zeros(np.broadcast(X, Y).shape, dtype=complex)
        for (k1, k2), c in self.coeffs:
            out = out + c * np.exp(2j * math.pi * (k1 * X + k2 * Y))
        return out.real if all(abs(c - np.conj(self.as_dict().get((-k[0], -k[1]), 0))) < 1e-15 for k, c in self.coeffs) else out


def disk_transform(r: float, kk: np.ndarray) -> np.ndarray:
    """Fourier transform of the indicator of the disk of radius r at |k| = kk."""
    kk = np.asarray(kk, dtype=float)
    out = np.full(kk.shape, math.pi * r * r)
    nz = kk > 0
    out[nz] = r * scipy.special.j1(2 * math.pi * r * kk[nz]) / kk[nz]
    return out


def bump_transform(r: float, kk: np.ndarray, profile: BumpProfile | None = None) -> np.ndarray:
    """Fourier transform of z -> profile(|z|/r) at |k| = kk (radial Hankel transform)."""
    profile = profile or BumpProfile()
    kk = np.asarray(kk, dtype=float)
    flat = disk_transform(r, kk)
    t, w = np.polynomial.legendre.leggauss(_GL_NODES)
    t = 1.5 + 0.5 * t
    w = 0.5 * w
    ft = profile(t)
    uk, inv = np.unique(kk.ravel(), return_inverse=True)
    shell = np.empty_like(uk)
    for s in range(0, uk.size, 2048):
        a = 2 * math.pi * r * uk[s : s + 2048, None] * t[None, :]
        shell[s : s + 2048] = (scipy.special.j0(a) * (ft * t * w)[None, :]).sum(axis=1)
    return flat + 2 * math.pi * r * r * shell[inv].reshape(kk.shape)


@dataclass(frozen=True)
class BumpSymbol:
    """Dilated cutoff f(d(z, p)/epsilon): 1 on B(p, eps), 0 outside B(p, 2 eps)."""

    center: TorusPoint
    epsilon: float
    label: str = "bump"

    def spectrum(self, N: int):
        K = mode_radius(N)
        r = np.arange(-K, K + 1)
        K1, K2 = np.meshgrid(r, r, indexing="ij")
        keep = K1**2 + K2**2 <= K * K
        ks = np.stack([K1[keep], K2[keep]], axis=1).astype(np.int64)
        kk = np.hypot(ks[:, 0], ks[:, 1])
        cs = bump_transform(self.epsilon, kk) * np.exp(-2j * math.pi * (ks[:, 0] * self.center.x + ks[:, 1] * self.center.y))
        return ks, cs

    @property
    def mean(self) -> float:
        return float(bump_transform(self.epsilon, np.array([0.0]))[0])

    @property
    def sup(self) -> float:
        return 1.0

    def __call__(self, X, Y):
        from .torus import torus_distance_array

        return BumpProfile()(torus_distance_array(self.center, X, Y) / self.epsilon)


def holder_norm(beta: float, n: int = 201) -> float:
    """C^{0,beta} norm (sup + seminorm) of the undilated radial bump, by finite differences."""
    t = np.linspace(0.0, 2.5, n)
    f = BumpProfile()(t)
    df = np.abs(f[:, None] - f[None, :])
    dt = np.abs(t[:, None] - t[None, :])
    np.fill_diagonal(dt, np.inf)
    return float(1.0 + (df / dt**beta).max())


# ----------------------------------------------------------------------------- matrix elements


def matrix_elements(T_f, es) -> np.ndarray:
    """elem_j = v_j^* T_f v_j."""
    T = T_f.entries if hasattr(T_f, "entries") else np.asarray(T_f)
    V = es.vectors
    return np.einsum("ij,ij->j", V.conj(), T @ V)


def symbol_elements(symbol, es) -> np.ndarray:
    T = toeplitz_of_spectrum(es.N, symbol.spectrum(es.N), symbol=symbol.label)
    return matrix_elements(T, es)


def density_modes(V: np.ndarray, K: int) -> np.ndarray:
    """W[s, k1+K, k2+K] = v_s^* C(k1, k2) v_s for |k1|, |k2| <= K; V has columns v_s."""
    N, S = V.shape
    k2 = np.arange(-K, K + 1)
    W = np.empty((S, 2 * K + 1, 2 * K + 1), dtype=complex)
    Vc = V.conj()
    for i, k1 in enumerate(range(-K, K + 1)):
        prod = np.roll(Vc, -k1, axis=0) * V  # conj(v_{j+k1}) v_j
        F = np.fft.fft(prod, axis=0)  # sum_j prod_j exp(-2 pi i k2 j / N)
        ph = np.exp(-1j * math.pi * ((k1 * k2) % (2 * N)) / N)
        W[:, i, :] = (F[k2 % N, :] * ph[:, None]).T
    return W


# ----------------------------------------------------------------------------- records


@dataclass(frozen=True)
class VarianceRecord:
    N: int
    symbol: str
    variance: float
    elements: np.ndarray = field(repr=False)
    mean: float
    epsilon: float | None = None
    comparison: float | None = None

    def recompute(self) -> float:
        return float(np.mean(np.abs(self.elements - self.mean) ** 2))


@dataclass(frozen=True)
class GenericSetRecord:
    N: int
    threshold: float
    exceptional: np.ndarray
    generic: np.ndarray
    mean_value: float

    @property
    def exceptional_density(self) -> float:
        return self.exceptional.size / self.N

    @property
    def generic_density(self) -> float:
        return self.generic.size / self.N

    @property
    def markov_bound(self) -> float:
        return self.mean_value / self.threshold


@dataclass(frozen=True)
class MassRecord:
    N: int
    j: int
    ball: int
    sharp: float
    smooth: float
    ratio: float


@dataclass(frozen=True)
class EgorovRecord:
    N: int
    T: int
    symbol: str
    value: float
    hs_sq: float


# ----------------------------------------------------------------------------- variances


def quantum_variance(f, cmap, N: int, es) -> VarianceRecord:
    """(1/N) sum_j |<T_f s_j, s_j> - int f dV|^2."""
    elems = symbol_elements(f, es)
    mean = f.mean
    var = float(np.mean(np.abs(elems - mean) ** 2))
    return VarianceRecord(N=N, symbol=f.label, variance=var, elements=elems, mean=float(np.real(mean)))


def variance_dilated_symbol(p: TorusPoint, gamma: float, cmap, N: int, es, prefactor: float = 1.0, beta: float = 0.5) -> VarianceRecord:
    eps = log_scale(gamma, N, prefactor).epsilon
    f = BumpSymbol(p, eps, label=f"bump(p=({p.x:g},{p.y:g}),eps={eps:.6g})")
    rec = quantum_variance(f, cmap, N, es)
    comp = holder_norm(beta) ** 2 * math.log(N) ** (2 * gamma * beta - 1)
    return VarianceRecord(
        N=N, symbol=rec.symbol, variance=rec.variance, elements=rec.elements, mean=rec.mean,
        epsilon=eps, comparison=comp,
    )


def density_one_extract(values, a: float) -> GenericSetRecord:
    """Markov split: exceptional = {j : value_j >= a}; asserts |exceptional|/N <= mean/a."""
    values = np.asarray(values, dtype=float)
    if not a > 0:
        raise ValueError(f"Markov threshold must be positive, got {a}")
    if (values < 0).any():
        raise ValueError("Markov extraction needs nonnegative values")
    N = values.size
    exc = np.flatnonzero(values >= a)
    gen = np.flatnonzero(values < a)
    rec = GenericSetRecord(N=N, threshold=a, exceptional=exc, generic=gen, mean_value=float(values.mean()) if N else 0.0)
    assert rec.exceptional_density <= rec.markov_bound + 1e-12, "Markov bound violated"
    return rec


def markov_threshold(values, N: int) -> float:
    """Default threshold: mean * |log N|^(1/2)."""
    m = float(np.mean(values))
    return m * math.sqrt(math.log(N)) if m > 0 else 1.0


def filtered_variance(rec: VarianceRecord, a: float | None = None):
    """Variance restricted to the Markov-generic indices of |elem_j - mean|^2."""
    X = np.abs(rec.elements - rec.mean) ** 2
    a = a if a is not None else markov_threshold(X, rec.N)
    gs = density_one_extract(X, a)
    return float(X[gs.generic].mean()) if gs.generic.size else 0.0, gs


# ----------------------------------------------------------------------------- traces, Egorov


def szego_trace_check(f: TrigSymbol, cmap, N: int, T: int = 0) -> tuple[float, float]:
    """((1/N) Tr[L^* L], int |f|^2) with L the Toeplitz operator of f o chi^T."""
    g = f.pullback(cmap.A, T) if T else f
    L = toeplitz_of_spectrum(N, g.spectrum(N)).entries
    lhs = float(np.real(np.vdot(L, L)) / N)
    return lhs, f.l2_sq()


def _matrix_power(U: np.ndarray, T: int) -> np.ndarray:
    if T < 0:
        return _matrix_power(U.conj().T, -T)
    return np.linalg.matrix_power(U, T)


def egorov_remainder(cmap, N: int, f: TrigSymbol, T: int, U=None) -> EgorovRecord:
    """R = U^T T_f U^-T - T_{f o chi^T}; value = (1/N) ||R||_HS^2."""
    from .quantization import quantize

    if abs(T) > 16:
        raise ValueError(f"|T| must be <= 16, got {T}")
    Um = (U if U is not None else quantize(cmap, N)).entries
    Tf = toeplitz_of_spectrum(N, f.spectrum(N)).entries
    UT = _matrix_power(Um, T)
    conj = UT @ Tf @ UT.conj().T
    target = toeplitz_of_spectrum(N, f.pullback(cmap.A, T).spectrum(N)).entries
    R = conj - target
    hs = float(np.real(np.vdot(R, R)))
    return EgorovRecord(N=N, T=T, symbol=f.label, value=hs / N, hs_sq=hs)


# ----------------------------------------------------------------------------- masses


@dataclass
class MassSweep:
    N: int
    epsilon: float
    cover: object
    indices: np.ndarray
    sharp: np.ndarray  # shape (n_sections, n_balls)
    smooth: np.ndarray
    ball_area: float
    smooth_mean: float

    @property
    def ratios(self) -> np.ndarray:
        return self.sharp / self.ball_area

    def records(self):
        R = self.ratios
        for a, j in enumerate(self.indices):
            for b in range(self.sharp.shape[1]):
                yield MassRecord(self.N, int(j), b, float(self.sharp[a, b]), float(self.smooth[a, b]), float(R[a, b]))

    def summary(self, quantiles=(0.05, 0.5, 0.95)) -> dict:
        lo = self.ratios.min(axis=1)
        hi = self.ratios.max(axis=1)
        return {
            "N": self.N,
            "epsilon": self.epsilon,
            "balls": int(self.sharp.shape[1]),
            "sections": int(self.sharp.shape[0]),
            "C1_quantiles": {str(q): float(np.quantile(lo, q)) for q in quantiles},
            "C2_quantiles": {str(q): float(np.quantile(hi, q)) for q in quantiles},
        }

    def smooth_deviation(self) -> np.ndarray:
        """Per-section mean over balls of |smooth mass - int f dV|^2."""
        return (np.abs(self.smooth - self.smooth_mean) ** 2).mean(axis=1)


def ball_masses(V: np.ndarray, centers_lattice: int, radius: float, chunk: int = 32):
    """Sharp and smooth masses of every column of V on the lattice of centers (a/M, b/M).

    Returns arrays of shape (S, M*M), ball index a*M + b for center (a/M, b/M).
    """
    N, S = V.shape
    M = centers_lattice
    K = mode_radius(N)
    r = np.arange(-K, K + 1)
    K1, K2 = np.meshgrid(r, r, indexing="ij")
    kk = np.hypot(K1, K2)
    inside = kk <= K
    dk = np.exp(-math.pi * kk**2 / (2.0 * N)) * inside
    fs = disk_transform(radius, kk) * dk
    fm = bump_transform(radius, kk) * dk
    i1 = K1 % M
    i2 = K2 % M
    sharp = np.empty((S, M * M))
    smooth = np.empty((S, M * M))
    for s in range(0, S, chunk):
        W = density_modes(V[:, s : s + chunk], K)
        for t in range(W.shape[0]):
            for out, fh in ((sharp, fs), (smooth, fm)):
                folded = np.zeros((M, M), dtype=complex)
                np.add.at(folded, (i1, i2), fh * W[t])
                # sum_k folded[k] exp(-2 pi i (k1 a + k2 b)/M)
                out[s + t] = np.fft.fft2(folded).real.ravel()
    return sharp, smooth


def mass_sweep(cmap, N: int, es, gamma_prime: float, prefactor: float = 1.0, sample: int | None = None, seed: int = 0) -> MassSweep:
    """Masses of eigensections on every ball of the log-good cover at scale eps'_N."""
    scale = log_scale(gamma_prime, N, prefactor)
    cover = build_log_good_cover(scale)
    idx = np.arange(es.N)
    if sample is not None and sample < es.N:
        idx = np.sort(np.random.default_rng(seed).choice(es.N, size=sample, replace=False))
    sharp, smooth = ball_masses(es.vectors[:, idx], cover.lattice_size, scale.epsilon)
    return MassSweep(
        N=N, epsilon=scale.epsilon, cover=cover, indices=idx, sharp=sharp, smooth=smooth,
        ball_area=math.pi * scale.epsilon**2,
        smooth_mean=float(bump_transform(scale.epsilon, np.array([0.0]))[0]),
    )


def point_masses(V: np.ndarray, p: TorusPoint, radius: float) -> np.ndarray:
    """Exact disk masses int_{B(p, r)} |s|^2 for each column of V."""
    N = V.shape[0]
    K = mode_radius(N)
    r = np.arange(-K, K + 1)
    K1, K2 = np.meshgrid(r, r, indexing="ij")
    kk = np.hypot(K1, K2)
    fh = disk_transform(radius, kk) * np.exp(-math.pi * kk**2 / (2.0 * N)) * (kk <= K)
    fh = fh * np.exp(-2j * math.pi * (K1 * p.x + K2 * p.y))
    out = []
    for s in range(0, V.shape[1], 64):
        W = density_modes(V[:, s : s + 64], K)
        out.append(np.einsum("skl,kl->s", W, fh).real)
    return np.concatenate(out)


@dataclass(frozen=True)
class FixedPointRecord:
    N: int
    epsilon: float
    raw_mean: float
    filtered_mean: float
    generic_density: float


def fixed_point_mass(cmap, N_grid, es_per_N, p: TorusPoint, gamma: float, prefactor: float = 1.0) -> list:
    """Per N: mean of |mass(B(p, eps_N)) - Vol(B)| |log N|^(2 gamma), raw and Markov-filtered."""
    out = []
    for N, es in zip(N_grid, es_per_N):
        scale = log_scale(gamma, N, prefactor, gamma_max=0.25)
        m = point_masses(es.vectors, p, scale.epsilon)
        dev = np.abs(m - math.pi * scale.epsilon**2) * math.log(N) ** (2 * gamma)
        gs = density_one_extract(dev**2, markov_threshold(dev**2, N))
        filt = float(dev[gs.generic].mean()) if gs.generic.size else 0.0
        out.append(FixedPointRecord(N=N, epsilon=scale.epsilon, raw_mean=float(dev.mean()), filtered_mean=filt, generic_density=gs.generic_density))
    return out


def time_average_substitution_defect(U, T_f: ToeplitzMatrix, T: int, es) -> float:
    """max_j |<[T_f]_T v_j, v_j> - <T_f v_j, v_j>| for the time-averaged operator."""
    from .quantization import time_average_operator

    avg = time_average_operator(U, T_f, T)
    return float(np.abs(matrix_elements(avg, es) - matrix_elements(T_f, es)).max())


__all__ = [name for name in dir() if not name.startswith("_")] + ["character_operator", "damping"]
