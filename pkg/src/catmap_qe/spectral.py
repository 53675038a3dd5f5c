"""Eigendecomposition of quantized maps with explicit handling of degenerate eigenspaces."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

TOL_CLUSTER = 1e-8


class SpectralError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenSystem:
    N: int
    phases: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray

    def orthonormality_defect(self) -> float:
        V = self.vectors
        return float(np.abs(V.conj().T @ V - np.eye(self.N)).max())


@dataclass(frozen=True)
class DegeneracyClusters:
    clusters: tuple
    tol: float

    @property
    def sizes(self) -> list:
        return [len(c) for c in self.clusters]


def _residuals(U, phases, V):
    return np.linalg.norm(U @ V - V * np.exp(1j * phases)[None, :], axis=0)


def eigendecompose(U, max_residual: float = 1e-9) -> EigenSystem:
    """Complex Schur form of a unitary matrix; the Schur vectors are the eigensections.

    Schur vectors are orthonormal by construction, also inside degenerate eigenspaces,
    which a general eigensolver does not guarantee. Output is sorted by phase.
    """
    Um = U.entries if hasattr(U, "entries") else np.asarray(U)
    N = Um.shape[0]
    Tm, Z = scipy.linalg.schur(Um, output="complex")
    phases = np.mod(np.angle(np.diag(Tm)), 2 * math.pi)
    order = np.argsort(phases, kind="stable")
    phases, Z = phases[order], Z[:, order]
    res = _residuals(Um, phases, Z)
    worst = int(np.argmax(res)) if N else 0
    if N and res[worst] > max_residual:
        raise SpectralError(f"eigen-residual {res[worst]:.3e} at index {worst} exceeds {max_residual}")
    return EigenSystem(N=N, phases=phases, vectors=Z, residuals=res)


def _circ_dist(a, b):
    d = np.abs(a - b) % (2 * math.pi)
    return np.minimum(d, 2 * math.pi - d)


def cluster_degeneracies(es: EigenSystem, tol_cluster: float = TOL_CLUSTER) -> DegeneracyClusters:
    """Partition indices by gaps >= tol in the circularly sorted phase list."""
    if not 1e-10 <= tol_cluster <= 1e-6:
        raise ValueError(f"tol_cluster must lie in [1e-10, 1e-6], got {tol_cluster}")
    N = es.N
    order = np.argsort(es.phases, kind="stable")
    p = es.phases[order]
    gaps = _circ_dist(np.roll(p, -1), p)  # gap after position i
    breaks = np.flatnonzero(gaps >= tol_cluster)
    if breaks.size == 0:
        return DegeneracyClusters(clusters=(tuple(sorted(order.tolist())),), tol=tol_cluster)
    start = (breaks[-1] + 1) % N
    clusters, cur = [], []
    for step in range(N):
        i = (start + step) % N
        cur.append(int(order[i]))
        if gaps[i] >= tol_cluster:
            clusters.append(tuple(sorted(cur)))
            cur = []
    clusters.sort(key=lambda c: c[0])
    return DegeneracyClusters(clusters=tuple(clusters), tol=tol_cluster)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))[None, :]


def resample_degenerate_basis(es: EigenSystem, clusters: DegeneracyClusters, seed: int, U=None) -> EigenSystem:
    """Replace each degenerate cluster's columns by a seeded Haar-random recombination."""
    rng = np.random.default_rng(seed)
    V = es.vectors.copy()
    for c in clusters.clusters:
        if len(c) < 2:
            continue
        idx = np.array(c)
        V[:, idx] = V[:, idx] @ haar_unitary(len(c), rng)
    res = es.residuals if U is None else _residuals(U.entries if hasattr(U, "entries") else U, es.phases, V)
    return EigenSystem(N=es.N, phases=es.phases, vectors=V, residuals=res)


def eigensections(U, seed: int = 0, tol_cluster: float = TOL_CLUSTER):
    """Decompose, cluster and resample: the default eigenbasis used by every experiment."""
    es = eigendecompose(U)
    cl = cluster_degeneracies(es, tol_cluster)
    if max(cl.sizes) > 1:
        es = resample_degenerate_basis(es, cl, seed, U)
    return es, cl
