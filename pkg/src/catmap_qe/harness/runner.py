"""Experiment orchestration: one work unit per N, canonical reduction, result files + manifest."""

from __future__ import annotations

import math
import os
import platform
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__, asymptotics, observables, theta, zeros
from ..dynamics import correlation_exact, correlation_quadrature, MapError
from ..quantization import quantize
from ..spectral import eigensections
from ..torus import TorusPoint, build_log_good_cover, log_scale, verify_cover
from . import io
from .config import ExperimentConfig, config_hash, dump_config, validate

REDUCTION_ORDER = "N ascending, then j ascending, then ball/zero index ascending"


class RunError(RuntimeError):
    pass


@dataclass
class UnitResult:
    key: object
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)
    error: str | None = None
    seconds: float = 0.0


def thread_count() -> int:
    raw = os.environ.get("CATMAP_QE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise RunError(f"CATMAP_QE_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def _symbol(cfg: ExperimentConfig, N: int):
    if cfg.symbol_kind == "constant":
        return observables.TrigSymbol.constant(1.0)
    if cfg.symbol_kind == "cos":
        return observables.TrigSymbol.cos(cfg.symbol_k1, cfg.symbol_k2)
    eps = log_scale(cfg.gamma, N, cfg.scale_prefactor).epsilon
    p = TorusPoint(cfg.symbol_px, cfg.symbol_py)
    return observables.BumpSymbol(p, eps, label=f"bump(p=({p.x:g},{p.y:g}),eps={eps:.6g})")


def _sample_indices(cfg: ExperimentConfig, N: int) -> np.ndarray:
    if N <= 512 or cfg.sample >= N:
        return np.arange(N)
    return np.sort(np.random.default_rng([cfg.seed, N]).choice(N, size=cfg.sample, replace=False))


def _spectrum(cfg, cmap, N):
    U = quantize(cmap, N)
    es, cl = eigensections(U, seed=cfg.seed)
    rows = [(N, j, float(es.phases[j]), float(es.residuals[j])) for j in range(N)]
    summ = {
        "unitarity_defect": U.unitarity_defect(),
        "max_residual": float(es.residuals.max()),
        "orthonormality_defect": es.orthonormality_defect(),
        "clusters": len(cl.clusters),
        "max_cluster": max(cl.sizes),
    }
    return rows, summ, {}


def _variance(cfg, cmap, N):
    es, _ = eigensections(quantize(cmap, N), seed=cfg.seed)
    f = _symbol(cfg, N)
    rec = observables.quantum_variance(f, cmap, N, es)
    filt, gs = observables.filtered_variance(rec)
    rows = [
        (N, rec.symbol, j, float(e.real), float(e.imag), rec.mean, rec.variance)
        for j, e in enumerate(rec.elements)
    ]
    summ = {
        "symbol": rec.symbol,
        "variance": rec.variance,
        "variance_log_n": rec.variance * math.log(N),
        "filtered_variance": filt,
        "generic_density": gs.generic_density,
        "variance_nonnegative": rec.variance >= 0,
    }
    return rows, summ, {"markov_threshold": gs.threshold}


def _mass(cfg, cmap, N):
    es, _ = eigensections(quantize(cmap, N), seed=cfg.seed)
    idx = _sample_indices(cfg, N)
    sample = None if idx.size == N else idx.size
    sw = observables.mass_sweep(cmap, N, es, cfg.gamma_prime, cfg.scale_prefactor, sample=sample, seed=cfg.seed)
    rows = []
    for a, j in enumerate(sw.indices):
        for b in range(sw.sharp.shape[1]):
            rows.append((N, int(j), b, float(sw.sharp[a, b]), float(sw.smooth[a, b]), float(sw.ratios[a, b])))
    dev = sw.smooth_deviation()
    gs = observables.density_one_extract(dev, observables.markov_threshold(dev, N))
    summ = sw.summary()
    summ["ratios_positive"] = bool((sw.ratios > 0).all())
    summ["generic_density"] = gs.generic_density
    return rows, summ, {"markov_threshold": gs.threshold, "mode_radius": observables.mode_radius(N), "balls": int(sw.sharp.shape[1])}


def _zeros(cfg, cmap, N):
    es, _ = eigensections(quantize(cmap, N), seed=cfg.seed)
    space = theta.make_space(N)
    scale = log_scale(cfg.gamma, N, cfg.scale_prefactor)
    centers = build_log_good_cover(scale).center_array()
    rows, totals, disc = [], [], []
    for j in _sample_indices(cfg, N):
        zs = zeros.locate_zeros(theta.SectionCoeffs(space, es.vectors[:, j]), int(j))
        totals.append(zs.total_count)
        disc.append(zeros.ball_discrepancies(zs, centers, scale.epsilon))
        for k, ((x, y), m) in enumerate(zip(zs.zeros, zs.multiplicities)):
            rows.append((N, int(j), k, float(x), float(y), int(m)))
    disc = np.array(disc)
    X = (disc**2).mean(axis=1)
    gs = observables.density_one_extract(X, observables.markov_threshold(X, N))
    summ = {
        "sections": len(totals),
        "all_counts_equal_n": all(t == N for t in totals),
        "median_discrepancy_filtered": float(np.median(disc[gs.generic])) if gs.generic.size else 0.0,
        "median_discrepancy_all": float(np.median(disc)),
        "epsilon": scale.epsilon,
    }
    return rows, summ, {"markov_threshold": gs.threshold, "cell_grid": int(math.ceil(4 * math.sqrt(N)))}


def _egorov(cfg, cmap, N):
    f = _symbol(cfg, N)
    if not isinstance(f, observables.TrigSymbol):
        raise RunError("egorov needs a trigonometric symbol (symbol.kind = cos or constant)")
    U = quantize(cmap, N)
    rows, vals = [], []
    for T in range(0, cfg.t_max + 1):
        rec = observables.egorov_remainder(cmap, N, f, T, U=U)
        rows.append((N, T, rec.symbol, rec.value, rec.hs_sq))
        vals.append(rec.value)
    return rows, {"values": vals, "zero_at_T0": vals[0] <= 1e-12}, {}


def _kernel(cfg, cmap, N):
    space = theta.make_space(N)
    G = int(math.ceil(theta.grid_size(N) * cfg.grid_oversample))
    diag = theta.bergman_diag_grid(space, G)
    diag_err = float(np.abs(diag / N - 1).max())
    gfit = asymptotics.gaussian_neardiag_check(N, seed=cfg.seed)
    U, V = asymptotics.scaling_grid()
    dev = asymptotics.scaling_limit_compare(N, U, V, kappa=2 * gfit.constants["c"])
    rows = [
        (N, "diag_sup_error", diag_err),
        (N, "gaussian_c", gfit.constants["c"]),
        (N, "gaussian_residual", gfit.residual),
        (N, "scaling_sup_deviation", dev),
    ]
    if 2 * N ** (-1 / 3) <= 0.4:
        afit = asymptotics.agmon_fit([N], seed=cfg.seed)
        rows += [(N, "agmon_A1", afit.constants["A1"]), (N, "agmon_A2", afit.constants["A2"]), (N, "agmon_residual", afit.residual)]
    return rows, {q: v for _, q, v in rows}, {"diag_grid": G}


def _cover(cfg, cmap, N):
    scale = log_scale(cfg.gamma_prime, N, cfg.scale_prefactor)
    cover = build_log_good_cover(scale)
    rows = [(N, scale.epsilon, b, c.x, c.y) for b, c in enumerate(cover.centers)]
    summ = {"count": cover.count, "c1": cover.c1, "c2": cover.c2, "spacing": cover.spacing}
    summ.update(verify_cover(cover))
    return rows, summ, {}


def _correlations(cfg, cmap):
    f = observables.TrigSymbol.cos(cfg.symbol_k1, cfg.symbol_k2).as_dict() if cfg.symbol_kind == "cos" else {(0, 0): 1.0}
    G = int(math.ceil(257 * cfg.grid_oversample)) | 1
    rows = []
    for T in range(-cfg.t_max, cfg.t_max + 1):
        ex = correlation_exact(f, f, cmap, T)
        try:
            qd = correlation_quadrature(f, f, cmap, T, G=G)
        except MapError:
            qd = complex(math.nan, math.nan)
        rows.append((T, ex.real, ex.imag, qd.real, qd.imag))
    ok = all(math.isnan(r[3]) or abs(complex(r[1], r[2]) - complex(r[3], r[4])) < 1e-10 for r in rows)
    return rows, {"quadrature_agrees": ok}, {"quadrature_grid": G}


UNITS = {
    "spectrum": _spectrum,
    "variance": _variance,
    "mass": _mass,
    "zeros": _zeros,
    "egorov": _egorov,
    "kernel": _kernel,
    "cover": _cover,
}


def _run_unit(fn, key, *args) -> UnitResult:
    t0 = time.perf_counter()
    try:
        rows, summ, man = fn(*args)
        return UnitResult(key=key, rows=rows, summary=summ, manifest=man, seconds=time.perf_counter() - t0)
    except Exception as exc:  # recorded per unit; the run decides whether to fail
        msg = f"{type(exc).__name__}: {exc}"
        return UnitResult(key=key, error=msg, manifest={"traceback": traceback.format_exc()}, seconds=time.perf_counter() - t0)


def run(cfg: ExperimentConfig, out_dir=None, keep_going: bool = False) -> dict:
    """Validate, execute the configured experiment, and write CSV, summary.json and manifest.json."""
    cmap = validate(cfg)
    threads = thread_count()
    out = Path(out_dir or cfg.out_dir)
    kind = cfg.experiment
    if kind == "correlations":
        units = [_run_unit(_correlations, "all", cfg, cmap)]
    else:
        fn = UNITS[kind]
        grid = sorted(set(cfg.n_grid))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            units = list(pool.map(lambda N: _run_unit(fn, N, cfg, cmap, N), grid))
    errors = {str(u.key): u.error for u in units if u.error}
    out.mkdir(parents=True, exist_ok=True)
    rows = [r for u in units for r in u.rows]
    io.emit_csv(out / f"{kind}.csv", kind, rows)
    summary = {
        "experiment": kind,
        "config_hash": config_hash(cfg),
        "map": cfg.A,
        "units": {str(u.key): u.summary for u in units if not u.error},
        "errors": errors,
        "rows": len(rows),
    }
    io.emit_summary(out / "summary.json", summary)
    manifest = {
        "config_hash": config_hash(cfg),
        "config": dump_config(cfg),
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "threads": threads,
        "reduction_order": REDUCTION_ORDER,
        "seeds": {"seed": cfg.seed, "degenerate_basis": "Haar per cluster, default_rng(seed)", "sampling": "default_rng([seed, N])"},
        "timings_s": {str(u.key): round(u.seconds, 3) for u in units},
        "units": {str(u.key): u.manifest for u in units},
        "errors": errors,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        fh.write(io.dumps(manifest))
    if errors and not keep_going:
        raise RunError(f"{len(errors)} unit(s) failed: " + "; ".join(f"{k}: {v}" for k, v in errors.items()))
    return summary
