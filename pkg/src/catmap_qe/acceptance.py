"""Acceptance suite: one function per criterion, each returning a CriterionResult.

Each criterion recomputes everything it needs from scratch (no cross-criterion caches),
so running the suite twice and comparing result digests is the determinism check.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics, observables, theta, zeros
from .dynamics import apply, validate_cat_map
from .harness.io import dumps
from .quantization import apply_generator, heisenberg_translation, quantize
from .spectral import eigensections
from .torus import TorusPoint, build_log_good_cover, log_scale

MAP = ((1, 2), (2, 5))
PREFACTOR = 0.125  # scale epsilon = PREFACTOR * |log N|^(-gamma); see README
SEED = 20240607
# variances below this are round-off: eigensection elements carry ~1e-14 absolute error
VARIANCE_FLOOR = 1e-20
# sup deviations below this are at double-precision round-off
KERNEL_FLOOR = 1e-12
TEST_POINT = TorusPoint(0.3, 0.4)


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    details: dict
    seconds: float = 0.0
    limit_s: float = 0.0
    notes: str = ""

    @property
    def within_time(self) -> bool:
        return self.seconds <= self.limit_s

    @property
    def ok(self) -> bool:
        return self.passed and self.within_time

    def digest(self) -> str:
        return hashlib.sha256(dumps(self.details).encode()).hexdigest()

    def line(self) -> str:
        tag = "PASS" if self.ok else "FAIL"
        timing = f"{self.seconds:.1f}s/{self.limit_s:.0f}s"
        return f"[{tag}] criterion {self.id}: {self.name} ({timing}) {self.notes}".rstrip()


def _cmap():
    return validate_cat_map(MAP)


def _slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# ----------------------------------------------------------------------------- criteria


def criterion_1(grid=(64, 256, 1024)) -> dict:
    cmap = _cmap()
    out = {}
    for N in grid:
        U = quantize(cmap, N)
        es, cl = eigensections(U, seed=SEED)
        out[N] = {
            "unitarity": U.unitarity_defect(),
            "residual": float(es.residuals.max()),
            "orthonormality": es.orthonormality_defect(),
            "max_cluster": max(cl.sizes),
        }
    passed = all(v["unitarity"] < 1e-10 and v["residual"] < 1e-9 and v["orthonormality"] < 1e-10 for v in out.values())
    worst = max(max(v["unitarity"], v["orthonormality"]) for v in out.values())
    return {"passed": passed, "details": out, "notes": f"worst defect {worst:.2e}"}


def criterion_2(N: int = 128, radius: int = 4) -> dict:
    cmap = _cmap()
    ks = [(a, b) for a in range(-radius, radius + 1) for b in range(-radius, radius + 1) if a * a + b * b <= radius * radius]
    mats = {"map": (cmap.A, quantize(cmap, N).entries)}
    for name, e in cmap.word:
        M = apply_generator(name, e, np.eye(N, dtype=complex))
        from .quantization import _gen_matrix

        mats[f"{name}^{e}"] = (_gen_matrix(name, e), M)
    dev = {}
    for label, (A, U) in mats.items():
        worst = 0.0
        for k in ks:
            lhs = U.conj().T @ heisenberg_translation(N, k).entries @ U
            rhs = heisenberg_translation(N, apply(A, k)).entries
            i = np.unravel_index(np.argmax(np.abs(rhs)), rhs.shape)
            phase = lhs[i] / rhs[i]
            worst = max(worst, float(np.abs(lhs - phase * rhs).max()))
        dev[label] = worst
    m = max(dev.values())
    return {"passed": m < 1e-8, "details": {"N": N, "vectors": len(ks), "max_deviation": dev}, "notes": f"max deviation {m:.2e}"}


def criterion_3(grid=(64, 128, 256, 512, 1024, 2048), N_T: int = 256, T_range=range(1, 7)) -> dict:
    cmap = _cmap()
    f = observables.TrigSymbol.cos(1, 0)
    recs = [observables.egorov_remainder(cmap, N, f, 1) for N in grid]
    vals = [r.value for r in recs]
    slope = _slope(grid, vals)
    raw_slope = _slope(grid, [r.hs_sq for r in recs])
    U = quantize(cmap, N_T)
    series = [observables.egorov_remainder(cmap, N_T, f, T, U=U).value for T in T_range]
    mono = all(b >= a * (1 - 1e-12) for a, b in zip(series, series[1:]))
    passed = abs(slope + 1) <= 0.2 and mono
    return {
        "passed": passed,
        "details": {"N": list(grid), "values": vals, "slope": slope, "hs_slope": raw_slope, "T_series": series, "nondecreasing": mono},
        "notes": f"slope {slope:.3f} (target -1+-0.2; unnormalized HS^2 slope {raw_slope:.3f}), nondecreasing in T: {mono}",
    }


def criterion_4() -> dict:
    cmap = _cmap()
    f = observables.TrigSymbol.cos(1, 0)
    err = {}
    for N in (512, 1024):
        lhs, rhs = observables.szego_trace_check(f, cmap, N, 0)
        err[N] = abs(lhs - rhs)
    ratio = err[1024] / err[512]
    return {"passed": ratio < 0.6, "details": {"errors": err, "ratio": ratio}, "notes": f"ratio {ratio:.3f}"}


def criterion_5(grid=(64, 128, 256, 512, 1024, 2048), pilot=(64, 128, 256), gamma: float = 0.1) -> dict:
    cmap = _cmap()
    f = observables.TrigSymbol.cos(1, 0)
    f2 = observables.TrigSymbol.cos(2, 0)
    scaled, scaled2, dil = {}, {}, {}
    for N in grid:
        es, _ = eigensections(quantize(cmap, N), seed=SEED)
        scaled[N] = observables.quantum_variance(f, cmap, N, es).variance * math.log(N)
        scaled2[N] = observables.quantum_variance(f2, cmap, N, es).variance * math.log(N)
        if N in (128, 2048):
            rec = observables.variance_dilated_symbol(TEST_POINT, gamma, cmap, N, es, prefactor=PREFACTOR)
            filt, gs = observables.filtered_variance(rec)
            dil[N] = {"variance": rec.variance, "filtered": filt, "generic_density": gs.generic_density,
                      "epsilon": rec.epsilon, "comparison": rec.comparison}
        del es
    C_hat = 2 * max(scaled[N] for N in pilot)
    bound = max(C_hat, VARIANCE_FLOOR)
    envelope = all(v <= bound for v in scaled.values())
    decay = dil[2048]["filtered"] < dil[128]["filtered"]
    C2 = 2 * max(scaled2[N] for N in pilot)
    return {
        "passed": envelope and decay,
        "details": {"variance_log_n": scaled, "C_hat": C_hat, "floor": VARIANCE_FLOOR, "dilated": dil,
                    "cos4pix_variance_log_n": scaled2, "cos4pix_C_hat": C2,
                    "cos4pix_envelope": all(v <= C2 for v in scaled2.values())},
        "notes": f"max V*logN {max(scaled.values()):.2e} vs bound {bound:.1e}; dilated filtered {dil[128]['filtered']:.3e} -> {dil[2048]['filtered']:.3e}",
    }


def criterion_6(diag_grid=(32, 64, 256, 1024), agmon_grid=(64, 256, 1024)) -> dict:
    diag = {}
    for N in diag_grid:
        G = theta.grid_size(N)
        d = theta.bergman_diag_grid(theta.make_space(N), G)
        diag[N] = float(np.abs(d / N - 1).max())
    fit = asymptotics.agmon_fit(agmon_grid, seed=SEED)
    kappa = asymptotics.calibrate_metric_constant(1024, seed=SEED)
    U, V = asymptotics.scaling_grid()
    dev = {N: asymptotics.scaling_limit_compare(N, U, V, TEST_POINT, kappa) for N in (64, 1024)}
    halves = dev[1024] <= max(0.5 * dev[64], KERNEL_FLOOR)
    ok_diag = all(v < 0.01 for v in diag.values())
    ok_fit = fit.constants["A2"] > 0 and fit.residual < 0.1
    return {
        "passed": ok_diag and ok_fit and halves,
        "details": {"diag_sup_error": diag, "agmon": {"A1": fit.constants["A1"], "A2": fit.constants["A2"], "residual": fit.residual,
                                                      "n_range": list(fit.n_range), "empty_range_N": fit.extra["empty_range_N"], "samples": fit.n_samples,
                                                      "max_relative_residual": fit.extra["max_relative_residual"]},
                    "kappa": kappa, "scaling_deviation": dev},
        "notes": f"diag {max(diag.values()):.1e}, A2 {fit.constants['A2']:.2f} res {fit.residual:.3f}, scaling {dev[64]:.1e} -> {dev[1024]:.1e}",
    }


def criterion_7(grid=(16, 64, 256), count: int = 20) -> dict:
    cmap = _cmap()
    out = {}
    for N in grid:
        space = theta.make_space(N)
        rng = np.random.default_rng([SEED, N])
        totals = [zeros.locate_zeros(zeros.random_section(space, rng)).total_count for _ in range(count)]
        es, _ = eigensections(quantize(cmap, N), seed=SEED)
        idx = np.sort(rng.choice(N, size=min(count, N), replace=False))
        totals += [zeros.locate_zeros(theta.SectionCoeffs(space, es.vectors[:, j]), int(j)).total_count for j in idx]
        out[N] = totals
    passed = all(all(t == N for t in ts) for N, ts in out.items())
    return {"passed": passed, "details": {"totals": out}, "notes": f"{sum(len(v) for v in out.values())} sections, all counts exact: {passed}"}


def _eta(u, v):
    r2 = u * u + v * v
    return np.where(r2 < 1, (1 - r2) ** 2, 0.0)


def zero_discrepancy_statistic(N: int, gamma: float = 0.1, sample: int = 64) -> dict:
    cmap = _cmap()
    es, _ = eigensections(quantize(cmap, N), seed=SEED)
    space = theta.make_space(N)
    scale = log_scale(gamma, N, PREFACTOR)
    centers = build_log_good_cover(scale).center_array()
    idx = np.arange(N) if N <= 512 else np.sort(np.random.default_rng([SEED, N]).choice(N, size=sample, replace=False))
    disc = []
    for j in idx:
        zs = zeros.locate_zeros(theta.SectionCoeffs(space, es.vectors[:, j]), int(j))
        disc.append(zeros.ball_discrepancies(zs, centers, scale.epsilon))
    disc = np.array(disc)
    X = (disc**2).mean(axis=1)
    gs = observables.density_one_extract(X, observables.markov_threshold(X, N))
    return {"median": float(np.median(disc[gs.generic])), "sections": int(idx.size), "generic": int(gs.generic.size),
            "epsilon": scale.epsilon, "threshold": gs.threshold}


def criterion_8(gamma: float = 0.1, draws: int = 200, N_pair: int = 256) -> dict:
    lo = zero_discrepancy_statistic(128, gamma)
    hi = zero_discrepancy_statistic(1024, gamma)
    decreases = hi["median"] < lo["median"]
    space = theta.make_space(N_pair)
    rng = np.random.default_rng([SEED, N_pair, 1])
    p = TorusPoint(0.5, 0.5)
    vals, bound_ok = [], True
    for _ in range(draws):
        zs = zeros.locate_zeros(zeros.random_section(space, rng))
        st = zeros.scaled_zero_pairing(zs, p, gamma, _eta, PREFACTOR)
        bound_ok &= abs(st.value) <= st.bound + 1e-12
        vals.append(st.value)
    vals = np.array(vals)
    mean, se = float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(draws))
    ref = zeros.disk_reference(_eta)
    z = abs(mean - ref) / se
    return {
        "passed": decreases and z <= 3 and bound_ok,
        "details": {"N128": lo, "N1024": hi, "pairing_mean": mean, "pairing_se": se, "reference": ref, "z": z, "bound_ok": bound_ok},
        "notes": f"median discrepancy {lo['median']:.4f} -> {hi['median']:.4f}; pairing {mean:.4f} vs {ref:.4f} ({z:.2f} SE)",
    }


def mass_band(N_pilot: int = 64, gamma_prime: float = 0.15):
    cmap = _cmap()
    es, _ = eigensections(quantize(cmap, N_pilot), seed=SEED)
    sw = observables.mass_sweep(cmap, N_pilot, es, gamma_prime, PREFACTOR)
    return float(np.quantile(sw.ratios.min(axis=1), 0.05)), float(np.quantile(sw.ratios.max(axis=1), 0.95))


def criterion_9(grid=(128, 256, 512, 1024), gamma_prime: float = 0.15, sample: int = 64) -> dict:
    cmap = _cmap()
    c1, c2 = mass_band(64, gamma_prime)
    frac = {}
    for N in grid:
        es, _ = eigensections(quantize(cmap, N), seed=SEED)
        sw = observables.mass_sweep(cmap, N, es, gamma_prime, PREFACTOR, sample=sample if N > 512 else None, seed=SEED)
        R = sw.ratios
        frac[N] = float(((R.min(axis=1) >= c1) & (R.max(axis=1) <= c2)).mean())
        del es
    seq = [frac[N] for N in grid]
    mono = all(b >= a for a, b in zip(seq, seq[1:]))
    return {
        "passed": frac[grid[-1]] >= 0.9 and mono,
        "details": {"band": [c1, c2], "fractions": frac},
        "notes": f"band [{c1:.3f}, {c2:.3f}], fractions " + ", ".join(f"{N}:{frac[N]:.3f}" for N in grid),
    }


CRITERIA = {
    1: ("unitarity & spectral hygiene", criterion_1, 120),
    2: ("exact-Egorov oracle", criterion_2, 60),
    3: ("Egorov remainder scaling", criterion_3, 1200),
    4: ("Szego limit", criterion_4, 300),
    5: ("variance decay", criterion_5, 1800),
    6: ("Bergman kernel", criterion_6, 600),
    7: ("zero counting exactness", criterion_7, 600),
    8: ("zero equidistribution trend", criterion_8, 2400),
    9: ("mass comparison", criterion_9, 1800),
}


def run_criterion(cid: int) -> CriterionResult:
    name, fn, limit = CRITERIA[cid]
    t0 = time.perf_counter()
    out = fn()
    dt = time.perf_counter() - t0
    return CriterionResult(id=cid, name=name, passed=bool(out["passed"]), details=out["details"], seconds=dt, limit_s=limit, notes=out.get("notes", ""))


def run_suite(ids=None, determinism: bool = True, echo=print) -> list:
    """Run the selected criteria; with ``determinism`` run them twice and add criterion 10."""
    ids = sorted(ids or CRITERIA)
    results = []
    for cid in ids:
        r = run_criterion(cid)
        results.append(r)
        if echo:
            echo(r.line())
    if determinism:
        t0 = time.perf_counter()
        again = {cid: run_criterion(cid) for cid in ids}
        same = {cid: again[cid].digest() == r.digest() for cid, r in zip(ids, results)}
        dt = time.perf_counter() - t0
        r10 = CriterionResult(
            id=10, name="determinism", passed=all(same.values()),
            details={"identical": same}, seconds=dt, limit_s=sum(CRITERIA[c][2] for c in ids),
            notes="reruns byte-identical: " + ", ".join(f"{c}:{'yes' if v else 'NO'}" for c, v in same.items()),
        )
        results.append(r10)
        if echo:
            echo(r10.line())
    return results
