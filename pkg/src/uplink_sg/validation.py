"""Acceptance checks shared by ``uplink-sg validate`` and the test-suite.

Each check returns a :class:`CheckResult`. ``quick=True`` divides Monte Carlo
trial counts by ``QUICK_TRIAL_DIVISOR`` and widens Monte Carlo tolerances by
``QUICK_MC_TOL_FACTOR``; quadrature tolerances are never relaxed.
"""
from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import analytic as an
from . import montecarlo as mc
from .params import (
    DEFAULT_QUADRATURE,
    NetworkParams,
    dbm_to_watts,
    reference_params,
)

QUICK_TRIAL_DIVISOR = 10
QUICK_MC_TOL_FACTOR = 1.5


@dataclass(frozen=True)
class CheckResult:
    key: str
    title: str
    passed: bool
    value: float
    tolerance: float
    detail: str
    seconds: float = field(default=0.0, compare=False)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.key} {self.title}: {self.detail}"


def _trials(n: int, quick: bool) -> int:
    return max(1, n // QUICK_TRIAL_DIVISOR) if quick else n


def _mc_tol(tol: float, quick: bool) -> float:
    return tol * QUICK_MC_TOL_FACTOR if quick else tol


COVERAGE_THRESHOLDS_DB = np.arange(-10.0, 20.0 + 1e-9, 2.0)


def _regime_params(alpha: float, eps: float) -> NetworkParams:
    return NetworkParams(density=0.25, pathloss_exponent=alpha, pc_factor=eps, baseline_power=1.0)


def _analytic_curve(params, kind, thresholds_db) -> np.ndarray:
    model = an.ServingDistanceModel.for_params(kind, params)
    return np.array([an.coverage_probability(params, 10 ** (t / 10), model) for t in thresholds_db])


def check_true_ppp(alpha: float, eps: float, key: str, *, seed: int = 0, quick: bool = False) -> CheckResult:
    params = _regime_params(alpha, eps)
    cfg = mc.SimConfig.default(params.density, n_trials=_trials(200_000, quick), seed=seed, mode="true-ppp")
    t0 = time.perf_counter()
    emp = mc.simulate_coverage(params, cfg, 10 ** (COVERAGE_THRESHOLDS_DB / 10))
    sim_seconds = time.perf_counter() - t0
    curve = _analytic_curve(params, "rayleigh", COVERAGE_THRESHOLDS_DB)
    gap = float(np.max(np.abs(emp.survival - curve)))
    tol = _mc_tol(0.03, quick)
    at = COVERAGE_THRESHOLDS_DB[int(np.argmax(np.abs(emp.survival - curve)))]
    ok = gap <= tol and sim_seconds <= 600.0
    return CheckResult(
        key, f"true-PPP vs analytic Rayleigh (alpha={alpha:g}, eps={eps:g})", ok, gap, tol,
        f"max gap {gap:.4f} at {at:+.0f} dB (tol {tol:g}), n={emp.n}, "
        f"sim {'within' if sim_seconds <= 600 else 'over'} 600 s",
        sim_seconds,
    )


def check_hex_grid(*, seed: int = 0, quick: bool = False) -> CheckResult:
    gaps = []
    tol = _mc_tol(0.04, quick)
    for alpha, eps in ((4.0, 1.0), (3.25, 0.75)):
        params = _regime_params(alpha, eps)
        cfg = mc.SimConfig.default(params.density, n_trials=_trials(200_000, quick), seed=seed, mode="hex-grid")
        emp = mc.simulate_hex_grid(params, cfg, 10 ** (COVERAGE_THRESHOLDS_DB / 10))
        curve = _analytic_curve(params, "uniform-disk", COVERAGE_THRESHOLDS_DB)
        gaps.append(float(np.max(np.abs(emp.survival - curve))))
    worst = max(gaps)
    return CheckResult(
        "C3", "hex grid vs analytic uniform-disk", worst <= tol, worst, tol,
        f"max gap {gaps[0]:.4f} (alpha=4, eps=1), {gaps[1]:.4f} (alpha=3.25, eps=0.75); tol {tol:g}",
    )


def check_closed_form() -> CheckResult:
    lam = 0.25
    params = NetworkParams(lam, 4.0, 1.0, 1.0)
    model = an.ServingDistanceModel.uniform_disk(lam)
    worst = 0.0
    for t_db in (-5.0, 0.0, 5.0, 10.0):
        T = 10 ** (t_db / 10)
        for r in (0.2, 0.5, 1.0, 2.0):
            ref = an.laplace_closed_form_a4(T, r, lam)
            num = an.laplace_interference(T, r, params, model, method="nested")
            worst = max(worst, abs(num - ref) / ref)
    return CheckResult("C4", "alpha=4 closed form vs nested quadrature", worst <= 1e-6, worst, 1e-6,
                       f"max relative error {worst:.2e} over 4x4 (T, r) grid")


def check_full_inversion() -> CheckResult:
    worst = 0.0
    for kind in ("rayleigh", "uniform-disk"):
        params = NetworkParams(0.25, 4.0, 1.0, 1.0 / 7.0)
        model = an.ServingDistanceModel.for_params(kind, params)
        for t_db in (-10.0, -5.0, 0.0, 5.0, 10.0):
            T = 10 ** (t_db / 10)
            a = an.coverage_probability(params, T, model)
            b = an.coverage_full_pc_no_noise(params, T, model)
            worst = max(worst, abs(a - b))
    return CheckResult("C5", "full inversion: mu=7 coverage vs mu-free form", worst <= 1e-6, worst, 1e-6,
                       f"max |difference| {worst:.2e} at 5 thresholds, both models")


def check_rate_identity() -> CheckResult:
    worst, parts = 0.0, []
    for eps in (0.0, 0.5, 1.0):
        params = NetworkParams(0.24, 3.25, eps, dbm_to_watts(23.0))
        model = an.ServingDistanceModel.rayleigh(params.density)
        rate = an.average_rate(params, model)
        via_cov = an.rate_from_coverage(params, model)
        rel = abs(rate - via_cov) / rate
        worst = max(worst, rel)
        parts.append(f"eps={eps:g}: {rate:.6f} vs {via_cov:.6f}")
    return CheckResult("C6", "rate vs threshold integral of coverage", worst <= 1e-3, worst, 1e-3,
                       f"max relative residual {worst:.2e} ({'; '.join(parts)} nats/Hz)")


def check_downlink() -> CheckResult:
    rho = an.downlink_rho(1.0, 4.0, DEFAULT_QUADRATURE)
    p = an.downlink_coverage(1.0, 0.24, 4.0, 1.0, 0.0)
    target = 1.0 / (1.0 + math.pi / 4.0)
    err = abs(p - target)
    ok = err <= 1e-3 and abs(rho - math.pi / 4) <= 1e-9
    return CheckResult("C7", "downlink coverage at 0 dB, alpha=4, no noise", ok, err, 1e-3,
                       f"p_c={p:.6f} vs 1/(1+pi/4)={target:.6f}; rho(1,4)={rho:.10f} (pi/4={math.pi / 4:.10f})")


def check_independence(*, seed: int = 0, quick: bool = False) -> CheckResult:
    lam = 0.25
    # ~170 inner pairs per realization; control pairs are cheaper so use more
    true = mc.neighbor_rz_stats(lam, mc.SimConfig.default(lam, n_trials=_trials(150, quick), seed=seed),
                                min_pairs=_trials(20_000, quick))
    ctrl = mc.neighbor_rz_stats(lam, mc.SimConfig.default(lam, n_trials=_trials(1500, quick), seed=seed + 1),
                                iid=True, min_pairs=_trials(20_000, quick))
    tol_true = _mc_tol(0.03, quick)
    tol_ctrl = _mc_tol(0.01, quick)
    ok = abs(true.rho - 0.07) <= tol_true and abs(ctrl.rho) <= tol_ctrl
    return CheckResult("C8", "neighbour R_z correlation", ok, true.rho, tol_true,
                       f"rho={true.rho:.4f} over {true.n_pairs} pairs (target 0.07 +/- {tol_true:g}); "
                       f"i.i.d. control rho={ctrl.rho:+.4f} over {ctrl.n_pairs} pairs (|rho| <= {tol_ctrl:g})")


def check_eps_plateaus() -> CheckResult:
    params = reference_params(0.8).replace(pathloss_exponent=3.7)
    model = an.ServingDistanceModel.rayleigh(params.density)
    grid = np.round(np.arange(0.0, 1.0 + 1e-9, 0.05), 10)
    low = an.optimal_epsilon(10 ** (-10 / 10), params, model, grid).best
    high = an.optimal_epsilon(10 ** (20 / 10), params, model, grid).best
    ok = 0.20 <= low <= 0.35 and high == 0.0
    return CheckResult("C9", "optimal eps plateaus", ok, low, 0.0,
                       f"eps_hat(-10 dB)={low:.2f} (want [0.20, 0.35]); eps_hat(+20 dB)={high:.2f} (want 0)")


def check_tx_power(*, seed: int = 0, quick: bool = False) -> CheckResult:
    lam = 0.24
    cfg = mc.SimConfig.default(lam, n_trials=_trials(1000, quick), seed=seed)
    p_max = dbm_to_watts(23.0)
    base = NetworkParams(lam, 3.7, 0.0, dbm_to_watts(10.0))
    fracs = {}
    for eps in (0.75, 1.0):
        ccdf = mc.tx_power_ccdf(base.replace(pc_factor=eps), p_max, cfg, [0.0])
        fracs[eps] = float(1.0 - ccdf.survival[0])
    step = mc.tx_power_samples_dbm(base, p_max, cfg)
    is_step = bool(np.allclose(step, 10.0, atol=1e-9))
    ok = all(0.08 <= f <= 0.17 for f in fracs.values()) and is_step
    return CheckResult("C10", "transmit power below 0 dBm", ok, max(fracs.values()), 0.17,
                       f"fraction below 0 dBm: eps=0.75 {fracs[0.75]:.4f}, eps=1 {fracs[1.0]:.4f} "
                       f"(want [0.08, 0.17]); eps=0 step at 10 dBm: {is_step}")


PROPERTY_SETS = (
    NetworkParams(0.25, 4.0, 1.0, 1.0),
    NetworkParams(0.25, 3.25, 0.75, 1.0),
    NetworkParams(0.24, 2.5, 0.0, 0.2),
    NetworkParams(0.24, 3.7, 0.5, 0.2, 1e-13),
    NetworkParams(1.0, 3.0, 0.25, 2.0),
    NetworkParams(0.05, 4.5, 0.9, 0.5, 1e-12),
)


def _curve_csv(emp: mc.EmpiricalCcdf) -> bytes:
    buf = io.StringIO()
    buf.write("threshold_linear,survival,stderr\n")
    for t, s, e in zip(emp.thresholds, emp.survival, emp.stderr):
        buf.write(f"{t!r},{s!r},{e!r}\n")
    return buf.getvalue().encode()


def check_properties(*, seed: int = 0, quick: bool = False) -> CheckResult:
    problems = []
    thr = 10 ** (np.linspace(-15.0, 15.0, 31) / 10)
    for p in PROPERTY_SETS:
        for kind in ("rayleigh", "uniform-disk"):
            model = an.ServingDistanceModel.for_params(kind, p)
            pc = np.array([an.coverage_probability(p, t, model) for t in thr])
            if np.any(pc < 0) or np.any(pc > 1) or np.any(np.diff(pc) > 1e-12):
                problems.append(f"coverage shape {kind} {p}")
    p = PROPERTY_SETS[1]
    for kind in ("rayleigh", "uniform-disk"):
        model = an.ServingDistanceModel.for_params(kind, p)
        if an.laplace_interference(0.0, 1.0, p, model) != 1.0:
            problems.append("L(0) != 1")
        ls = [an.laplace_interference(s, 1.0, p, model) for s in (0.1, 0.5, 1.0, 2.0, 10.0)]
        if np.any(np.diff(ls) > 0):
            problems.append("L increasing in s")
    scale_gap = 0.0
    for q in PROPERTY_SETS[:3]:
        for kind in ("rayleigh", "uniform-disk"):
            a = an.coverage_probability(q, 1.0, an.ServingDistanceModel.for_params(kind, q))
            q4 = q.replace(density=4 * q.density)
            b = an.coverage_probability(q4, 1.0, an.ServingDistanceModel.for_params(kind, q4))
            scale_gap = max(scale_gap, abs(a - b))
    if scale_gap > 1e-6:
        problems.append(f"scale invariance gap {scale_gap:.2e}")
    lam = 0.25
    cfg = mc.SimConfig.default(lam, n_trials=_trials(100_000, quick), seed=seed, mode="iid-rayleigh")
    _, R = mc.simulate_uplink_samples(_regime_params(4.0, 1.0), cfg)
    ks = stats.kstest(R, lambda r: -np.expm1(-lam * np.pi * np.asarray(r) ** 2)).statistic
    if ks > _mc_tol(0.01, quick):
        problems.append(f"KS {ks:.4f}")
    small = mc.SimConfig.default(lam, n_trials=200, seed=seed, mode="true-ppp")
    csvs = [_curve_csv(mc.simulate_coverage(_regime_params(4.0, 1.0), small, thr)) for _ in range(2)]
    if csvs[0] != csvs[1]:
        problems.append("simulation not deterministic")
    detail = (f"coverage bounded/monotone (6 sets x 2 models x 31 T); L(0)=1, L non-increasing; "
              f"scale gap {scale_gap:.1e}; KS {ks:.4f} at n={len(R)}; CSV byte-identical: {csvs[0] == csvs[1]}")
    if problems:
        detail += "; problems: " + ", ".join(problems)
    return CheckResult("C11", "property suite", not problems, float(len(problems)), 0.0, detail)


def check_noise_tightness() -> CheckResult:
    worst, where = 0.0, ""
    sigma2 = reference_params(noise=True).noise_power
    for alpha in (2.5, 3.25, 4.0):
        for eps in (0.0, 0.5, 1.0):
            p0 = NetworkParams(0.24, alpha, eps, dbm_to_watts(23.0))
            model = an.ServingDistanceModel.rayleigh(p0.density)
            r0 = an.average_rate(p0, model)
            r1 = an.average_rate(p0.replace(noise_power=sigma2), model)
            rel = abs(r0 - r1) / r0
            if rel >= worst:
                worst, where = rel, f"alpha={alpha:g}, eps={eps:g}"
    return CheckResult("C12", "rate with and without -104 dBm noise", worst <= 0.05, worst, 0.05,
                       f"max relative rate change {worst:.2e} at {where} (tol 5%)")


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "C1": lambda seed=0, quick=False: check_true_ppp(4.0, 1.0, "C1", seed=seed, quick=quick),
    "C2": lambda seed=0, quick=False: check_true_ppp(3.25, 0.75, "C2", seed=seed, quick=quick),
    "C3": lambda seed=0, quick=False: check_hex_grid(seed=seed, quick=quick),
    "C4": lambda seed=0, quick=False: check_closed_form(),
    "C5": lambda seed=0, quick=False: check_full_inversion(),
    "C6": lambda seed=0, quick=False: check_rate_identity(),
    "C7": lambda seed=0, quick=False: check_downlink(),
    "C8": lambda seed=0, quick=False: check_independence(seed=seed, quick=quick),
    "C9": lambda seed=0, quick=False: check_eps_plateaus(),
    "C10": lambda seed=0, quick=False: check_tx_power(seed=seed, quick=quick),
    "C11": lambda seed=0, quick=False: check_properties(seed=seed, quick=quick),
    "C12": lambda seed=0, quick=False: check_noise_tightness(),
}


def run_check(key: str, *, seed: int = 0, quick: bool = False) -> CheckResult:
    t0 = time.perf_counter()
    res = CHECKS[key](seed=seed, quick=quick)
    elapsed = time.perf_counter() - t0
    return CheckResult(res.key, res.title, res.passed, res.value, res.tolerance, res.detail,
                       max(elapsed, res.seconds))
