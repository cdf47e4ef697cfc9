"""Command-line entry point: ``uplink-sg <command> [flags]``.

Parameters resolve as built-in system profile < ``--config`` JSON < flags.
Every command writes a CSV (stdout unless ``--out``); with ``--out`` a
manifest JSON lands next to it as ``<out>.manifest.json``.

Exit codes: 0 ok, 2 bad configuration, 3 numerical failure, 4 validation failure.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np

from . import analytic as an
from . import montecarlo as mc
from . import __version__, validation
from .numerics import QuadratureError, evaluation_ledger, integrate
from .params import (
    SYSTEM_PROFILE,
    ConfigError,
    NetworkParams,
    QuadratureSpec,
    alpha_from_pathloss_slope,
    db_to_linear,
    dbm_to_watts,
    noise_power_from_density,
    watts_to_dbm,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4

PROFILE: dict[str, Any] = {
    "lambda": SYSTEM_PROFILE["density"],
    "alpha": alpha_from_pathloss_slope(SYSTEM_PROFILE["pathloss_slope_db"]),
    "eps": 0.8,
    "mu_inv_dbm": SYSTEM_PROFILE["uplink_max_tx_dbm"],
    "sigma2_dbm": watts_to_dbm(noise_power_from_density(SYSTEM_PROFILE["noise_psd_dbm_per_hz"], SYSTEM_PROFILE["bandwidth_hz"])),
    "no_noise": False,
    "intercept_db": 0.0,
    "model": "rayleigh",
    "seed": 0,
}

# figure-specific defaults layered over the profile
COMMAND_PROFILE: dict[str, dict[str, Any]] = {
    "txpower": {"mu_inv_dbm": 10.0},
    "rzstats": {"lambda": 0.25},
}

QUICK_SPEC = QuadratureSpec(rel_tol=1e-5, abs_tol=1e-8)


class ValidationFailed(RuntimeError):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return __version__


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int
    mode: str
    version: str = field(default_factory=_version)
    wall_clock_s: float = 0.0
    evaluations: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        body = {
            "command": self.command,
            "parameters": self.parameters,
            "seed": self.seed,
            "mode": self.mode,
            "tool_version": self.version,
            "python": platform.python_version(),
            "wall_clock_s": round(self.wall_clock_s, 3),
            "integrand_evaluations": dict(sorted(self.evaluations.items())),
        }
        body.update(self.extra)
        return json.dumps(body, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# configuration


def _norm_key(k: str) -> str:
    return k.strip().lstrip("-").replace("-", "_")


def resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = dict(PROFILE)
    cfg.update(COMMAND_PROFILE.get(args.command, {}))
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a flat JSON object")
        for k, v in raw.items():
            key = _norm_key(k)
            if key not in PROFILE and key not in ("trials",):
                raise ConfigError(f"unknown config key {k!r}")
            cfg[key] = v
    for key in ("lambda", "alpha", "eps", "mu_inv_dbm", "sigma2_dbm", "intercept_db", "model", "seed", "trials"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if getattr(args, "no_noise", False):
        cfg["no_noise"] = True
    if getattr(args, "sigma2_dbm", None) is not None:
        cfg["no_noise"] = False
    if cfg["model"] not in ("rayleigh", "uniform-disk"):
        raise ConfigError(f"model must be rayleigh or uniform-disk, got {cfg['model']!r}")
    try:
        cfg["seed"] = int(cfg["seed"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed must be an integer, got {cfg['seed']!r}") from exc
    return cfg


def effective_noise(cfg: dict) -> float:
    """sigma^2 in watts, scaled by the optional pathloss intercept."""
    if cfg["no_noise"]:
        return 0.0
    return dbm_to_watts(float(cfg["sigma2_dbm"])) * db_to_linear(float(cfg["intercept_db"]))


def params_from(cfg: dict) -> NetworkParams:
    return NetworkParams(
        density=float(cfg["lambda"]),
        pathloss_exponent=float(cfg["alpha"]),
        pc_factor=float(cfg["eps"]),
        baseline_power=dbm_to_watts(float(cfg["mu_inv_dbm"])),
        noise_power=effective_noise(cfg),
    )


def describe(cfg: dict, params: NetworkParams | None) -> dict:
    out = {"user_units": {k: cfg[k] for k in sorted(cfg)}}
    if params is not None:
        out["linear"] = {
            "density": params.density,
            "pathloss_exponent": params.pathloss_exponent,
            "pc_factor": params.pc_factor,
            "baseline_power_w": params.baseline_power,
            "noise_power_w": params.noise_power,
        }
    return out


# ---------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(round(x, 12)) if abs(x) < 1e15 else repr(x)


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


def emit(args, text: str, manifest: RunManifest | None) -> None:
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        if manifest is not None:
            manifest.extra.setdefault("data_file", out.name)
            Path(str(out) + ".manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # downstream closed early (e.g. piped into head)
            sys.stdout = None


def _thresholds_db(args, default) -> list[float]:
    if args.threshold_db:
        return [float(t) for t in args.threshold_db]
    return list(default)


# ---------------------------------------------------------------------------
# commands


def _closed_form_coverage(T: float, params: NetworkParams, spec) -> float:
    """Coverage for alpha=4, eps=1, uniform-disk via the closed-form Laplace transform."""
    lam = params.density
    noise = math.exp(-params.mu * T * params.noise_power)
    if T == 0:
        return 1.0
    r_max = math.sqrt(-math.log(spec.tail_cutoff_mass) / (math.pi * lam))

    def f(r):
        return 2 * math.pi * lam * r * math.exp(-math.pi * lam * r * r) * an.laplace_closed_form_a4(T, r, lam)

    return noise * integrate(f, 0.0, r_max, spec)


def cmd_coverage(args, cfg) -> tuple[str, RunManifest]:
    params = params_from(cfg)
    model = an.ServingDistanceModel.for_params(cfg["model"], params)
    spec = QUICK_SPEC if args.quick else an.DEFAULT_QUADRATURE
    if args.t_linear is not None:
        ts = [float(t) for t in args.t_linear]
        ts_db = [10 * math.log10(t) if t > 0 else float("-inf") for t in ts]
    else:
        ts_db = _thresholds_db(args, np.linspace(-15.0, 15.0, 31))
        ts = [10 ** (t / 10) for t in ts_db]
    closed = cfg["model"] == "uniform-disk" and params.pathloss_exponent == 4.0 and params.pc_factor == 1.0
    header = ["threshold_db", "threshold_linear", "p_c_analytic"]
    cols = [ts_db, ts, [an.coverage_probability(params, t, model, spec) for t in ts]]
    if closed:
        header.append("p_c_closed_form")
        cols.append([_closed_form_coverage(t, params, spec) for t in ts])
    extra = {}
    if args.simulate:
        mode = args.sim_mode or ("hex-grid" if cfg["model"] == "uniform-disk" else "true-ppp")
        trials = int(cfg.get("trials") or (2_000 if args.quick else 20_000))
        sc = mc.SimConfig.default(params.density, n_trials=trials, seed=cfg["seed"], mode=mode)
        stats = mc.SimStats()
        emp = (mc.simulate_hex_grid(params, sc, ts, stats) if mode == "hex-grid"
               else mc.simulate_coverage(params, sc, ts, stats))
        header += ["p_c_mc", "mc_stderr"]
        cols += [emp.survival, emp.stderr]
        extra = {"simulation": {"mode": mode, "n_samples": emp.n, **stats.as_dict(),
                                "window_radius": sc.window_radius, "guard_radius": sc.guard_radius}}
        if args.dump_samples:
            with np.errstate(divide="ignore"):
                db = 10 * np.log10(emp.samples)
            Path(args.dump_samples).write_text("".join(f"{v!r}\n" for v in db.tolist()), encoding="utf-8")
            extra["samples_file"] = str(args.dump_samples)
    rows = [list(r) for r in zip(*cols)]
    man = RunManifest("coverage", describe(cfg, params), cfg["seed"], cfg["model"], extra=extra)
    return to_csv(header, rows), man


def _eps_grid(step: float) -> list[float]:
    if not 0 < step <= 1:
        raise ConfigError(f"eps step must lie in (0, 1], got {step}")
    return [float(e) for e in an.default_eps_grid(step)]


def cmd_rate(args, cfg) -> tuple[str, RunManifest]:
    base = params_from(cfg)
    model_kind = cfg["model"]
    spec = QUICK_SPEC if args.quick else an.DEFAULT_QUADRATURE
    alphas = args.alphas or [2.5, 3.25, 4.0]
    step = args.eps_step if args.eps_step is not None else (0.5 if args.quick else 0.25)
    sigma2 = base.noise_power if base.noise_power > 0 else dbm_to_watts(PROFILE["sigma2_dbm"])
    rows = []
    for alpha in alphas:
        for eps in _eps_grid(step):
            p0 = base.replace(pathloss_exponent=float(alpha), pc_factor=eps, noise_power=0.0)
            model = an.ServingDistanceModel.for_params(model_kind, p0)
            r0 = an.average_rate(p0, model, spec)
            r1 = an.average_rate(p0.replace(noise_power=sigma2), model, spec)
            rows.append([alpha, eps, r0, r1, r0 / math.log(2), r1 / math.log(2), abs(r0 - r1) / r0])
    header = ["alpha", "eps", "rate_no_noise_nats_per_hz", "rate_noise_nats_per_hz",
              "rate_no_noise_bits_per_hz", "rate_noise_bits_per_hz", "relative_change"]
    man = RunManifest("rate", describe(cfg, base), cfg["seed"], model_kind,
                      extra={"noise_power_w": sigma2})
    return to_csv(header, rows), man


def cmd_opt_eps(args, cfg) -> tuple[str, RunManifest]:
    base = params_from(cfg)
    model = an.ServingDistanceModel.for_params(cfg["model"], base)
    spec = QUICK_SPEC if args.quick else an.DEFAULT_QUADRATURE
    alphas = args.alphas or [2.5, 3.2, 3.7]
    step = args.eps_step if args.eps_step is not None else (0.05 if args.quick else 0.01)
    grid = _eps_grid(step)
    ts_db = _thresholds_db(args, np.arange(-20.0, 25.0 + 1e-9, 5.0 if args.quick else 2.5))
    rows = []
    for alpha in alphas:
        p = base.replace(pathloss_exponent=float(alpha))
        for t in ts_db:
            prof = an.optimal_epsilon(10 ** (t / 10), p, model, grid, spec)
            rows.append([alpha, t, prof.best, max(prof.coverage)])
    man = RunManifest("opt-eps", describe(cfg, base), cfg["seed"], cfg["model"], extra={"eps_step": step})
    return to_csv(["alpha", "threshold_db", "eps_hat", "p_c_at_eps_hat"], rows), man


def cmd_dl_ul(args, cfg) -> tuple[str, RunManifest]:
    base = params_from(cfg)
    model = an.ServingDistanceModel.for_params(cfg["model"], base)
    spec = QUICK_SPEC if args.quick else an.DEFAULT_QUADRATURE
    ts_db = _thresholds_db(args, np.arange(-10.0, 20.0 + 1e-9, 2.0))
    ts = [10 ** (t / 10) for t in ts_db]
    p_dl = dbm_to_watts(args.dl_power_dbm)
    alpha, lam, noise = base.pathloss_exponent, base.density, base.noise_power
    header = ["threshold_db", "downlink_bs_ppp", "downlink_bs_ppp_no_noise"]
    cols = [ts_db,
            [an.downlink_coverage(t, lam, alpha, 1.0 / p_dl, noise, spec) for t in ts],
            [1.0 / (1.0 + an.downlink_rho(t, alpha, spec)) for t in ts]]
    for eps in SYSTEM_PROFILE["fpc_eps"]:
        p = base.replace(pc_factor=float(eps))
        header.append(f"uplink_eps_{eps:g}")
        cols.append([an.coverage_probability(p, t, model, spec) for t in ts])
    trials = int(cfg.get("trials") or (2_000 if args.quick else 20_000))
    sc = mc.SimConfig.default(lam, n_trials=trials, seed=cfg["seed"], mode="downlink-user-ppp")
    stats = mc.SimStats()
    emp = mc.simulate_downlink_userppp(base.replace(baseline_power=p_dl), sc, ts, stats)
    header += ["downlink_user_ppp_mc", "mc_stderr"]
    cols += [emp.survival, emp.stderr]
    man = RunManifest("dl-ul", describe(cfg, base), cfg["seed"], "downlink-user-ppp",
                      extra={"downlink_power_w": p_dl, "simulation": {"n_samples": emp.n, **stats.as_dict()}})
    return to_csv(header, [list(r) for r in zip(*cols)]), man


def cmd_txpower(args, cfg) -> tuple[str, RunManifest]:
    base = params_from(cfg)
    p_max = dbm_to_watts(args.p_max_dbm)
    trials = int(cfg.get("trials") or (100 if args.quick else 1_000))
    sc = mc.SimConfig.default(base.density, n_trials=trials, seed=cfg["seed"])
    grid = np.round(np.arange(-40.0, 25.0 + 1e-9, 0.5), 10)
    eps_list = args.eps_list or [0.0, 0.25, 0.5, 0.75, 1.0]
    header, cols = ["power_dbm"], [grid]
    for e in eps_list:
        c = mc.tx_power_ccdf(base.replace(pc_factor=float(e)), p_max, sc, grid)
        header.append(f"ccdf_eps_{float(e):g}")
        cols.append(c.survival)
    man = RunManifest("txpower", describe(cfg, base), cfg["seed"], "true-ppp",
                      extra={"p_max_w": p_max, "n_trials": trials})
    return to_csv(header, [list(r) for r in zip(*cols)]), man


def cmd_rzstats(args, cfg) -> tuple[str, RunManifest]:
    lam = float(cfg["lambda"])
    trials = int(cfg.get("trials") or (30 if args.quick else (1_500 if args.iid else 150)))
    sc = mc.SimConfig.default(lam, n_trials=trials, seed=cfg["seed"])
    st = mc.neighbor_rz_stats(lam, sc, iid=args.iid, min_pairs=1 if args.quick else 20_000)
    e = st.edges
    rows = []
    for i in range(len(e) - 1):
        for j in range(len(e) - 1):
            rows.append([e[i], e[i + 1], e[j], e[j + 1], st.histogram[i, j], st.product_mass[i, j]])
    man = RunManifest("rzstats", describe(cfg, None), cfg["seed"], "iid-rayleigh" if args.iid else "true-ppp",
                      extra={"rho": st.rho, "n_pairs": st.n_pairs})
    sys.stderr.write(f"rho = {st.rho:.4f} over {st.n_pairs} adjacent pairs\n")
    header = ["r1_lo", "r1_hi", "r2_lo", "r2_hi", "mass_joint", "mass_product"]
    return to_csv(header, rows), man


def cmd_validate(args, cfg) -> tuple[str, RunManifest]:
    keys = args.only or list(validation.CHECKS)
    unknown = [k for k in keys if k not in validation.CHECKS]
    if unknown:
        raise ConfigError(f"unknown checks {unknown}")
    lines, results, seconds = [], [], {}
    for k in keys:
        res = validation.run_check(k, seed=cfg["seed"], quick=args.quick)
        results.append(res)
        seconds[k] = round(res.seconds, 3)
        lines.append(res.line())
        sys.stderr.write(res.line() + "\n")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    man = RunManifest("validate", describe(cfg, None), cfg["seed"], "quick" if args.quick else "full",
                      extra={"check_seconds": seconds})
    report = "\n".join(lines) + "\n"
    if n_fail:
        emit(args, report, man)
        raise ValidationFailed(f"{n_fail} checks failed")
    return report, man


COMMANDS = {
    "coverage": cmd_coverage,
    "rate": cmd_rate,
    "opt-eps": cmd_opt_eps,
    "dl-ul": cmd_dl_ul,
    "txpower": cmd_txpower,
    "rzstats": cmd_rzstats,
    "validate": cmd_validate,
}


# ---------------------------------------------------------------------------
# parser


def _shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lambda", type=float, help="density per unit area (BS/km^2)")
    p.add_argument("--alpha", type=float, help="pathloss exponent")
    p.add_argument("--eps", type=float, help="fractional power control factor")
    p.add_argument("--mu-inv-dbm", type=float, help="baseline transmit power / mean fading (dBm)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sigma2-dbm", type=float, help="noise power (dBm)")
    g.add_argument("--no-noise", action="store_true", default=None, help="set noise power to zero")
    p.add_argument("--intercept-db", type=float,
                   help="pathloss intercept folded into the noise (dB); default 0")
    p.add_argument("--model", choices=["rayleigh", "uniform-disk"], help="R_z distribution")
    p.add_argument("--seed", type=int, help="simulation seed")
    p.add_argument("--trials", type=int, help="Monte Carlo trials")
    p.add_argument("--out", help="CSV destination (manifest written alongside)")
    p.add_argument("--config", help="JSON file of flat keys mirroring flag names")
    p.add_argument("--quick", action="store_true", help="reduced effort")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uplink-sg", description="Uplink coverage and rate with fractional power control.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coverage", help="coverage curve")
    _shared(p)
    p.add_argument("--threshold-db", type=float, nargs="+")
    p.add_argument("--t-linear", type=float, nargs="+", help="linear thresholds (overrides --threshold-db)")
    p.add_argument("--simulate", action="store_true")
    p.add_argument("--sim-mode", choices=["true-ppp", "iid-rayleigh", "hex-grid"])
    p.add_argument("--dump-samples", help="write simulated SINR samples (dB, one per line)")

    p = sub.add_parser("rate", help="average rate vs eps")
    _shared(p)
    p.add_argument("--alphas", type=float, nargs="+")
    p.add_argument("--eps-step", type=float)

    p = sub.add_parser("opt-eps", help="coverage-maximising eps per threshold")
    _shared(p)
    p.add_argument("--alphas", type=float, nargs="+")
    p.add_argument("--eps-step", type=float)
    p.add_argument("--threshold-db", type=float, nargs="+")

    p = sub.add_parser("dl-ul", help="downlink vs uplink coverage")
    _shared(p)
    p.add_argument("--threshold-db", type=float, nargs="+")
    p.add_argument("--dl-power-dbm", type=float, default=SYSTEM_PROFILE["downlink_tx_dbm"])

    p = sub.add_parser("txpower", help="transmit power CCDF")
    _shared(p)
    p.add_argument("--p-max-dbm", type=float, default=SYSTEM_PROFILE["uplink_max_tx_dbm"])
    p.add_argument("--eps-list", type=float, nargs="+")

    p = sub.add_parser("rzstats", help="joint R_z of neighbouring cells")
    _shared(p)
    p.add_argument("--iid", action="store_true", help="i.i.d. Rayleigh control")

    p = sub.add_parser("validate", help="run the acceptance checks")
    _shared(p)
    p.add_argument("--only", nargs="+", help="subset of checks, e.g. C4 C7")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = resolve_config(args)
        with evaluation_ledger() as counts:
            text, man = COMMANDS[args.command](args, cfg)
        man.wall_clock_s = time.perf_counter() - t0
        man.evaluations = dict(counts)
        emit(args, text, man)
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except QuadratureError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except ValidationFailed as exc:
        sys.stderr.write(f"validation failed: {exc}\n")
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
