"""Uplink coverage, Laplace transform of interference, rate and downlink.

Internally the fast paths work in normalised distance rho = r*sqrt(pi*lambda),
in which the mobile density drops out and only the noise term keeps a
lambda dependence. The x-integral of the Laplace exponent is done in closed
form through a regularised incomplete beta function (see ``tail_integral``),
leaving a single expectation over R_z. The literal nested form
(r -> x -> u) is available as ``method="nested"`` and serves as a check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy import special

from .numerics import (
    QuadratureError,
    integrate,
    integrate_batch,
    integrate_batch_semi_infinite,
    integrate_semi_infinite,
)
from .params import DEFAULT_QUADRATURE, NetworkParams, QuadratureSpec, SinrThreshold

ModelKind = Literal["rayleigh", "uniform-disk"]


@dataclass(frozen=True)
class ServingDistanceModel:
    """Distribution of an interferer's distance R_z to its own base station.

    ``rayleigh``: pdf 2*pi*lambda*r*exp(-lambda*pi*r^2) (irregular networks).
    ``uniform-disk``: pdf 2*pi*lambda*r on [0, 1/sqrt(pi*lambda)] (regular,
    hexagon replaced by the disk of equal area).
    """

    kind: ModelKind
    density: float

    def __post_init__(self) -> None:
        if self.kind not in ("rayleigh", "uniform-disk"):
            raise ValueError(f"unknown serving-distance model {self.kind!r}")
        if not self.density > 0:
            raise ValueError(f"density must be > 0, got {self.density}")

    @classmethod
    def rayleigh(cls, density: float) -> ServingDistanceModel:
        return cls("rayleigh", float(density))

    @classmethod
    def uniform_disk(cls, density: float) -> ServingDistanceModel:
        return cls("uniform-disk", float(density))

    @classmethod
    def for_params(cls, kind: ModelKind, params: NetworkParams) -> ServingDistanceModel:
        return cls(kind, params.density)

    @property
    def radius(self) -> float:
        """Support radius of the uniform-disk model."""
        return 1.0 / math.sqrt(math.pi * self.density)

    def pdf(self, r):
        r = np.asarray(r, dtype=float)
        lam = self.density
        if self.kind == "rayleigh":
            return np.where(r >= 0, 2 * np.pi * lam * r * np.exp(-lam * np.pi * r**2), 0.0)
        return np.where((r >= 0) & (r <= self.radius), 2 * np.pi * lam * r, 0.0)

    def ccdf(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "rayleigh":
            return np.exp(-self.density * np.pi * np.maximum(r, 0.0) ** 2)
        return np.clip(1.0 - np.pi * self.density * np.maximum(r, 0.0) ** 2, 0.0, 1.0)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "rayleigh":
            return np.sqrt(rng.standard_exponential(size) / (np.pi * self.density))
        return self.radius * np.sqrt(rng.random(size))


@dataclass(frozen=True)
class CoverageCurve:
    thresholds: tuple[SinrThreshold, ...]
    probabilities: tuple[float, ...]
    params: NetworkParams
    model: ServingDistanceModel
    spec: QuadratureSpec = field(default=DEFAULT_QUADRATURE)

    def __post_init__(self) -> None:
        if len(self.thresholds) != len(self.probabilities):
            raise ValueError("thresholds and probabilities differ in length")
        if list(self.thresholds) != sorted(self.thresholds):
            raise ValueError("thresholds must be increasing")

    @property
    def thresholds_db(self) -> np.ndarray:
        return np.array([t.db for t in self.thresholds])


# ---------------------------------------------------------------------------
# closed-form pieces


def tail_integral(a, alpha: float) -> np.ndarray:
    """F(a) = int_a^inf y / (1 + y^alpha) dy for a >= 0, alpha > 2.

    With w = y^alpha/(1+y^alpha) the integral becomes an incomplete beta
    function: F(a) = F(0) * I_{1/(1+a^alpha)}(1 - 2/alpha, 2/alpha) and
    F(0) = (pi/alpha) / sin(2*pi/alpha).
    """
    d = 2.0 / alpha
    a = np.asarray(a, dtype=float)
    with np.errstate(over="ignore"):
        x = 1.0 / (1.0 + a**alpha)
    return (np.pi / alpha) / np.sin(np.pi * d) * special.betainc(1.0 - d, d, x)


def downlink_rho(T: float, alpha: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """rho(T, alpha) = T^(2/alpha) int_{T^(-2/alpha)}^inf du / (1 + u^(alpha/2))."""
    T = float(T)
    if T == 0:
        return 0.0
    lower = T ** (-2.0 / alpha)
    tail = integrate_semi_infinite(lambda u: 1.0 / (1.0 + u ** (alpha / 2.0)), lower, spec)
    return T ** (2.0 / alpha) * tail


def laplace_closed_form_a4(T: float, r: float, density: float) -> float:
    """Laplace transform at s=T for alpha=4, eps=1, mu=1, uniform-disk R_z.

    Evaluates ``exp(pi*lam*r^2/2 - (pi*lam)^2 r^4 atan(c/r^2) / (2 sqrt T)
    - sqrt(T)/2 * atan(c/r^2))`` with ``c = sqrt(T)/(pi*lam)``. At r = 0 the
    interference region is the whole plane and the value is exp(-pi sqrt(T)/4).
    """
    T, r, lam = float(T), float(r), float(density)
    if T <= 0 or r < 0 or lam <= 0:
        raise ValueError("need T > 0, r >= 0, density > 0")
    pl = math.pi * lam
    sq = math.sqrt(T)
    at = math.atan2(sq / pl, r * r)
    return math.exp(pl * r * r / 2.0 - pl * pl * r**4 * at / (2.0 * sq) - sq / 2.0 * at)


# ---------------------------------------------------------------------------
# R_z expectation and Laplace transform


def _u_upper(model: ServingDistanceModel, spec: QuadratureSpec) -> float:
    """Upper limit of the u = R_z^2 integral (Rayleigh tail truncated)."""
    if model.kind == "rayleigh":
        return -math.log(spec.tail_cutoff_mass) / (math.pi * model.density)
    return model.radius


def _rz_complement(s: float, x: float, params: NetworkParams, model: ServingDistanceModel,
                   spec: QuadratureSpec) -> float:
    """E[1 - mu/(mu + s R_z^(alpha eps) x^-alpha)], integrated in the u variable."""
    alpha, eps, mu = params.pathloss_exponent, params.pc_factor, params.mu
    if s == 0:
        return 0.0
    k = s * x ** (-alpha) / mu
    if eps == 0:
        return k / (1.0 + k)
    lam = model.density
    if model.kind == "rayleigh":
        # u = R_z^2 ~ Exp(pi*lam); tail beyond the cutoff carries < tail_cutoff_mass
        def g(u):
            w = k * u ** (alpha * eps / 2.0)
            return w / (1.0 + w) * math.pi * lam * math.exp(-lam * math.pi * u)
    else:
        def g(u):
            w = k * u ** (alpha * eps)
            return w / (1.0 + w) * 2.0 * math.pi * lam * u
    g.__name__ = "rz_expectation"
    return integrate(g, 0.0, _u_upper(model, spec), spec)


def rz_expectation(s: float, x: float, params: NetworkParams, model: ServingDistanceModel,
                   spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """E_{R_z}[mu / (mu + s R_z^(alpha eps) x^-alpha)]."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    if not x > 0:
        raise ValueError(f"x must be > 0, got {x}")
    if params.pc_factor == 0:
        return params.mu / (params.mu + s * x ** (-params.pathloss_exponent))
    return 1.0 - _rz_complement(float(s), float(x), params, model, spec)


def _z_support(model: ServingDistanceModel, spec: QuadratureSpec) -> tuple[float, float]:
    """Support and scale of Z = R_z*sqrt(pi*lam_model) (pdf 2z e^-z^2 or 2z on [0,1])."""
    if model.kind == "rayleigh":
        return math.sqrt(-math.log(spec.tail_cutoff_mass)), 1.0
    return 1.0, 1.0


def _mean_tail(beta, rho, params: NetworkParams, model: ServingDistanceModel,
               spec: QuadratureSpec) -> np.ndarray:
    """E_Z[b^2 F(rho/b)] with b = beta * (qZ)^eps, normalised units.

    ``beta = (s/mu)^(1/alpha) * (pi*lam)^((1-eps)/2)``; the Laplace exponent
    is twice this. ``beta`` and ``rho`` broadcast against each other.
    """
    alpha, eps = params.pathloss_exponent, params.pc_factor
    beta = np.asarray(beta, dtype=float)
    rho = np.asarray(rho, dtype=float)

    def term(b):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val = b * b * tail_integral(rho[..., None] / b, alpha)
        # b -> 0 means no interference contribution; b -> inf means F(0) b^2
        return np.where(b > 0, val, 0.0)

    if eps == 0:
        return term(beta[..., None])[..., 0] * np.ones(np.broadcast_shapes(beta.shape, rho.shape))

    q = math.sqrt(params.density / model.density)
    zmax, _ = _z_support(model, spec)
    beta_b, rho_b = np.broadcast_arrays(beta, rho)
    rho = rho_b

    if model.kind == "rayleigh":
        def integrand(z):
            b = beta_b[..., None] * (q * z) ** eps
            return term(b) * (2.0 * z * np.exp(-z * z))
    else:
        def integrand(z):
            b = beta_b[..., None] * (q * z) ** eps
            return term(b) * (2.0 * z)
    integrand.__name__ = "rz_expectation"
    return integrate_batch(integrand, 0.0, zmax, spec.tighter(), min_panels=4)


def _beta(s, params: NetworkParams):
    alpha, eps = params.pathloss_exponent, params.pc_factor
    kappa = math.pi * params.density
    s = np.asarray(s, dtype=float)
    return (s / params.mu) ** (1.0 / alpha) * kappa ** ((1.0 - eps) / 2.0)


def laplace_interference(s: float, r: float, params: NetworkParams, model: ServingDistanceModel,
                         spec: QuadratureSpec = DEFAULT_QUADRATURE,
                         method: Literal["closed", "nested"] = "closed") -> float:
    """E[exp(-s I)] for interferers outside radius r under i.i.d. R_z.

    ``closed`` swaps the x and R_z integrals and uses ``tail_integral`` for
    x; ``nested`` integrates x then u numerically, each level one order
    tighter than its parent.
    """
    if s < 0 or r < 0:
        raise ValueError("need s >= 0 and r >= 0")
    if s == 0:
        return 1.0
    if method == "closed":
        rho = r * math.sqrt(math.pi * params.density)
        return float(np.exp(-2.0 * _mean_tail(_beta(s, params), rho, params, model, spec)))
    if method != "nested":
        raise ValueError(f"unknown method {method!r}")
    inner = spec.tighter()
    x_scale = params.mean_cell_radius

    def g(t):
        # x = r + x_scale*t keeps the outer integrand O(1) in t
        x = r + x_scale * t
        if x == 0:
            return 0.0
        return _rz_complement(s, x, params, model, inner.tighter()) * x * x_scale

    g.__name__ = "laplace_x"
    I = integrate_semi_infinite(g, 0.0, inner)
    return math.exp(-2.0 * math.pi * params.density * I)


# ---------------------------------------------------------------------------
# coverage


def _threshold(T) -> float:
    T = float(T)
    if not (T >= 0 and math.isfinite(T)):
        raise ValueError(f"threshold must be finite and >= 0, got {T}")
    return T


def _rho_max(spec: QuadratureSpec) -> float:
    # 2 rho exp(-rho^2) has mass exp(-rho_max^2) beyond rho_max
    return math.sqrt(-math.log(spec.tail_cutoff_mass))


def _noise_coef(params: NetworkParams) -> float:
    """mu*sigma^2 expressed against normalised distance (times T rho^(alpha(1-eps)))."""
    alpha, eps = params.pathloss_exponent, params.pc_factor
    kappa = math.pi * params.density
    return params.mu * params.noise_power * kappa ** (-alpha * (1.0 - eps) / 2.0)


def _coverage_integrand(T: float, params: NetworkParams, model: ServingDistanceModel,
                        spec: QuadratureSpec):
    alpha, eps = params.pathloss_exponent, params.pc_factor
    nc = _noise_coef(params) * T
    t_root = T ** (1.0 / alpha)

    def f(rho):
        beta = t_root * rho ** (1.0 - eps)
        expo = rho * rho + 2.0 * float(_mean_tail(beta, rho, params, model, spec))
        if nc > 0:
            expo += nc * rho ** (alpha * (1.0 - eps))
        return 2.0 * rho * math.exp(-expo)

    f.__name__ = "coverage_r"
    return f


def coverage_probability(params: NetworkParams, T, model: ServingDistanceModel,
                         spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """P[SINR > T] for the typical uplink.

    2 pi lam int_0^inf r exp(-pi lam r^2 - mu T r^(alpha(1-eps)) sigma^2)
    L(mu T r^(alpha(1-eps))) dr, evaluated in normalised distance with the
    r-tail truncated where the Rayleigh mass drops below tail_cutoff_mass.
    """
    T = _threshold(T)
    if T == 0:
        return 1.0
    f = _coverage_integrand(T, params, model, spec.tighter())
    p = integrate(f, 0.0, _rho_max(spec), spec)
    return min(max(p, 0.0), 1.0)


def coverage_curve(params: NetworkParams, thresholds: Sequence, model: ServingDistanceModel,
                   spec: QuadratureSpec = DEFAULT_QUADRATURE) -> CoverageCurve:
    ts = tuple(t if isinstance(t, SinrThreshold) else SinrThreshold(float(t)) for t in thresholds)
    probs = tuple(coverage_probability(params, t.value, model, spec) for t in ts)
    return CoverageCurve(ts, probs, params, model, spec)


def coverage_full_pc_no_noise(params: NetworkParams, T, model: ServingDistanceModel,
                              spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Full inversion, no noise: int 2 pi lam r e^(-pi lam r^2) L(T) dr with mu = 1.

    Walks the physical-r integral with :func:`laplace_interference` rather
    than the normalised fast path, so it doubles as a check on it.
    """
    if params.pc_factor != 1.0 or params.noise_power != 0.0:
        raise ValueError("requires pc_factor == 1 and noise_power == 0")
    T = _threshold(T)
    if T == 0:
        return 1.0
    unit = params.replace(baseline_power=1.0)
    lam = params.density
    r_max = _rho_max(spec) / math.sqrt(math.pi * lam)
    inner = spec.tighter()

    def g(r):
        return 2 * math.pi * lam * r * math.exp(-math.pi * lam * r * r) * laplace_interference(T, r, unit, model, inner)

    g.__name__ = "coverage_full_pc_r"
    return integrate(g, 0.0, r_max, spec)


# ---------------------------------------------------------------------------
# rate


def average_rate(params: NetworkParams, model: ServingDistanceModel,
                 spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """E[ln(1 + SINR)] in nats/Hz.

    int_0^inf f_R(r) int_0^inf exp(-sigma^2 s) L(s) dt dr with
    s = mu (e^t - 1) r^(alpha(1-eps)); r outer, t inner.
    """
    alpha, eps = params.pathloss_exponent, params.pc_factor
    nc = _noise_coef(params)
    inner = spec.tighter()

    def outer(rho):
        def over_t(t):
            with np.errstate(over="ignore", invalid="ignore"):
                # beyond 1e300 the Laplace factor is already exactly zero
                T = np.minimum(np.expm1(t), 1e300)
                beta = T ** (1.0 / alpha) * rho ** (1.0 - eps)
                expo = 2.0 * _mean_tail(beta, rho, params, model, inner)
                if nc > 0:
                    expo = expo + np.nan_to_num(nc * T * rho ** (alpha * (1.0 - eps)), nan=np.inf)
                return np.exp(-expo)

        over_t.__name__ = "rate_t"
        tint = float(integrate_batch_semi_infinite(over_t, 0.0, inner, scale=2.0, min_panels=4))
        return 2.0 * rho * math.exp(-rho * rho) * tint

    outer.__name__ = "rate_r"
    return integrate(outer, 0.0, _rho_max(spec), spec)


def rate_from_coverage(params: NetworkParams, model: ServingDistanceModel,
                       spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """int_0^inf p_c(e^t - 1) dt, the threshold integral of coverage."""
    inner = spec.tighter()

    def g(t):
        if t > 690.0:
            return 0.0
        return coverage_probability(params, math.expm1(t), model, inner)

    g.__name__ = "rate_identity_t"
    return integrate_semi_infinite(g, 0.0, spec)


def rate_coverage_identity_check(params: NetworkParams, model: ServingDistanceModel,
                                 spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """|average_rate - int_0^inf p_c(e^t - 1) dt| in nats/Hz."""
    return abs(average_rate(params, model, spec) - rate_from_coverage(params, model, spec))


# ---------------------------------------------------------------------------
# downlink


def downlink_coverage(T, density: float, alpha: float, mu: float, noise_power: float,
                      spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """BS-PPP downlink coverage, all base stations at power 1/mu.

    pi lam int_0^inf exp(-pi lam v (1 + rho(T, alpha)) - mu T sigma^2 v^(alpha/2)) dv,
    integrated in w = pi lam v.
    """
    T = _threshold(T)
    if not alpha > 2:
        raise ValueError(f"alpha must be > 2, got {alpha}")
    if T == 0:
        return 1.0
    rho = downlink_rho(T, alpha, spec.tighter())
    c = mu * T * noise_power * (math.pi * density) ** (-alpha / 2.0)

    def g(w):
        return math.exp(-w * (1.0 + rho) - c * w ** (alpha / 2.0))

    g.__name__ = "downlink_v"
    return integrate_semi_infinite(g, 0.0, spec)


# ---------------------------------------------------------------------------
# epsilon search


@dataclass(frozen=True)
class EpsilonProfile:
    threshold: float
    best: float
    eps: tuple[float, ...]
    coverage: tuple[float, ...]


class EpsilonSearchError(QuadratureError):
    def __init__(self, cause: QuadratureError, eps: Sequence[float], coverage: Sequence[float]):
        super().__init__(f"coverage failed at eps={eps[-1] if eps else None}: {cause}",
                         cause.estimate, cause.error)
        self.partial = (tuple(eps[:-1]), tuple(coverage))


def default_eps_grid(step: float = 0.01) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.round(np.linspace(0.0, 1.0, n + 1), 12)


def optimal_epsilon(T, params: NetworkParams, model: ServingDistanceModel,
                    eps_grid: Sequence[float] | None = None,
                    spec: QuadratureSpec = DEFAULT_QUADRATURE) -> EpsilonProfile:
    """Grid argmax of coverage over eps; ties go to the smaller eps.

    ``params.pc_factor`` is ignored and replaced by each grid value.
    """
    grid = list(default_eps_grid() if eps_grid is None else eps_grid)
    if not grid:
        raise ValueError("eps grid is empty")
    if any(not 0.0 <= e <= 1.0 for e in grid):
        raise ValueError("eps grid must lie within [0, 1]")
    T = _threshold(T)
    done, cov = [], []
    for e in grid:
        done.append(float(e))
        try:
            cov.append(coverage_probability(params.replace(pc_factor=float(e)), T, model, spec))
        except QuadratureError as exc:
            raise EpsilonSearchError(exc, done, cov) from exc
    best_i = 0
    for i, c in enumerate(cov):
        if c > cov[best_i] or (c == cov[best_i] and done[i] < done[best_i]):
            best_i = i
    return EpsilonProfile(T, done[best_i], tuple(done), tuple(cov))
