"""Monte Carlo simulator of the uplink model and its grid / downlink baselines.

Each trial owns a generator derived from ``(seed, trial index)``, so a trial's
sample does not depend on how many other trials run or how they are batched.
For speed, trials are laid out side by side in one plane (windows far enough
apart that they cannot see each other) and share one k-d tree.

Base stations of the PPP model are placed uniformly in their mobile's Voronoi
cell by rejection: a proposal is accepted when its nearest mobile is the
owner. Proposals come from a union of circular wedges around the mobile that
provably covers the cell, which keeps the acceptance rate high without
building polygons.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .analytic import ServingDistanceModel
from .params import ConfigError, NetworkParams

Mode = Literal["true-ppp", "iid-rayleigh", "hex-grid", "downlink-user-ppp"]
MODES: tuple[str, ...] = ("true-ppp", "iid-rayleigh", "hex-grid", "downlink-user-ppp")

_N_SECTORS = 12
_N_NEIGHBORS = 12
_MAX_ROUNDS = 400
# windows of radius W are placed this many W apart; >= 4 keeps them independent
_SPACING = 4.5


class SampleSizeError(RuntimeError):
    """Too few samples for the requested statistic."""


@dataclass(frozen=True)
class SimConfig:
    window_radius: float
    guard_radius: float
    n_trials: int = 200_000
    seed: int = 0
    mode: Mode = "true-ppp"
    batch_size: int = 256

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown simulation mode {self.mode!r}")
        if not (self.window_radius > 0 and math.isfinite(self.window_radius)):
            raise ConfigError(f"window radius must be positive, got {self.window_radius}")
        if not 0 < self.guard_radius < self.window_radius:
            raise ConfigError("guard radius must lie in (0, window_radius)")
        if int(self.n_trials) < 1:
            raise ConfigError(f"n_trials must be >= 1, got {self.n_trials}")
        if int(self.batch_size) < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @classmethod
    def default(cls, density: float, **overrides) -> SimConfig:
        """15 mean cell radii of window, 5 of guard, 2e5 trials."""
        rc = 1.0 / math.sqrt(math.pi * density)
        kw = dict(window_radius=15.0 * rc, guard_radius=5.0 * rc)
        kw.update(overrides)
        return cls(**kw)

    @property
    def inner_radius(self) -> float:
        return self.window_radius - self.guard_radius

    def check_density(self, density: float) -> None:
        """Guard must span at least five mean cell radii."""
        rc = 1.0 / math.sqrt(math.pi * density)
        if self.guard_radius < 5.0 * rc * (1 - 1e-12):
            raise ConfigError(
                f"guard radius {self.guard_radius:g} is below 5 mean cell radii ({5 * rc:g})"
            )


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


@dataclass(frozen=True)
class EmpiricalCcdf:
    thresholds: np.ndarray
    survival: np.ndarray
    stderr: np.ndarray
    n: int
    samples: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_samples(cls, samples, thresholds, *, keep_samples: bool = True) -> EmpiricalCcdf:
        x = np.sort(np.asarray(samples, dtype=float))
        t = np.asarray(thresholds, dtype=float)
        n = x.size
        if n == 0:
            raise SampleSizeError("no samples")
        # P[X > t]
        surv = 1.0 - np.searchsorted(x, t, side="right") / n
        se = np.sqrt(surv * (1.0 - surv) / n)
        return cls(t, surv, se, n, np.asarray(samples, dtype=float) if keep_samples else None)


@dataclass(frozen=True)
class SpatialRealization:
    """One sampled network seen from the typical point at the origin."""

    mobiles: np.ndarray
    base_stations: np.ndarray
    serving_index: int
    serving_distance: float
    interferer_distance: np.ndarray  # D_z
    interferer_rz: np.ndarray  # R_z
    interferer_fading: np.ndarray  # g_z
    serving_fading: float
    sinr: float


@dataclass(frozen=True)
class RzJointStats:
    edges: np.ndarray
    histogram: np.ndarray
    product_mass: np.ndarray
    rho: float
    n_pairs: int
    samples: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# point processes


def _uniform_disk(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    u = rng.random((n, 2))
    r = radius * np.sqrt(u[:, 0])
    th = 2.0 * np.pi * u[:, 1]
    return np.column_stack((r * np.cos(th), r * np.sin(th)))


def sample_ppp(density: float, window_radius: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP of ``density`` on the disk of ``window_radius`` at the origin."""
    if not density > 0:
        raise ConfigError(f"density must be > 0, got {density}")
    if window_radius < 0:
        raise ConfigError("window radius must be >= 0")
    n = rng.poisson(density * math.pi * window_radius**2) if window_radius > 0 else 0
    return _uniform_disk(rng, int(n), window_radius)


def _draw_mobiles(density: float, W: float, rng: np.random.Generator, minimum: int) -> tuple[np.ndarray, int]:
    redraws = 0
    while True:
        pts = sample_ppp(density, W, rng)
        if len(pts) >= minimum:
            return pts, redraws
        redraws += 1


# ---------------------------------------------------------------------------
# Voronoi-uniform base station placement


def _wrap(a):
    return np.abs((a + np.pi) % (2.0 * np.pi) - np.pi)


def _sector_bounds(pts: np.ndarray, centers: np.ndarray, owner: np.ndarray, W: float,
                   tree: cKDTree) -> np.ndarray:
    """Per mobile and sector, a radius beyond which the clipped cell cannot reach.

    A point p at distance t from x in direction phi belongs to x's cell only
    if t <= d_y / (2 cos(phi - theta_y)) for every other mobile y. Over a
    sector the worst angle sits at an endpoint, so the min over neighbours of
    that endpoint bound is a valid radius. The window disk adds its own
    exit-distance bound.
    """
    k = min(_N_NEIGHBORS + 1, len(tree.data))
    d, idx = tree.query(pts, k=k)
    d, idx = d[:, 1:], idx[:, 1:]
    # rel/d^2 projected on an edge direction is cos(delta)/d; the constraint
    # from neighbour y is t <= 1 / (2 * that), the worse edge being the smaller
    rel = (tree.data[idx] - pts[:, None, :]) / (d * d)[..., None]
    # points of other windows only appear when a window has <= k mobiles
    rel[owner[idx] != owner[:, None]] = 0.0
    w = 2.0 * np.pi / _N_SECTORS
    a = np.arange(_N_SECTORS) * w
    b = a + w
    proj = np.minimum(rel @ np.vstack((np.cos(a), np.sin(a))), rel @ np.vstack((np.cos(b), np.sin(b))))
    best = proj.max(axis=1)
    with np.errstate(divide="ignore"):
        bound = np.where(best > 0, 0.5 / best, np.inf)

    # window: exit distance along u is -x.u + sqrt((x.u)^2 + W^2 - |x|^2), largest
    # for the direction in the sector closest to x's own bearing
    x = pts - centers
    rx = np.hypot(x[:, 0], x[:, 1])
    bx = np.arctan2(x[:, 1], x[:, 0]) % (2.0 * np.pi)
    inside = ((bx[:, None] - a) % (2.0 * np.pi)) < w
    gap = np.minimum(_wrap(bx[:, None] - a), _wrap(bx[:, None] - b))
    gap = np.where(inside, 0.0, gap)
    xu = rx[:, None] * np.cos(gap)
    exit_ = -xu + np.sqrt(np.maximum(xu * xu + W * W - rx[:, None] ** 2, 0.0))
    return np.minimum(bound, np.maximum(exit_, 0.0))


def _place_batch(
    groups: Sequence[np.ndarray],
    rngs: Sequence[np.random.Generator],
    W: float,
    max_rounds: int = _MAX_ROUNDS,
) -> tuple[list[np.ndarray], int]:
    """Place one BS per mobile for several windows at once.

    ``groups[j]`` are mobiles relative to window j's centre. Returns BS
    positions (same frame) with NaN rows for mobiles still unplaced after
    ``max_rounds``, plus the number of such mobiles.
    """
    spacing = _SPACING * W
    sizes = np.array([len(g) for g in groups])
    starts = np.concatenate(([0], np.cumsum(sizes)))
    owner_trial = np.repeat(np.arange(len(groups)), sizes)
    centers = np.column_stack((owner_trial * spacing, np.zeros(len(owner_trial))))
    pts = np.concatenate(groups) + centers if len(owner_trial) else np.zeros((0, 2))
    tree = cKDTree(pts)
    bounds = _sector_bounds(pts, centers, owner_trial, W, tree)
    area = bounds**2
    cum = np.cumsum(area, axis=1)
    cum /= cum[:, -1:]
    w = 2.0 * np.pi / _N_SECTORS

    bs = np.full_like(pts, np.nan)
    pending = [np.arange(starts[j], starts[j + 1]) for j in range(len(groups))]
    for _ in range(max_rounds):
        active = [j for j in range(len(groups)) if len(pending[j])]
        if not active:
            break
        ids = np.concatenate([pending[j] for j in active])
        u = np.concatenate([rngs[j].random((len(pending[j]), 3)) for j in active])
        sec = (u[:, :1] > cum[ids]).sum(axis=1)
        sec = np.minimum(sec, _N_SECTORS - 1)
        rad = bounds[ids, sec] * np.sqrt(u[:, 1])
        ang = (sec + u[:, 2]) * w
        prop = pts[ids] + np.column_stack((rad * np.cos(ang), rad * np.sin(ang)))
        rel = prop - centers[ids]
        ok = np.einsum("ij,ij->i", rel, rel) <= W * W
        _, near = tree.query(prop)
        ok &= near == ids
        bs[ids[ok]] = prop[ok]
        left = ids[~ok]
        tri = owner_trial[left]
        pending = [np.array([], dtype=int)] * len(groups)
        if len(left):
            cuts = np.searchsorted(tri, np.arange(len(groups) + 1))
            pending = [left[cuts[j]:cuts[j + 1]] for j in range(len(groups))]
    unplaced = int(sum(len(p) for p in pending))
    out = [bs[starts[j]:starts[j + 1]] - centers[starts[j]:starts[j + 1]] for j in range(len(groups))]
    return out, unplaced


def place_bs_in_voronoi(mobiles, rng: np.random.Generator, window_radius: float | None = None) -> np.ndarray:
    """One BS per mobile, uniform over its Voronoi cell clipped to the window.

    The window is the disk of ``window_radius`` about the origin (default:
    the smallest such disk holding every mobile). Rows that exhausted the
    rejection budget are NaN.
    """
    mobiles = np.asarray(mobiles, dtype=float).reshape(-1, 2)
    if len(mobiles) < 2:
        raise ConfigError("need at least two mobiles; a lone mobile's cell is the whole plane")
    W = float(np.max(np.hypot(mobiles[:, 0], mobiles[:, 1]))) if window_radius is None else float(window_radius)
    if W <= 0:
        raise ConfigError("window radius must be > 0")
    out, _ = _place_batch([mobiles], [rng], W)
    return out[0]


# ---------------------------------------------------------------------------
# uplink


def _rz_values(mode: str, mobiles: np.ndarray, bs: np.ndarray | None, density: float,
               rng: np.random.Generator) -> np.ndarray:
    if mode == "iid-rayleigh":
        return ServingDistanceModel.rayleigh(density).sample(rng, len(mobiles))
    return np.hypot(*(bs - mobiles).T)


def _uplink_sinr(params: NetworkParams, mobiles, rz, fading, serving):
    alpha, eps = params.pathloss_exponent, params.pc_factor
    D = np.hypot(mobiles[:, 0], mobiles[:, 1])
    R = D[serving]
    mask = np.ones(len(mobiles), dtype=bool)
    mask[serving] = False
    mask &= np.isfinite(rz)
    with np.errstate(divide="ignore"):
        interf = np.sum(fading[mask] * rz[mask] ** (alpha * eps) * D[mask] ** (-alpha))
        signal = fading[serving] * R ** (alpha * (eps - 1.0))
    return signal / (interf + params.noise_power), D, R, mask


def _ppp_trials(params: NetworkParams, config: SimConfig, indices: Sequence[int], *, with_bs: bool,
                extra_origin: bool = False):
    """Mobiles, BSs and generators for a batch of trial indices."""
    W = config.window_radius
    rngs = [trial_rng(config.seed, i) for i in indices]
    groups, redraws = [], 0
    for rng in rngs:
        pts, r = _draw_mobiles(params.density, W, rng, 2)
        if extra_origin:
            pts = np.vstack((np.zeros((1, 2)), pts))
        groups.append(pts)
        redraws += r
    bss, unplaced = (_place_batch(groups, rngs, W) if with_bs else ([None] * len(groups), 0))
    return rngs, groups, bss, redraws, unplaced


@dataclass
class SimStats:
    """Book-keeping from a simulation run."""

    trials: int = 0
    redraws: int = 0
    discarded: int = 0
    unplaced_bs: int = 0

    def as_dict(self) -> dict:
        return dict(trials=self.trials, redraws=self.redraws, discarded=self.discarded,
                    unplaced_bs=self.unplaced_bs)


def _check_params(params: NetworkParams, config: SimConfig) -> None:
    config.check_density(params.density)


def uplink_realization(params: NetworkParams, config: SimConfig, rng: np.random.Generator) -> SpatialRealization:
    """One realization of the typical uplink (true-ppp or iid-rayleigh)."""
    if config.mode not in ("true-ppp", "iid-rayleigh"):
        raise ConfigError(f"uplink_realization handles PPP modes, not {config.mode!r}")
    _check_params(params, config)
    W = config.window_radius
    while True:
        mobiles, _ = _draw_mobiles(params.density, W, rng, 2)
        bs = _place_batch([mobiles], [rng], W)[0][0] if config.mode == "true-ppp" else None
        rz = _rz_values(config.mode, mobiles, bs, params.density, rng)
        fading = rng.exponential(params.baseline_power, len(mobiles))
        serving = int(np.argmin(np.hypot(mobiles[:, 0], mobiles[:, 1])))
        sinr, D, R, mask = _uplink_sinr(params, mobiles, rz, fading, serving)
        if R <= config.inner_radius:
            break
    if bs is None:
        bs = np.full_like(mobiles, np.nan)
    return SpatialRealization(
        mobiles=mobiles, base_stations=bs, serving_index=serving, serving_distance=float(R),
        interferer_distance=D[mask], interferer_rz=rz[mask], interferer_fading=fading[mask],
        serving_fading=float(fading[serving]), sinr=float(sinr),
    )


def _batches(n: int, size: int):
    for s in range(0, n, size):
        yield range(s, min(n, s + size))


def simulate_uplink_samples(params: NetworkParams, config: SimConfig, stats: SimStats | None = None
                            ) -> tuple[np.ndarray, np.ndarray]:
    """SINR and serving distance of the typical link, one pair per trial."""
    if config.mode == "hex-grid":
        return _hex_samples(params, config, stats)
    if config.mode not in ("true-ppp", "iid-rayleigh"):
        raise ConfigError(f"not an uplink mode: {config.mode!r}")
    _check_params(params, config)
    stats = stats if stats is not None else SimStats()
    n = int(config.n_trials)
    sinr = np.empty(n)
    dist = np.empty(n)
    for block in _batches(n, config.batch_size):
        rngs, groups, bss, redraws, unplaced = _ppp_trials(
            params, config, block, with_bs=config.mode == "true-ppp")
        stats.redraws += redraws
        stats.unplaced_bs += unplaced
        for i, rng, mobiles, bs in zip(block, rngs, groups, bss):
            rz = _rz_values(config.mode, mobiles, bs, params.density, rng)
            fading = rng.exponential(params.baseline_power, len(mobiles))
            serving = int(np.argmin(np.hypot(mobiles[:, 0], mobiles[:, 1])))
            s, _, R, _ = _uplink_sinr(params, mobiles, rz, fading, serving)
            if R > config.inner_radius:
                stats.discarded += 1
                s = np.nan
            sinr[i], dist[i] = s, R
    stats.trials += n
    keep = np.isfinite(sinr)
    return sinr[keep], dist[keep]


def simulate_coverage(params: NetworkParams, config: SimConfig, thresholds,
                      stats: SimStats | None = None) -> EmpiricalCcdf:
    """Empirical P[SINR > T] at linear thresholds ``T``."""
    sinr, _ = simulate_uplink_samples(params, config, stats)
    return EmpiricalCcdf.from_samples(sinr, thresholds)


# ---------------------------------------------------------------------------
# hexagonal grid


def hex_spacing(density: float) -> float:
    """Inter-site distance of a hexagonal lattice with cell area 1/density."""
    return math.sqrt(2.0 / (math.sqrt(3.0) * density))


def _hex_lattice(density: float, radius: float) -> np.ndarray:
    d = hex_spacing(density)
    e1 = np.array([d, 0.0])
    e2 = np.array([d / 2.0, d * math.sqrt(3.0) / 2.0])
    m = int(math.ceil(radius / (d * math.sqrt(3.0) / 2.0))) + 2
    i, j = np.meshgrid(np.arange(-m, m + 1), np.arange(-m, m + 1), indexing="ij")
    c = i.ravel()[:, None] * e1 + j.ravel()[:, None] * e2
    c = c[np.hypot(c[:, 0], c[:, 1]) <= radius]
    # origin cell first
    order = np.lexsort((c[:, 1], c[:, 0], np.hypot(c[:, 0], c[:, 1]).round(12)))
    return c[order]


def sample_hexagon(rng: np.random.Generator, n: int, density: float) -> np.ndarray:
    """Uniform points in the pointy-top hexagon of area 1/density at the origin.

    The hexagon splits into three rhombi spanned by every other vertex.
    """
    a = hex_spacing(density) / math.sqrt(3.0)
    ang = np.deg2rad(30.0 + 60.0 * np.arange(6))
    v = a * np.column_stack((np.cos(ang), np.sin(ang)))
    u = rng.random((n, 3))
    k = np.minimum((u[:, 0] * 3).astype(int), 2)
    return u[:, 1:2] * v[2 * k] + u[:, 2:3] * v[(2 * k + 2) % 6]


def _hex_samples(params: NetworkParams, config: SimConfig, stats: SimStats | None):
    _check_params(params, config)
    stats = stats if stats is not None else SimStats()
    alpha, eps = params.pathloss_exponent, params.pc_factor
    centers = _hex_lattice(params.density, config.window_radius)
    n_cells = len(centers)
    n = int(config.n_trials)
    sinr = np.empty(n)
    dist = np.empty(n)
    for i in range(n):
        rng = trial_rng(config.seed, i)
        off = sample_hexagon(rng, n_cells, params.density)
        users = centers + off
        rz = np.hypot(off[:, 0], off[:, 1])
        fading = rng.exponential(params.baseline_power, n_cells)
        D = np.hypot(users[:, 0], users[:, 1])
        R = D[0]
        interf = np.sum(fading[1:] * rz[1:] ** (alpha * eps) * D[1:] ** (-alpha))
        sinr[i] = fading[0] * R ** (alpha * (eps - 1.0)) / (interf + params.noise_power)
        dist[i] = R
    stats.trials += n
    return sinr, dist


def simulate_hex_grid(params: NetworkParams, config: SimConfig, thresholds,
                      stats: SimStats | None = None) -> EmpiricalCcdf:
    """Uplink CCDF on a hexagonal grid with one uniform user per cell."""
    cfg = config if config.mode == "hex-grid" else _with_mode(config, "hex-grid")
    sinr, _ = _hex_samples(params, cfg, stats)
    return EmpiricalCcdf.from_samples(sinr, thresholds)


def _with_mode(config: SimConfig, mode: str) -> SimConfig:
    from dataclasses import replace
    return replace(config, mode=mode)


# ---------------------------------------------------------------------------
# R_z statistics and transmit power


def _gabriel_pairs(pts: np.ndarray, tree: cKDTree, k: int = 12) -> np.ndarray:
    """Pairs (i, j), i < j, whose segment midpoint has no mobile nearer than i and j."""
    kk = min(k + 1, len(pts))
    _, idx = tree.query(pts, k=kk)
    i = np.repeat(np.arange(len(pts)), kk - 1)
    j = idx[:, 1:].ravel()
    keep = i < j
    i, j = i[keep], j[keep]
    mid = 0.5 * (pts[i] + pts[j])
    half = 0.5 * np.hypot(*(pts[i] - pts[j]).T)
    d3, _ = tree.query(mid, k=min(3, len(pts)))
    third = d3[:, -1] if d3.ndim == 2 and d3.shape[1] >= 3 else np.full(len(mid), np.inf)
    ok = third > half * (1.0 + 1e-12)
    return np.column_stack((i[ok], j[ok]))


def _rayleigh_bin_mass(edges: np.ndarray, density: float) -> np.ndarray:
    cdf = 1.0 - np.exp(-density * np.pi * edges**2)
    m = np.diff(cdf)
    return np.outer(m, m)


def neighbor_rz_stats(density: float, config: SimConfig, *, iid: bool = False, bins: int = 40,
                      min_pairs: int = 20_000) -> RzJointStats:
    """Joint (R_z1, R_z2) of mobiles in adjacent Voronoi cells.

    Adjacent means the two mobiles are Gabriel neighbours: the midpoint of
    their segment is nearer to them than to any other mobile, which implies
    a shared cell edge. Only pairs with both mobiles inside the guard-zone
    inner disk are kept. ``iid=True`` draws R_z i.i.d. Rayleigh instead of
    placing base stations (control).
    """
    config.check_density(density)
    W = config.window_radius
    pairs_r = []
    for block in _batches(int(config.n_trials), config.batch_size):
        rngs = [trial_rng(config.seed, i) for i in block]
        groups = [_draw_mobiles(density, W, rng, 3)[0] for rng in rngs]
        if iid:
            bss = [None] * len(groups)
        else:
            bss, _ = _place_batch(groups, rngs, W)
        for rng, pts, bs in zip(rngs, groups, bss):
            rz = _rz_values("iid-rayleigh" if iid else "true-ppp", pts, bs, density, rng)
            tree = cKDTree(pts)
            pr = _gabriel_pairs(pts, tree)
            inner = np.hypot(pts[:, 0], pts[:, 1]) <= config.inner_radius
            pr = pr[inner[pr[:, 0]] & inner[pr[:, 1]]]
            v = np.column_stack((rz[pr[:, 0]], rz[pr[:, 1]]))
            pairs_r.append(v[np.all(np.isfinite(v), axis=1)])
    samples = np.concatenate(pairs_r) if pairs_r else np.zeros((0, 2))
    if len(samples) < min_pairs:
        raise SampleSizeError(f"only {len(samples)} adjacent pairs, need {min_pairs}; raise n_trials")
    # randomise the order inside each pair so the joint law is symmetric
    rho = float(np.corrcoef(np.concatenate([samples, samples[:, ::-1]]).T)[0, 1])
    rmax = math.sqrt(-math.log(1e-4) / (math.pi * density))
    edges = np.linspace(0.0, rmax, bins + 1)
    h, _, _ = np.histogram2d(samples[:, 0], samples[:, 1], bins=[edges, edges])
    h = (h + h.T) / (2.0 * max(1, len(samples)))
    h /= h.sum()
    return RzJointStats(edges, h, _rayleigh_bin_mass(edges, density), rho, len(samples), samples)


def tx_power_samples_dbm(params: NetworkParams, p_max: float, config: SimConfig) -> np.ndarray:
    """min(p_max, mu^-1 R_z^(alpha eps)) in dBm for mobiles in the inner disk."""
    if not p_max > 0:
        raise ConfigError(f"p_max must be > 0, got {p_max}")
    _check_params(params, config)
    alpha, eps = params.pathloss_exponent, params.pc_factor
    out = []
    for block in _batches(int(config.n_trials), config.batch_size):
        rngs, groups, bss, _, _ = _ppp_trials(params, config, block, with_bs=eps > 0)
        for pts, bs in zip(groups, bss):
            inner = np.hypot(pts[:, 0], pts[:, 1]) <= config.inner_radius
            if eps == 0:
                p = np.full(int(inner.sum()), params.baseline_power)
            else:
                rz = np.hypot(*(bs - pts).T)[inner]
                p = params.baseline_power * rz[np.isfinite(rz)] ** (alpha * eps)
            out.append(np.minimum(p, p_max))
    p = np.concatenate(out)
    return 10.0 * np.log10(p) + 30.0


def tx_power_ccdf(params: NetworkParams, p_max: float, config: SimConfig,
                  thresholds_dbm) -> EmpiricalCcdf:
    return EmpiricalCcdf.from_samples(tx_power_samples_dbm(params, p_max, config), thresholds_dbm)


# ---------------------------------------------------------------------------
# downlink


def simulate_downlink_userppp(params: NetworkParams, config: SimConfig, thresholds,
                              stats: SimStats | None = None) -> EmpiricalCcdf:
    """Downlink SINR at a mobile at the origin; BSs placed in the user Voronoi cells.

    A mobile is added at the origin (it is the typical user). Every BS sends
    at ``baseline_power`` under unit-mean Rayleigh fading, so received power
    before pathloss is exponential with mean ``baseline_power``. The user is
    served by its nearest BS.
    """
    _check_params(params, config)
    stats = stats if stats is not None else SimStats()
    alpha = params.pathloss_exponent
    n = int(config.n_trials)
    sinr = np.empty(n)
    for block in _batches(n, config.batch_size):
        rngs, groups, bss, redraws, unplaced = _ppp_trials(
            params, config, block, with_bs=True, extra_origin=True)
        stats.redraws += redraws
        stats.unplaced_bs += unplaced
        for i, rng, bs in zip(block, rngs, bss):
            bs = bs[np.all(np.isfinite(bs), axis=1)]
            h = rng.exponential(params.baseline_power, len(bs))
            D = np.hypot(bs[:, 0], bs[:, 1])
            k = int(np.argmin(D))
            with np.errstate(divide="ignore"):
                rx = h * D ** (-alpha)
            interf = rx.sum() - rx[k]
            sinr[i] = rx[k] / (interf + params.noise_power)
    stats.trials += n
    return EmpiricalCcdf.from_samples(sinr, thresholds)
