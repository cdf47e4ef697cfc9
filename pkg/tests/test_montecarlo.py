import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps
from scipy.spatial import cKDTree

from uplink_sg import montecarlo as mc
from uplink_sg.params import ConfigError, NetworkParams

FULL_INV_A4 = NetworkParams(0.25, 4.0, 1.0, 1.0)


def test_ppp_empty_window():
    assert mc.sample_ppp(0.25, 0.0, np.random.default_rng(0)).shape == (0, 2)


def test_ppp_count_moments():
    rng = np.random.default_rng(7)
    n = np.array([len(mc.sample_ppp(0.25, 20.0, rng)) for _ in range(10_000)])
    mean = 0.25 * math.pi * 400
    assert abs(n.mean() - mean) <= 3 * math.sqrt(mean / len(n))
    assert n.var() == pytest.approx(mean, rel=0.05)


def test_ppp_points_inside_window_and_uniform():
    pts = mc.sample_ppp(1.0, 10.0, np.random.default_rng(2))
    r = np.hypot(*pts.T)
    assert r.max() <= 10.0
    # radius^2 is uniform on [0, 100]
    assert sps.kstest(r**2 / 100.0, "uniform").pvalue > 1e-3


def test_two_mobiles_each_bs_in_own_cell():
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = rng.uniform(-3, 3, (2, 2))
        bs = mc.place_bs_in_voronoi(m, rng, window_radius=6.0)
        d = np.linalg.norm(bs[:, None, :] - m[None, :, :], axis=-1)
        assert np.all(np.argmin(d, axis=1) == [0, 1])
        assert np.all(np.hypot(*bs.T) <= 6.0)


def test_one_mobile_rejected():
    with pytest.raises(ConfigError):
        mc.place_bs_in_voronoi(np.zeros((1, 2)), np.random.default_rng(0))


def test_bs_uniform_in_voronoi_cell():
    # compare against brute-force rejection from the window
    rng = np.random.default_rng(4)
    mobiles = mc.sample_ppp(1.0, 6.0, rng)
    tree = cKDTree(mobiles)
    k = int(np.argmin(np.hypot(*mobiles.T)))
    fast = np.array([mc.place_bs_in_voronoi(mobiles, np.random.default_rng(i), 6.0)[k] for i in range(3000)])
    cand = rng.uniform(-6, 6, (400_000, 2))
    cand = cand[(np.hypot(*cand.T) <= 6.0) & (tree.query(cand)[1] == k)][:3000]
    for axis in (0, 1):
        assert sps.ks_2samp(fast[:, axis], cand[:, axis]).pvalue > 1e-3
    assert np.all(tree.query(fast)[1] == k)


def test_single_interferer_hand_computation():
    p = NetworkParams(1.0, 4.0, 0.0, 1.0)
    mobiles = np.array([[0.5, 0.0], [0.0, 2.0]])
    rz = np.array([0.3, 0.7])
    g = np.array([1.7, 0.4])
    sinr, *_ = mc._uplink_sinr(p, mobiles, rz, g, 0)
    assert sinr == pytest.approx((1.7 * 0.5**-4) / (0.4 * 2.0**-4), rel=1e-14)


def test_serving_distance_is_rayleigh():
    cfg = mc.SimConfig.default(0.25, n_trials=100_000, seed=1, mode="iid-rayleigh")
    _, R = mc.simulate_uplink_samples(FULL_INV_A4, cfg)
    ks = sps.kstest(R, lambda r: 1 - np.exp(-0.25 * np.pi * r**2)).statistic
    assert ks <= 0.01


def test_zero_threshold_survival():
    cfg = mc.SimConfig.default(0.25, n_trials=200, seed=0)
    emp = mc.simulate_coverage(FULL_INV_A4, cfg, [0.0])
    assert emp.survival[0] == 1.0


def test_realization_is_consistent():
    cfg = mc.SimConfig.default(0.25, seed=0)
    rz = mc.uplink_realization(FULL_INV_A4, cfg, np.random.default_rng(5))
    assert rz.serving_distance == pytest.approx(np.min(np.hypot(*rz.mobiles.T)))
    sig = rz.serving_fading  # full inversion cancels the serving pathloss
    interf = np.sum(rz.interferer_fading * rz.interferer_rz**4 * rz.interferer_distance**-4)
    assert rz.sinr == pytest.approx(sig / interf, rel=1e-12)


def test_same_seed_same_samples():
    cfg = mc.SimConfig.default(0.25, n_trials=300, seed=42)
    a, _ = mc.simulate_uplink_samples(FULL_INV_A4, cfg)
    b, _ = mc.simulate_uplink_samples(FULL_INV_A4, cfg)
    assert np.array_equal(a, b)
    c, _ = mc.simulate_uplink_samples(FULL_INV_A4, mc.SimConfig.default(0.25, n_trials=300, seed=43))
    assert not np.array_equal(a, c)


def test_trials_independent_of_batching():
    base = mc.SimConfig.default(0.25, n_trials=40, seed=9, batch_size=40)
    a, _ = mc.simulate_uplink_samples(FULL_INV_A4, base)
    b, _ = mc.simulate_uplink_samples(FULL_INV_A4, mc.SimConfig.default(0.25, n_trials=40, seed=9, batch_size=7))
    np.testing.assert_allclose(a, b, rtol=1e-9)


def test_stderr_shrinks_with_trials():
    se = []
    for n in (400, 6400):
        cfg = mc.SimConfig.default(0.25, n_trials=n, seed=2, mode="iid-rayleigh")
        se.append(mc.simulate_coverage(FULL_INV_A4, cfg, [1.0]).stderr[0])
    assert se[1] == pytest.approx(se[0] / 4, rel=0.2)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=200), st.floats(-60, 60))
def test_empirical_ccdf_definition(xs, t):
    emp = mc.EmpiricalCcdf.from_samples(xs, [t])
    assert emp.survival[0] == pytest.approx(np.mean(np.array(xs) > t))
    assert 0.0 <= emp.stderr[0] <= 0.5


def test_empirical_ccdf_needs_samples():
    with pytest.raises(mc.SampleSizeError):
        mc.EmpiricalCcdf.from_samples([], [0.0])


@pytest.mark.parametrize(
    "kw",
    [dict(window_radius=0.0), dict(guard_radius=50.0), dict(n_trials=0), dict(mode="bogus"), dict(seed=-1)],
)
def test_sim_config_rejects(kw):
    base = dict(window_radius=30.0, guard_radius=10.0)
    base.update(kw)
    with pytest.raises(ConfigError):
        mc.SimConfig(**base)


def test_guard_too_thin():
    cfg = mc.SimConfig(window_radius=30.0, guard_radius=1.0, n_trials=5)
    with pytest.raises(ConfigError):
        mc.simulate_coverage(FULL_INV_A4, cfg, [1.0])


# ---------------------------------------------------------------- hexagonal grid

def test_hexagon_samples_fill_the_cell():
    lam = 0.25
    pts = mc.sample_hexagon(np.random.default_rng(0), 200_000, lam)
    d = mc.hex_spacing(lam)
    circ = d / math.sqrt(3)
    r = np.hypot(*pts.T)
    assert r.max() <= circ * (1 + 1e-12)
    # inside the inscribed circle the law is 2 pi lam r
    inr = d / 2
    for x in (0.3 * inr, 0.7 * inr, inr):
        assert np.mean(r <= x) == pytest.approx(lam * math.pi * x * x, abs=0.004)
    # hexagon area is 1/lam
    assert math.sqrt(3) / 2 * d * d == pytest.approx(1 / lam)


# ---------------------------------------------------------------- neighbour statistics

def test_iid_control_uncorrelated():
    cfg = mc.SimConfig.default(0.25, n_trials=400, seed=3)
    st_ = mc.neighbor_rz_stats(0.25, cfg, iid=True, min_pairs=1)
    assert abs(st_.rho) <= 0.02
    assert st_.histogram.sum() == pytest.approx(1.0)
    assert st_.product_mass.shape == st_.histogram.shape


def test_neighbour_pairs_too_few():
    cfg = mc.SimConfig.default(0.25, n_trials=2, seed=0)
    with pytest.raises(mc.SampleSizeError):
        mc.neighbor_rz_stats(0.25, cfg, min_pairs=10**6)


def _rayleigh_ks(r, lam):
    return sps.kstest(r, lambda x: 1 - np.exp(-lam * np.pi * x * x)).statistic


def test_iid_neighbour_marginal_is_rayleigh():
    cfg = mc.SimConfig.default(0.25, n_trials=400, seed=1)
    st_ = mc.neighbor_rz_stats(0.25, cfg, iid=True, min_pairs=1)
    assert _rayleigh_ks(st_.samples.ravel(), 0.25) <= 0.02


@pytest.mark.xfail(strict=True, reason="true Voronoi-cell R_z is not Rayleigh (KS ~0.09); see decisions ledger")
def test_neighbour_marginal_is_rayleigh():
    cfg = mc.SimConfig.default(0.25, n_trials=150, seed=0)
    st_ = mc.neighbor_rz_stats(0.25, cfg)
    assert _rayleigh_ks(st_.samples.ravel(), 0.25) <= 0.02


# ---------------------------------------------------------------- transmit power

def test_tx_power_no_inversion_is_a_step():
    p = NetworkParams(0.24, 3.7, 0.0, 0.01)
    cfg = mc.SimConfig.default(0.24, n_trials=20, seed=0)
    x = mc.tx_power_samples_dbm(p, 0.2, cfg)
    assert np.allclose(x, 10.0)


def test_tx_power_capped():
    p = NetworkParams(0.24, 3.7, 1.0, 0.01)
    cfg = mc.SimConfig.default(0.24, n_trials=20, seed=0)
    x = mc.tx_power_samples_dbm(p, 0.2, cfg)
    assert x.max() <= 10 * math.log10(0.2) + 30 + 1e-9
    assert np.any(x < 0.0)


# ---------------------------------------------------------------- downlink

def test_downlink_zero_threshold():
    p = NetworkParams(0.25, 4.0, 1.0, 1.0)
    cfg = mc.SimConfig.default(0.25, n_trials=50, seed=0, mode="downlink-user-ppp")
    emp = mc.simulate_downlink_userppp(p, cfg, [0.0, 1.0])
    assert emp.survival[0] == 1.0
    assert 0.0 < emp.survival[1] < 1.0


@pytest.mark.xfail(strict=True, reason="user-PPP and BS-PPP downlink differ by ~0.10 at mid thresholds; see decisions ledger")
def test_downlink_userppp_close_to_bs_ppp():
    from uplink_sg import analytic as an

    p = NetworkParams(0.24, 3.7, 1.0, 1.0)
    ts = 10 ** (np.arange(-10.0, 21.0, 2.0) / 10)
    cfg = mc.SimConfig.default(0.24, n_trials=2000, seed=1, mode="downlink-user-ppp")
    emp = mc.simulate_downlink_userppp(p, cfg, ts)
    ref = np.array([an.downlink_coverage(t, 0.24, 3.7, 1.0, 0.0) for t in ts])
    assert np.max(np.abs(emp.survival - ref)) <= 0.05
