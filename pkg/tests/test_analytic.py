import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as spi

from uplink_sg import analytic as an
from uplink_sg import montecarlo as mc
from uplink_sg.params import NetworkParams, QuadratureSpec, SinrThreshold, reference_params

# E[1/(1 + R^4)], R Rayleigh with lam = 0.25, from a 2e5-panel fixed-grid
# Simpson rule on [0, 12] (stable to all printed digits at 4e5 panels)
SIMPSON_RZ_ORACLE = 0.5537880127132467

RAY = an.ServingDistanceModel.rayleigh(0.25)
DISK = an.ServingDistanceModel.uniform_disk(0.25)
FULL_INV_A4 = NetworkParams(0.25, 4.0, 1.0, 1.0)
FAST = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-9)


# ---------------------------------------------------------------- serving distance

def test_models_are_normalised():
    for m in (RAY, DISK):
        hi = 20.0 if m.kind == "rayleigh" else m.radius
        mass, _ = spi.quad(m.pdf, 0, hi, points=[m.radius])
        assert mass == pytest.approx(1.0, abs=1e-10)
        assert float(m.ccdf(0.0)) == 1.0


def test_model_sampling_matches_ccdf():
    rng = np.random.default_rng(1)
    for m in (RAY, DISK):
        x = m.sample(rng, 200_000)
        for r in (0.5, 1.0, 1.5):
            assert np.mean(x > r) == pytest.approx(float(m.ccdf(r)), abs=0.005)


def test_unknown_model():
    with pytest.raises(ValueError):
        an.ServingDistanceModel("lognormal", 1.0)


# ---------------------------------------------------------------- tail integral

@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 30.0), st.floats(2.2, 6.0))
def test_tail_integral_matches_quadrature(a, alpha):
    want, _ = spi.quad(lambda y: y / (1 + y**alpha), a, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)
    assert float(an.tail_integral(a, alpha)) == pytest.approx(want, rel=1e-8, abs=1e-12)


def test_tail_integral_alpha4_closed_form():
    # int_a^inf y/(1+y^4) dy = (pi/2 - atan(a^2)) / 2
    a = np.array([0.0, 0.3, 1.0, 4.0])
    np.testing.assert_allclose(an.tail_integral(a, 4.0), (np.pi / 2 - np.arctan(a * a)) / 2, rtol=1e-13)


# ---------------------------------------------------------------- R_z expectation

def test_rz_expectation_at_zero_s():
    for m in (RAY, DISK):
        assert an.rz_expectation(0.0, 1.3, FULL_INV_A4, m) == 1.0


def test_rz_expectation_no_inversion_collapses():
    p = NetworkParams(0.25, 3.5, 0.0, 0.5)
    s, x = 0.7, 1.9
    assert an.rz_expectation(s, x, p, RAY) == pytest.approx(p.mu / (p.mu + s * x**-3.5), rel=1e-15)


def test_rz_expectation_simpson_oracle():
    assert an.rz_expectation(1.0, 1.0, FULL_INV_A4, RAY) == pytest.approx(SIMPSON_RZ_ORACLE, abs=1e-8)


@pytest.mark.parametrize("x", [0.3, 1.0, 3.0])
def test_rz_expectation_in_unit_interval(x):
    for m in (RAY, DISK):
        v = an.rz_expectation(2.0, x, FULL_INV_A4.replace(pc_factor=0.6), m)
        assert 0.0 < v < 1.0


# ---------------------------------------------------------------- Laplace transform

def test_laplace_at_zero():
    for m in (RAY, DISK):
        assert an.laplace_interference(0.0, 1.0, FULL_INV_A4, m) == 1.0


def test_laplace_uniform_disk_matches_closed_form():
    want = an.laplace_closed_form_a4(1.0, 1.0, 0.25)
    for method in ("closed", "nested"):
        got = an.laplace_interference(1.0, 1.0, FULL_INV_A4, DISK, method=method)
        assert got == pytest.approx(want, rel=1e-6)


@pytest.mark.parametrize("model", [RAY, DISK], ids=["rayleigh", "disk"])
@pytest.mark.parametrize("eps", [0.0, 0.4, 1.0])
def test_laplace_closed_and_nested_agree(model, eps):
    p = NetworkParams(0.25, 3.25, eps, 2.0)
    a = an.laplace_interference(0.8, 0.7, p, model, method="closed")
    b = an.laplace_interference(0.8, 0.7, p, model, method="nested")
    assert a == pytest.approx(b, rel=1e-6)


def test_laplace_non_increasing_in_s():
    s = np.linspace(0.0, 20.0, 21)
    vals = [an.laplace_interference(x, 0.5, FULL_INV_A4, RAY) for x in s]
    assert vals[0] == 1.0
    assert np.all(np.diff(vals) <= 0)


def test_closed_form_small_threshold_limit():
    assert an.laplace_closed_form_a4(1e-14, 1.0, 0.25) == pytest.approx(1.0, abs=1e-6)


def test_closed_form_whole_plane_limit():
    # r -> 0: exponent 2 pi lam E[int_0^inf x s R^4 / (x^4 + s R^4) dx] = pi sqrt(T) / 4
    for T in (0.5, 1.0, 4.0):
        assert an.laplace_closed_form_a4(T, 0.0, 0.25) == pytest.approx(math.exp(-math.pi * math.sqrt(T) / 4), rel=1e-14)
        assert an.laplace_closed_form_a4(T, 1e-6, 0.25) == pytest.approx(math.exp(-math.pi * math.sqrt(T) / 4), rel=1e-6)


# ---------------------------------------------------------------- coverage

def test_coverage_at_zero_threshold():
    assert an.coverage_probability(FULL_INV_A4, 0.0, RAY) == 1.0
    assert an.coverage_probability(FULL_INV_A4, 1e-12, RAY) == pytest.approx(1.0, abs=1e-5)


def test_coverage_rejects_negative_threshold():
    with pytest.raises(ValueError):
        an.coverage_probability(FULL_INV_A4, -1.0, RAY)


@pytest.mark.parametrize("eps", [0.0, 0.5, 1.0])
def test_coverage_scale_invariant_without_noise(eps):
    p = NetworkParams(0.25, 3.5, eps, 1.0)
    q = p.replace(density=1.0)
    for T in (0.3, 2.0):
        a = an.coverage_probability(p, T, an.ServingDistanceModel.rayleigh(0.25))
        b = an.coverage_probability(q, T, an.ServingDistanceModel.rayleigh(1.0))
        assert a == pytest.approx(b, abs=1e-6)


@settings(max_examples=12, deadline=None)
@given(
    st.floats(2.5, 5.0),
    st.floats(0.0, 1.0),
    st.floats(-10.0, 15.0),
    st.floats(0.1, 4.0),
    st.sampled_from(["rayleigh", "uniform-disk"]),
)
def test_coverage_bounded_and_monotone(alpha, eps, t_db, gap_db, kind):
    p = reference_params(eps).replace(pathloss_exponent=alpha)
    m = an.ServingDistanceModel.for_params(kind, p)
    lo = an.coverage_probability(p, 10 ** (t_db / 10), m, FAST)
    hi = an.coverage_probability(p, 10 ** ((t_db + gap_db) / 10), m, FAST)
    assert 0.0 <= hi <= lo <= 1.0


def test_full_inversion_baseline_free():
    p = NetworkParams(0.25, 4.0, 1.0, 1 / 7)
    for T in (0.1, 1.0, 10.0):
        a = an.coverage_probability(p, T, RAY)
        b = an.coverage_full_pc_no_noise(p, T, RAY)
        assert a == pytest.approx(b, abs=1e-6)


def test_full_inversion_helper_rejects_noise():
    with pytest.raises(ValueError):
        an.coverage_full_pc_no_noise(FULL_INV_A4.replace(noise_power=1e-3), 1.0, RAY)


def test_coverage_curve_object():
    c = an.coverage_curve(FULL_INV_A4, [0.5, 1.0, 2.0], RAY)
    assert c.thresholds_db == pytest.approx(10 * np.log10([0.5, 1.0, 2.0]))
    assert list(c.probabilities) == sorted(c.probabilities, reverse=True)
    with pytest.raises(ValueError):
        an.CoverageCurve((SinrThreshold(2.0), SinrThreshold(1.0)), (0.1, 0.2), FULL_INV_A4, RAY)


@pytest.mark.slow
def test_coverage_matches_iid_simulation():
    cfg = mc.SimConfig.default(0.25, n_trials=100_000, seed=11, mode="iid-rayleigh")
    emp = mc.simulate_coverage(FULL_INV_A4, cfg, [1.0])
    want = an.coverage_probability(FULL_INV_A4, 1.0, RAY)
    assert abs(emp.survival[0] - want) <= 3 * emp.stderr[0]


def test_disk_coverage_matches_hex_grid():
    cfg = mc.SimConfig.default(0.25, n_trials=20_000, seed=5, mode="hex-grid")
    emp = mc.simulate_hex_grid(FULL_INV_A4, cfg, [1.0])
    assert abs(emp.survival[0] - an.coverage_probability(FULL_INV_A4, 1.0, DISK)) <= 0.04


# ---------------------------------------------------------------- rate

def test_rate_matches_iid_simulation():
    p = NetworkParams(0.24, 4.0, 0.5, 1.0)
    cfg = mc.SimConfig.default(0.24, n_trials=40_000, seed=3, mode="iid-rayleigh")
    sinr, _ = mc.simulate_uplink_samples(p, cfg)
    x = np.log1p(sinr)
    se = x.std(ddof=1) / math.sqrt(len(x))
    assert abs(x.mean() - an.average_rate(p, an.ServingDistanceModel.rayleigh(0.24))) <= 3 * se


@pytest.mark.parametrize(
    "params",
    [NetworkParams(0.24, 4.0, 0.0, 1.0), reference_params(1.0)],
    ids=["no-inversion", "full-inversion-noisy"],
)
def test_rate_identity(params):
    model = an.ServingDistanceModel.rayleigh(params.density)
    rate = an.average_rate(params, model)
    assert an.rate_coverage_identity_check(params, model) <= 1e-3 * rate


def test_rate_increases_with_alpha():
    for eps in (0.0, 1.0):
        rates = [an.average_rate(NetworkParams(0.24, a, eps, 0.2), an.ServingDistanceModel.rayleigh(0.24), FAST)
                 for a in (2.5, 3.25, 4.0)]
        assert rates == sorted(rates)


# ---------------------------------------------------------------- downlink

def test_downlink_rho_alpha4():
    assert an.downlink_rho(1.0, 4.0) == pytest.approx(math.pi / 4, rel=1e-9)


def test_downlink_no_noise_reduces():
    for T in (0.3, 1.0, 5.0):
        want = 1 / (1 + an.downlink_rho(T, 3.5))
        assert an.downlink_coverage(T, 0.24, 3.5, 1.0, 0.0) == pytest.approx(want, rel=1e-7)
    assert an.downlink_coverage(1.0, 0.25, 4.0, 1.0, 0.0) == pytest.approx(0.56010, abs=1e-3)


def test_downlink_limits():
    assert an.downlink_coverage(0.0, 0.24, 4.0, 1.0, 0.0) == 1.0
    assert an.downlink_coverage(1e-9, 0.24, 4.0, 1.0, 0.0) == pytest.approx(1.0, abs=1e-4)
    assert an.downlink_coverage(1.0, 0.24, 4.0, 1.0, 1e-2) < an.downlink_coverage(1.0, 0.24, 4.0, 1.0, 0.0)


# ---------------------------------------------------------------- epsilon search

def test_eps_singleton_grid():
    prof = an.optimal_epsilon(1.0, reference_params(), RAY, [0.4])
    assert prof.best == 0.4


def test_eps_search_reports_profile():
    prof = an.optimal_epsilon(1.0, reference_params(), an.ServingDistanceModel.rayleigh(0.24), [0.0, 0.5, 1.0], FAST)
    assert prof.eps == (0.0, 0.5, 1.0)
    assert prof.coverage[prof.eps.index(prof.best)] == max(prof.coverage)


def test_eps_grid_validation():
    with pytest.raises(ValueError):
        an.optimal_epsilon(1.0, reference_params(), RAY, [])
    with pytest.raises(ValueError):
        an.optimal_epsilon(1.0, reference_params(), RAY, [1.5])
    g = an.default_eps_grid(0.05)
    assert len(g) == 21 and g[0] == 0.0 and g[-1] == 1.0
