import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uplink_sg.numerics import (
    QuadratureError,
    evaluation_ledger,
    integrate,
    integrate_batch,
    integrate_batch_semi_infinite,
    integrate_semi_infinite,
)
from uplink_sg.params import QuadratureSpec


def test_polynomial():
    assert integrate(lambda x: x, 0.0, 1.0) == pytest.approx(0.5, rel=1e-14)


def test_rayleigh_pdf_normalised():
    lam = 0.25
    val = integrate_semi_infinite(lambda r: 2 * math.pi * lam * r * math.exp(-math.pi * lam * r * r), 0.0)
    assert val == pytest.approx(1.0, abs=1e-9)


def test_exponential_mass():
    assert integrate_semi_infinite(lambda x: math.exp(-x), 0.0) == pytest.approx(1.0, abs=1e-10)


def test_batch_gk_exact_on_low_degree():
    # K15 integrates degree <= 22 exactly on every panel
    coef = np.array([3.0, -1.0, 0.5, 2.0, 0.0, 1.0])

    def f(x):
        return np.polyval(coef, x)[None, :] * np.array([[1.0], [2.0]])

    got = integrate_batch(f, -1.0, 2.0, min_panels=1)
    anti = np.polyint(coef)
    want = np.polyval(anti, 2.0) - np.polyval(anti, -1.0)
    np.testing.assert_allclose(got, [want, 2 * want], rtol=1e-14)


def test_batch_semi_infinite_family():
    rates = np.array([0.5, 1.0, 4.0])
    got = integrate_batch_semi_infinite(lambda x: np.exp(-rates[:, None] * x), 0.0)
    np.testing.assert_allclose(got, 1 / rates, rtol=1e-7)


def test_batch_resolves_narrow_peak():
    # Lorentzian of width 1e-3 at an off-grid location
    w, c = 1e-3, 0.3137
    got = integrate_batch(lambda x: w / ((x - c) ** 2 + w * w), 0.0, 1.0)
    want = math.atan((1 - c) / w) + math.atan(c / w)
    assert got == pytest.approx(want, rel=1e-7)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(-3.0, 3.0), st.floats(0.1, 4.0))
def test_linearity(k, shift, width):
    def f(x):
        return np.exp(-((x - shift) ** 2) / width)

    a, b = -4.0, 5.0
    lhs = integrate_batch(lambda x: k * f(x) + x, a, b)
    rhs = k * integrate_batch(f, a, b) + (b * b - a * a) / 2
    assert lhs == pytest.approx(rhs, rel=1e-7, abs=1e-9)


def test_budget_exhaustion_raises_with_estimate():
    spec = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-14, max_subdivisions=3)
    with pytest.raises(QuadratureError) as info:
        integrate_batch(lambda x: np.abs(np.sin(50 * x)) ** 0.5, 0.0, 1.0, spec)
    assert info.value.estimate is not None and info.value.error > 0


def test_scalar_budget_exhaustion_raises():
    spec = QuadratureSpec(rel_tol=1e-13, abs_tol=1e-15, max_subdivisions=2)
    with pytest.raises(QuadratureError):
        integrate(lambda x: math.sin(1 / x) if x else 0.0, 0.0, 1.0, spec)


def test_non_finite_integrand_raises():
    with pytest.raises(QuadratureError):
        integrate_batch(lambda x: np.full_like(x, np.nan), 0.0, 1.0)


def test_bad_interval():
    with pytest.raises(ValueError):
        integrate_batch(lambda x: x, 1.0, 1.0)


def test_ledger_counts_by_label():
    def g(x):
        return x * x

    g.__name__ = "square"
    with evaluation_ledger() as counts:
        integrate(g, 0.0, 1.0)
        integrate_batch(g, 0.0, 1.0, min_panels=1)
    assert counts["square"] >= 15 + 21
