import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import laguerre as npl
from scipy import integrate, special

from dqreg.laguerre_eal import (
    EalParams,
    al_quantile,
    continuity_residual,
    eal_cdf,
    eal_logcdf,
    eal_pdf,
    eal_quantile,
    laguerre_coefficients,
    laguerre_eval,
)

from conftest import random_eal


@pytest.mark.parametrize("k", [0, 1, 2, 5, 9])
def test_coefficients_match_numpy_laguerre(k):
    e = np.zeros(k + 1)
    e[k] = 1.0
    np.testing.assert_allclose(laguerre_coefficients(k), npl.lag2poly(e), rtol=1e-12, atol=1e-14)


def test_eval_matches_scipy():
    x = np.linspace(0, 12, 37)
    for k in range(7):
        np.testing.assert_allclose(laguerre_eval(k, x), special.eval_laguerre(k, x), rtol=1e-10, atol=1e-10)


def test_orthonormal_under_exponential_weight():
    for j in range(4):
        for k in range(4):
            val, _ = integrate.quad(lambda u: laguerre_eval(j, u) * laguerre_eval(k, u) * np.exp(-u), 0, np.inf)
            assert val == pytest.approx(float(j == k), abs=1e-9)


def test_normalisation_random(rng):
    for _ in range(25):
        p = random_eal(rng)
        lo, _ = integrate.quad(lambda y: eal_pdf(p, y), -np.inf, 0, epsabs=1e-12, limit=200)
        hi, _ = integrate.quad(lambda y: eal_pdf(p, y), 0, np.inf, epsabs=1e-12, limit=200)
        assert lo == pytest.approx(p.lam, abs=1e-9)
        assert lo + hi == pytest.approx(1.0, abs=1e-9)


def test_cdf_at_zero_is_lambda(rng):
    for _ in range(20):
        p = random_eal(rng)
        assert abs(eal_cdf(p, 0.0) - p.lam) < 1e-14


def test_cdf_against_quadrature(rng):
    p = EalParams.from_free(0.3, [0.4, -0.2], [1.1])
    for y in (-6.0, -1.3, -0.01, 0.4, 2.0, 9.0):
        if y <= 0:
            ref, _ = integrate.quad(lambda t: eal_pdf(p, t), -np.inf, y, epsabs=1e-13)
        else:
            ref = p.lam + integrate.quad(lambda t: eal_pdf(p, t), 0, y, epsabs=1e-13)[0]
        assert eal_cdf(p, y) == pytest.approx(ref, abs=1e-10)


def test_plain_al_reduces_to_closed_form():
    p = EalParams(0.5)
    y = np.array([-3.0, -0.5, 0.7, 2.5])
    expected = np.where(y <= 0, 0.5 * np.exp(0.5 * y), 1 - 0.5 * np.exp(-0.5 * y))
    np.testing.assert_allclose(eal_cdf(p, y), expected, rtol=1e-14)
    assert al_quantile(0.5, 0.25) == pytest.approx(2 * np.log(0.5), rel=1e-14)


def test_logcdf_deep_tail_finite():
    p = EalParams.from_free(0.4, [0.3], [])
    y = np.array([-10.0, -200.0, -5000.0])
    lc = eal_logcdf(p, y)
    assert np.all(np.isfinite(lc))
    np.testing.assert_allclose(lc[0], np.log(eal_cdf(p, -10.0)), rtol=1e-12)


def test_quantile_roundtrip(rng):
    probs = np.array([1e-6, 0.01, 0.2, 0.5, 0.77, 0.999, 1 - 1e-9])
    for _ in range(20):
        p = random_eal(rng)
        q = eal_quantile(p, probs)
        np.testing.assert_allclose(eal_cdf(p, q), probs, atol=1e-10, rtol=1e-10)


def test_quantile_exact_at_lambda():
    p = EalParams.from_free(0.37, [0.5, 0.1], [-0.3])
    assert eal_quantile(p, 0.37) == 0.0


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, np.nan])
def test_quantile_rejects_bad_levels(bad):
    with pytest.raises(ValueError):
        eal_quantile(EalParams(0.5), bad)


def test_params_validation():
    with pytest.raises(ValueError):
        EalParams(1.0)
    with pytest.raises(ValueError):
        EalParams(0.5, (2.0, 0.1))


def test_continuity_residual_and_density_jump():
    p = EalParams.from_free(0.6, [0.5], [0.5])
    assert continuity_residual(p.phi_neg, p.phi_pos) == pytest.approx(0.0, abs=1e-15)
    assert eal_pdf(p, -1e-12) == pytest.approx(eal_pdf(p, 1e-12), rel=1e-9)
    q = EalParams.from_free(0.6, [0.5], [])
    assert continuity_residual(q.phi_neg, q.phi_pos) != 0.0


@settings(max_examples=40, deadline=None)
@given(
    lam=st.floats(0.05, 0.95),
    phi=st.lists(st.floats(-2, 2), min_size=0, max_size=3),
    a=st.floats(0.001, 0.998),
    b=st.floats(0.001, 0.998),
)
def test_quantile_strictly_increasing(lam, phi, a, b):
    p = EalParams.from_free(lam, phi, phi[::-1])
    lo, hi = sorted((a, b))
    qlo, qhi = eal_quantile(p, lo), eal_quantile(p, hi)
    # levels closer than float resolution may share a quantile
    assert qlo <= qhi
    if hi - lo > 1e-9:
        assert qlo < qhi
