import numpy as np
import pytest

from dqreg.copula import CopulaSpec, copula_cdf
from dqreg.laguerre_eal import EalParams, eal_cdf
from dqreg.likelihood import (
    PENALTY,
    Dataset,
    PackedParams,
    ParamLayout,
    _contributions,
    loglik,
    loglik_contribution,
    loglik_contributions,
    loglik_t_only,
)
from dqreg.margins import CMarginParams, TMarginParams

FAMILIES = [("frank", 4.0), ("frank", -3.0), ("frankpos", 2.0), ("clayton", 1.5), ("gumbel", 1.8), ("independence", 0.0)]


def _data(rng, n=60):
    xt = rng.uniform(0, 4, n)
    return Dataset.from_covariates(3 + 0.5 * xt + rng.normal(0, 0.5, n), rng.integers(0, 2, n), xt)


def _models(family, theta):
    cop = CopulaSpec(family, theta)
    tp = TMarginParams([2.9, 0.55], [-1.0, 0.2], EalParams.from_free(0.45, [0.3, -0.1], [0.2]))
    cp = CMarginParams([3.2, 0.4], 0.7)
    return cop, tp, cp


def _oracle_row(cop, tp, cp, y, x, d):
    # brute force: numerical derivatives of the CDFs, no log-domain h-function
    e = 1e-6
    z = (y - x @ tp.beta) / np.exp(x @ tp.gamma)
    u = float(eal_cdf(tp.eal, z))
    v = float(cp.cdf(y, x))
    if d == 1:
        f = (tp.cdf(y + e, x) - tp.cdf(y - e, x)) / (2 * e)
        h = (copula_cdf(cop, u + e, v) - copula_cdf(cop, u - e, v)) / (2 * e)
    else:
        f = (cp.cdf(y + e, x) - cp.cdf(y - e, x)) / (2 * e)
        h = (copula_cdf(cop, u, v + e) - copula_cdf(cop, u, v - e)) / (2 * e)
    return np.log(f) + np.log(1 - h)


@pytest.mark.parametrize("family,theta", FAMILIES)
def test_contributions_match_bruteforce(rng, family, theta):
    cop, tp, cp = _models(family, theta)
    data = _data(rng, 25)
    lay = ParamLayout(family, 2, 2, 1)
    pi = PackedParams.from_models(lay, cop, tp, cp)
    got = loglik_contributions(pi, data)
    ref = [_oracle_row(cop, tp, cp, data.y[i], data.x[i], data.delta[i]) for i in range(data.n)]
    np.testing.assert_allclose(got, ref, atol=2e-5)


@pytest.mark.parametrize("family,theta", FAMILIES)
def test_compiled_kernel_matches_numpy(rng, family, theta):
    cop, tp, cp = _models(family, theta)
    data = _data(rng)
    lay = ParamLayout(family, 2, 2, 1)
    pi = PackedParams.from_models(lay, cop, tp, cp)
    ref = _contributions(*pi.unpack(), data.y, data.x, data.delta)
    np.testing.assert_allclose(loglik_contributions(pi, data), ref, rtol=1e-9, atol=1e-9)


def test_single_row_and_sum(rng):
    cop, tp, cp = _models("frank", 4.0)
    data = _data(rng, 10)
    pi = PackedParams.from_models(ParamLayout("frank", 2, 2, 1), cop, tp, cp)
    total = sum(loglik_contribution(pi, data.y[i], data.x[i], data.delta[i]) for i in range(10))
    assert loglik(pi, data) == pytest.approx(total, rel=1e-12)


def test_extreme_rows_are_floored_not_nan():
    cop, tp, cp = _models("clayton", 3.0)
    data = Dataset.from_covariates([-1e4, 1e4, 50.0], [1, 0, 1], [1.0, 1.0, 2.0])
    pi = PackedParams.from_models(ParamLayout("clayton", 2, 2, 1), cop, tp, cp)
    c = loglik_contributions(pi, data)
    assert np.all(np.isfinite(c)) and np.all(c >= PENALTY)


def test_layout_sizes():
    assert ParamLayout("frank", 2).size == 1 + 2 + 1 + 2 + 2 + 1
    assert ParamLayout("independence", 2, 1, 3).size == 2 + 1 + 2 + 1 + 3 + 2 + 1
    # fixed lambda, homoscedastic: lambda and the gamma slope drop out
    assert ParamLayout("clayton", 2, hetero=False, lambda_fixed=0.5).size == 1 + 2 + 1 + 2 + 1
    lay = ParamLayout("gumbel", 3, 2, 2)
    assert len(lay.names) == lay.size


@pytest.mark.parametrize("family,theta", FAMILIES)
def test_pack_unpack_roundtrip(family, theta):
    cop, tp, cp = _models(family, theta)
    lay = ParamLayout(family, 2, 2, 1)
    c2, t2, p2 = lay.unpack(lay.pack(cop, tp, cp))
    assert c2.theta == pytest.approx(cop.theta, rel=1e-12, abs=1e-12)
    np.testing.assert_allclose(t2.beta, tp.beta)
    assert t2.lam == pytest.approx(tp.lam)
    assert t2.eal.phi_neg == pytest.approx(tp.eal.phi_neg)
    assert p2.sigma_c == pytest.approx(cp.sigma_c)


def test_convert_zero_fills_new_weights():
    cop, tp, cp = _models("frank", 4.0)
    small = ParamLayout("frank", 2, 0, 0)
    tp0 = TMarginParams(tp.beta, tp.gamma, EalParams(0.45))
    v = small.pack(cop, tp0, cp)
    big = small.with_degrees(2, 3)
    w = big.convert(v, small)
    _, t2, _ = big.unpack(w)
    assert t2.eal.phi_neg == (1.0, 0.0, 0.0)
    assert t2.eal.phi_pos == (1.0, 0.0, 0.0, 0.0)
    assert big.continuity(w) == 0.0


def test_t_only_splices_survival_coordinates(rng):
    cop, tp, cp = _models("frank", 4.0)
    data = _data(rng)
    lay = ParamLayout("frank", 2, 2, 1)
    pi = PackedParams.from_models(lay, cop, tp, cp)
    t = pi.values[lay.t_indices]
    assert loglik_t_only(pi, t, data) == pytest.approx(loglik(pi, data))
    assert loglik_t_only(pi, t + 0.1, data) != pytest.approx(loglik(pi, data))


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset([1.0, 2.0], [0, 2], np.ones((2, 1)))
    with pytest.raises(ValueError):
        Dataset([1.0, np.nan], [0, 1], np.ones((2, 1)))
    with pytest.raises(ValueError):
        Dataset([1.0], [0, 1], np.ones((2, 1)))
