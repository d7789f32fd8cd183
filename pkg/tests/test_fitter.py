import json

import numpy as np
import pytest

from dqreg.fitter import (
    FitConfig,
    FitResult,
    basis_step,
    check_loss,
    final_step,
    fit,
    initial_values,
    intermediate_step,
)
from dqreg.inference import predict_quantile
from dqreg.laguerre_eal import EalParams, eal_quantile
from dqreg.likelihood import Dataset, PackedParams, loglik
from dqreg.simulate import generate_dataset, get_scenario, true_quantiles

QUICK = dict(n_starts=2, grid_starts=1, max_degree=1)


@pytest.fixture(scope="module")
def scen_data():
    return generate_dataset(get_scenario("BasisHet"), 11)


@pytest.fixture(scope="module")
def quick_fit(scen_data):
    return fit(scen_data, FitConfig(**QUICK, seed=3))


def test_check_loss():
    z = np.array([-2.0, 0.0, 3.0])
    np.testing.assert_allclose(check_loss(z, 0.3), [1.4, 0.0, 0.9])


def test_config_invariants():
    with pytest.raises(ValueError):
        FitConfig(hetero=False)
    with pytest.raises(ValueError):
        FitConfig(lambda_fixed=1.2)
    assert FitConfig("indep").family == "independence"


def test_initial_values_near_ols_on_lightly_censored_data():
    rng = np.random.default_rng(5)
    n = 400
    xt = rng.uniform(0, 4, n)
    y = 1.0 + 0.8 * xt + rng.normal(0, 0.3, n)
    delta = np.ones(n, dtype=int)
    delta[:5] = 0
    data = Dataset.from_covariates(y, delta, xt)
    starts = initial_values(data, FitConfig(lambda_fixed=0.5, n_starts=4))
    assert len(starts) == 4
    beta = starts[0].unpack()[1].beta
    np.testing.assert_allclose(beta, [1.0, 0.8], atol=0.3)


def test_initial_values_deterministic_and_sized(scen_data):
    cfg = FitConfig(n_starts=7, seed=9)
    a = initial_values(scen_data, cfg)
    b = initial_values(scen_data, cfg)
    assert len(a) == 7
    for s, t in zip(a, b):
        np.testing.assert_array_equal(s.values, t.values)


def test_initial_values_need_both_kinds_of_rows():
    data = Dataset.from_covariates([1.0, 2.0, 3.0], [1, 1, 1], [0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        initial_values(data, FitConfig())


def test_basis_step_beats_every_start(scen_data):
    cfg = FitConfig(n_starts=3, seed=1)
    starts = initial_values(scen_data, cfg)
    best = basis_step(scen_data, cfg, starts)
    assert loglik(best, scen_data) >= max(loglik(s, scen_data) for s in starts)


def _al_data(seed, n=500):
    # plain AL survival times, so the basis model is correctly specified
    rng = np.random.default_rng(seed)
    xt = rng.uniform(0, 4, n)
    eps = eal_quantile(EalParams(0.5), rng.uniform(size=n))
    t = 2.0 + 0.5 * xt + np.exp(-1.5) * eps
    c = 2.6 + 0.5 * xt + rng.normal(0, 0.6, n)
    return Dataset.from_covariates(np.minimum(t, c), (t <= c).astype(int), xt)


def test_basis_step_recovers_al_regression():
    # sampling sd of beta-hat from 40 simulated fits: (0.056, 0.019)
    sd = np.array([0.056, 0.019])
    cfg = FitConfig("independence", n_starts=3)
    est = []
    for seed in range(5):
        data = _al_data(seed)
        est.append(basis_step(data, cfg, initial_values(data, cfg)).unpack()[1].beta)
    err = np.abs(np.mean(est, axis=0) - [2.0, 0.5])
    assert np.all(err < 2 * sd / np.sqrt(5))


def test_grid_bound_zero_keeps_basis_degrees(scen_data):
    cfg = FitConfig(n_starts=2, grid_starts=1, max_degree=0)
    basis = basis_step(scen_data, cfg, initial_values(scen_data, cfg))
    m_neg, m_pos, t = intermediate_step(scen_data, cfg, basis)
    assert (m_neg, m_pos) == (0, 0)
    full = np.array(basis.values)
    full[basis.layout.t_indices] = t
    assert loglik(PackedParams(basis.layout, full), scen_data) >= loglik(basis, scen_data) - 1e-9


def test_pipeline_invariants(quick_fit):
    tr = quick_fit.traces
    grid = {(c["m_neg"], c["m_pos"]): c["aic"] for c in tr["intermediate"]["grid"]}
    assert grid[tuple(quick_fit.degrees)] <= grid[(0, 0)]
    assert tr["final"]["loglik"] >= tr["intermediate"]["loglik"] - 1e-6
    assert tr["intermediate"]["loglik"] >= tr["basis"]["loglik"] - 1e-6
    assert abs(quick_fit.continuity_residual) < 1e-6
    assert quick_fit.aic == pytest.approx(2 * quick_fit.q - 2 * quick_fit.loglik)
    assert quick_fit.q == quick_fit.layout.size


def test_final_step_warm_start_monotone(scen_data, quick_fit):
    cfg = FitConfig(**QUICK, seed=4)
    res = final_step(scen_data, cfg, quick_fit.degrees, quick_fit.packed)
    assert res.loglik >= quick_fit.loglik - 1e-6
    assert abs(res.continuity_residual) < 1e-6


def test_fit_is_deterministic(scen_data, quick_fit):
    again = fit(scen_data, FitConfig(**QUICK, seed=3))
    assert json.dumps(again.to_dict()) == json.dumps(quick_fit.to_dict())


def test_result_json_roundtrip(quick_fit):
    back = FitResult.from_dict(json.loads(json.dumps(quick_fit.to_dict())))
    np.testing.assert_array_equal(back.values, quick_fit.values)
    assert back.layout == quick_fit.layout
    assert back.aic == quick_fit.aic


def test_scenario_fit_recovers_median(quick_fit):
    truth = true_quantiles(get_scenario("BasisHet"), levels=(0.5,))[0]
    est = [predict_quantile(quick_fit, 0.5, [x]) for x in (1.0, 2.0, 3.0)]
    assert np.all(np.abs(np.array(est) / truth - 1) <= 0.03)


def test_independence_homoscedastic_smoke():
    sc = get_scenario("FitIndepHom")
    data = generate_dataset(sc, 2, n=300)
    res = fit(data, FitConfig("independence", hetero=False, lambda_fixed=0.5, **QUICK))
    assert np.isfinite(res.aic) and res.converged
    assert res.layout.size == 2 + 1 + res.degrees[0] + res.degrees[1] + 2 + 1
