"""Conditional quantiles from a fit, compared with the generator truth."""

import numpy as np

from dqreg import FitConfig, QuantileRequest, fit, generate_dataset, get_scenario, predict_quantiles
from dqreg.simulate import true_quantiles

sc = get_scenario("BasisHet")
res = fit(generate_dataset(sc, seed=5), FitConfig(max_degree=2, n_starts=4, grid_starts=2))
req = QuantileRequest(levels=(0.25, 0.5, 0.75), points=((1.0,), (2.0,), (3.0,)))
est = predict_quantiles(res, req)
print("estimated\n", np.round(est, 3))
print("truth\n", np.round(true_quantiles(sc), 3))
