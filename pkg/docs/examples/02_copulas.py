"""Copula h-functions, Kendall's tau and conditional sampling."""

import numpy as np
from scipy import stats

from dqreg import CopulaSpec, h_c_given_t, inverse_h, tau_to_theta, theta_to_tau

rng = np.random.default_rng(3)
for family in ("frank", "clayton", "gumbel"):
    theta = tau_to_theta(family, 0.5)
    c = CopulaSpec(family, theta)
    # u is the survival PIT, v = inverse_h(w | u) the censoring PIT
    u, w = rng.uniform(size=(2, 5000))
    v = inverse_h(c, w, u)
    tau_hat = stats.kendalltau(u, v)[0]
    print(f"{family:8s} theta={theta:6.3f}  tau(theta)={theta_to_tau(family, theta):.3f}  sample tau={tau_hat:.3f}")
    # inverse_h undoes the h-function
    print("         max |h(inverse_h(w)) - w| =", np.max(np.abs(h_c_given_t(c, v, u) - w)))
