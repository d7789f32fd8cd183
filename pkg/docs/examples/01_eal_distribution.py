"""The enriched asymmetric Laplace error distribution.

A Laguerre series tilts each side of the plain asymmetric Laplace density
while keeping F(0) = lambda, so the lambda-quantile of the error stays at 0.
"""

import numpy as np

from dqreg import EalParams, eal_cdf, eal_pdf, eal_quantile

plain = EalParams.from_free(0.5, [], [])
tilted = EalParams.from_free(0.5, [0.3], [-0.2])

y = np.linspace(-4, 4, 9)
print("y        plain    tilted")
for yi, a, b in zip(y, eal_pdf(plain, y), eal_pdf(tilted, y)):
    print(f"{yi:5.1f}  {a:8.4f} {b:8.4f}")

# the lambda-quantile is pinned at zero whatever the series weights
print("F(0):", eal_cdf(tilted, 0.0), " Q(lambda):", eal_quantile(tilted, 0.5))

p = np.array([0.05, 0.25, 0.75, 0.95])
q = eal_quantile(tilted, p)
print("quantiles", np.round(q, 4), "roundtrip error", np.max(np.abs(eal_cdf(tilted, q) - p)))
