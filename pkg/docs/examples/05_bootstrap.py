"""Bootstrap standard errors, re-selecting the degrees in every replication.

B is kept small here; use B = 100 or more in practice.
"""

from dqreg import FitConfig, QuantileRequest, bootstrap_se, generate_dataset, get_scenario

data = generate_dataset(get_scenario("BasisHet"), seed=2)
cfg = FitConfig(max_degree=1, n_starts=2, grid_starts=1)
boot = bootstrap_se(data, cfg, B=10, seed=7, request=QuantileRequest(levels=(0.5,), points=((2.0,),)))
for name, se in zip(boot.names, boot.param_se):
    print(f"{name:8s} {se:.4f}")
print("median quantile SE at x = 2:", round(float(boot.quantile_se[0, 0]), 4))
