"""A small replication study of the heteroscedastic Frank scenario.

Relative bias and ten times the empirical variance of the quantile
estimates are reported per (p, x) cell. Serious studies use 500 replications.
"""

from dataclasses import replace

from dqreg import get_scenario, run_scenario
from dqreg.simulate import format_table

sc = get_scenario("BasisHet")
sc = replace(sc, fit=replace(sc.fit, max_degree=1, n_starts=2, grid_starts=1))
print(format_table(run_scenario(sc, reps=5, seed=1)))
