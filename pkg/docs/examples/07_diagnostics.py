"""Whether the copula h-functions vanish at the support limits.

When h_T|C does not vanish at the lower limit of the survival times, some
mass of T is never observed and identification can fail.
"""

import numpy as np

from dqreg import CMarginParams, CopulaSpec, NormalTMargin, h_limit_diagnostic
from dqreg.margins import UniformCMargin

x = np.array([1.0, 2.0])
t = NormalTMargin([2.8, 0.6], [-1.5, 0.45])
cases = {
    "frank": (CopulaSpec("frank", 5.74), t, CMarginParams([3.15, 0.45], 0.8), "lower"),
    "clayton": (CopulaSpec("clayton", 2.0), NormalTMargin([2.8, 0.6], [np.log(0.2), 0.0]), CMarginParams([3.15, 0.45], 0.8), "lower"),
    "gumbel": (CopulaSpec("gumbel", 2.0), t, UniformCMargin([3.15, 0.45], 2.0), "upper"),
}
for name, (c, tp, cp, direction) in cases.items():
    d = h_limit_diagnostic(c, tp, cp, x, direction)
    print(f"{name:8s} {direction:5s} {d.verdicts}")
