"""Post-fit quantities: conditional quantiles, bootstrap standard errors,
likelihood-ratio tests and tail diagnostics of the copula h-functions."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .copula import CopulaSpec, log_h
from .fitter import FitConfig, FitError, FitResult, fit
from .laguerre_eal import eal_quantile
from .likelihood import Dataset

__all__ = [
    "QuantileRequest",
    "predict_quantile",
    "predict_quantiles",
    "BootstrapResult",
    "bootstrap_se",
    "LrtResult",
    "lrt",
    "lrt_from_aic",
    "aic_table",
    "Diagnostic",
    "h_limit_diagnostic",
]

log = logging.getLogger(__name__)

MAX_FAILURE_RATE = 0.2
VANISH_LEVEL = 1e-3


@dataclass(frozen=True)
class QuantileRequest:
    """Quantile levels and covariate points (rows without or with the intercept)."""

    levels: tuple = (0.25, 0.5, 0.75)
    points: tuple = ((1.0,), (2.0,), (3.0,))

    def __post_init__(self):
        levels = tuple(float(p) for p in self.levels)
        if not all(0.0 < p < 1.0 for p in levels):
            raise ValueError("quantile levels must lie in (0, 1)")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "points", tuple(tuple(float(v) for v in np.atleast_1d(pt)) for pt in self.points))


def _row(x, dim: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size == dim - 1:
        return np.r_[1.0, x]
    if x.size != dim:
        raise ValueError(f"covariate point must have {dim - 1} or {dim} entries, got {x.size}")
    return x


def predict_quantile(fit_result: FitResult, p: float, x) -> float:
    """Conditional ``p``-quantile ``x'beta + sigma(x) Q_eps(p)``.

    ``x`` may include the leading intercept or omit it.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")
    tp = fit_result.t_margin
    row = _row(x, tp.beta.size)
    return float(row @ tp.beta + np.exp(row @ tp.gamma) * eal_quantile(tp.eal, p))


def predict_quantiles(fit_result: FitResult, request: QuantileRequest) -> np.ndarray:
    """Quantile grid of shape ``(len(levels), len(points))``."""
    return np.array([[predict_quantile(fit_result, p, x) for x in request.points] for p in request.levels])


def _param_vector(res: FitResult, lambda_free: bool) -> tuple[list[str], np.ndarray]:
    cop, tp, cp = res.models
    names, vals = [], []
    if not cop.is_independent:
        names.append("theta")
        vals.append(cop.theta)
    for i, b in enumerate(tp.beta):
        names.append(f"beta{i}")
        vals.append(b)
    if lambda_free:
        names.append("lambda")
        vals.append(tp.lam)
    ng = tp.gamma.size if res.layout.hetero else 1
    for i in range(ng):
        names.append(f"gamma{i}")
        vals.append(tp.gamma[i])
    for i, a in enumerate(cp.alpha):
        names.append(f"alpha{i}")
        vals.append(a)
    names.append("sigma_c")
    vals.append(cp.sigma_c)
    return names, np.array(vals, dtype=float)


@dataclass
class BootstrapResult:
    """Bootstrap standard errors; Laguerre weights are excluded since their number varies."""

    names: list
    param_se: np.ndarray
    request: QuantileRequest
    quantile_se: np.ndarray
    n_ok: int
    dropped: int
    replicates: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "param_se": dict(zip(self.names, map(float, self.param_se))),
            "quantile_se": [
                {"p": p, "x": list(x), "se": float(self.quantile_se[i, j])}
                for i, p in enumerate(self.request.levels)
                for j, x in enumerate(self.request.points)
            ],
            "replications": self.n_ok,
            "dropped": self.dropped,
        }


def _default_sampler(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, n, n)


def _boot_rep(args):
    data, config, request, seq, sampler = args
    rng = np.random.default_rng(seq)
    idx = sampler(rng, data.n)
    try:
        # the fit keeps the configured seed, so identical resamples give identical fits
        res = fit(data.subset(idx), config)
    except (FitError, ValueError, FloatingPointError) as exc:
        log.warning("bootstrap replication dropped: %s", exc)
        return None
    names, vals = _param_vector(res, config.lambda_fixed is None)
    return names, vals, predict_quantiles(res, request)


def _sorted_sd(a: np.ndarray) -> np.ndarray:
    # sorting first makes the result independent of replication order
    return np.sort(a, axis=0).std(axis=0, ddof=1)


def bootstrap_se(
    data: Dataset,
    config: FitConfig,
    B: int,
    seed: int = 0,
    request: QuantileRequest = QuantileRequest(),
    sampler=None,
    n_jobs: int = 1,
) -> BootstrapResult:
    """Nonparametric bootstrap with degree re-selection in every replication.

    Parameters
    ----------
    sampler : callable, optional
        ``sampler(rng, n)`` returning row indices; defaults to sampling with
        replacement.

    Raises
    ------
    FitError
        When more than 20% of the replications fail.
    """
    if B < 2:
        raise ValueError("B must be at least 2")
    sampler = _default_sampler if sampler is None else sampler
    jobs = [(data, config, request, s, sampler) for s in np.random.SeedSequence(seed).spawn(B)]
    if n_jobs > 1:
        with ProcessPoolExecutor(n_jobs) as pool:
            out = list(pool.map(_boot_rep, jobs))
    else:
        out = [_boot_rep(j) for j in jobs]
    ok = [o for o in out if o is not None]
    dropped = B - len(ok)
    if dropped > MAX_FAILURE_RATE * B or len(ok) < 2:
        raise FitError(f"{dropped} of {B} bootstrap replications failed")
    names = ok[0][0]
    params = np.stack([o[1] for o in ok])
    quants = np.stack([o[2] for o in ok])
    return BootstrapResult(
        names,
        _sorted_sd(params),
        request,
        _sorted_sd(quants),
        len(ok),
        dropped,
        {"params": params, "quantiles": quants},
    )


@dataclass(frozen=True)
class LrtResult:
    statistic: float
    critical: float
    reject: bool
    df: int


def lrt_from_aic(aic_nested: float, aic_full: float, dq: int, df: int | None = None, level: float = 0.95) -> LrtResult:
    """Likelihood-ratio test recovered from AIC values.

    With ``AIC = 2q - 2 loglik`` the statistic ``2 (loglik_full -
    loglik_nested)`` equals ``(AIC_nested - AIC_full) + 2 dq`` where ``dq =
    q_full - q_nested``. ``df`` sets the chi-square reference and defaults to
    ``dq``.
    """
    df = dq if df is None else df
    if df <= 0:
        raise ValueError("df must be positive")
    stat = float(aic_nested - aic_full + 2.0 * dq)
    crit = float(stats.chi2.ppf(level, df))
    return LrtResult(stat, crit, stat > crit, int(df))


def lrt(fit_nested: FitResult, fit_full: FitResult, df: int | None = None, level: float = 0.95) -> LrtResult:
    """Likelihood-ratio test of a nested fit against a fuller one.

    ``df`` defaults to the difference in free parameters.
    """
    return lrt_from_aic(fit_nested.aic, fit_full.aic, fit_full.q - fit_nested.q, df, level)


def aic_table(fits: dict) -> list[dict]:
    """Rows ``{name, loglik, q, aic}`` sorted by AIC."""
    rows = [{"name": k, "loglik": f.loglik, "q": f.q, "aic": f.aic} for k, f in fits.items()]
    return sorted(rows, key=lambda r: (r["aic"], r["name"]))


@dataclass
class Diagnostic:
    """h-function values along a path towards a support limit."""

    direction: str
    y: np.ndarray
    h_t_given_c: np.ndarray
    h_c_given_t: np.ndarray

    @staticmethod
    def _verdict(seq) -> str:
        seq = np.asarray(seq)
        ok = seq[-1] < VANISH_LEVEL and np.all(np.diff(seq) <= 1e-15)
        return "vanishing" if ok else "non-vanishing"

    @property
    def verdicts(self) -> dict:
        return {"h_t_given_c": self._verdict(self.h_t_given_c), "h_c_given_t": self._verdict(self.h_c_given_t)}

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "y": self.y.tolist(),
            "h_t_given_c": self.h_t_given_c.tolist(),
            "h_c_given_t": self.h_c_given_t.tolist(),
            "verdicts": self.verdicts,
        }


def h_limit_diagnostic(c: CopulaSpec, tp, cp, x, direction: str = "lower", n_points: int = 20) -> Diagnostic:
    """Evaluate ``h_{T|C}`` and ``h_{C|T}`` along ``y`` tending to a support limit.

    ``lower`` marches ``y = mu_T - k sigma_T`` for ``k`` from 5 to 40. ``upper``
    approaches the censoring upper endpoint (or ``mu_T + k sigma_T`` when it is
    infinite) at geometrically shrinking distances. All evaluations are on
    the log scale so the tails do not underflow.
    """
    x = np.asarray(x, dtype=float)
    k = np.linspace(5.0, 40.0, n_points)
    mu, sig = float(tp.location(x)), float(tp.scale(x))
    if direction == "lower":
        y = mu - k * sig
        lu = np.asarray(tp.logcdf(y, x), dtype=float)
        lv = np.asarray(cp.logcdf(y, x), dtype=float)
    elif direction == "upper":
        top = float(cp.upper(x))
        if np.isfinite(top):
            y = top - float(cp.scale(x)) * 2.0 ** (-k)
        else:
            y = mu + k * sig
        lu = np.asarray(tp.logcdf(y, x), dtype=float)
        # 1 - F_C is exact here because y stays a known distance below the endpoint
        lv = np.log1p(-(1.0 - np.asarray(cp.cdf(y, x), dtype=float)))
    else:
        raise ValueError("direction must be 'lower' or 'upper'")
    h_tc = np.exp(log_h(c, lv, lu))
    h_ct = np.exp(log_h(c, lu, lv))
    return Diagnostic(direction, y, np.asarray(h_tc, dtype=float), np.asarray(h_ct, dtype=float))
