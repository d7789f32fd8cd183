"""Three-step maximum likelihood fit with multi-start initialisation and AIC degree selection.

1. basis step: all parameters, Laguerre degrees (0, 0), plain Nelder-Mead;
2. intermediate step: survival-margin parameters only, over a grid of degree
   pairs, with NMCob; the pair with the lowest AIC is kept;
3. final step: all parameters at the selected degrees with NMCob.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .copula import CopulaSpec, _canonical, tau_to_theta
from .likelihood import Dataset, PackedParams, ParamLayout, loglik_values
from .margins import CMarginParams, TMarginParams
from .laguerre_eal import EalParams, continuity_residual
from .optimizer import FEASIBILITY_TOL, OptBudget, nelder_mead, nmcob

__all__ = [
    "FitConfig",
    "FitResult",
    "FitError",
    "check_loss",
    "initial_values",
    "basis_step",
    "intermediate_step",
    "final_step",
    "fit",
]

log = logging.getLogger(__name__)

START_TAUS = (-0.4, 0.0, 0.4)


class FitError(RuntimeError):
    """Raised when no start of a fitting step yields a usable likelihood."""


@dataclass(frozen=True)
class FitConfig:
    """Settings of the fitting pipeline.

    ``lambda_fixed=None`` estimates lambda, which requires ``hetero=True``.
    ``grid_starts`` is the number of starts per degree pair in the
    intermediate step (defaults to ``n_starts``).
    """

    family: str = "frank"
    hetero: bool = True
    lambda_fixed: float | None = None
    max_degree: int = 4
    n_starts: int = 10
    grid_starts: int | None = None
    seed: int = 0
    basis_iters: int = 500
    nm_iters: int = 400
    refine_iters: int = 100
    perturb_sd: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "family", _canonical(self.family))
        if not self.hetero and self.lambda_fixed is None:
            raise ValueError("a homoscedastic model needs a fixed lambda")
        if self.lambda_fixed is not None and not 0.0 < float(self.lambda_fixed) < 1.0:
            raise ValueError("lambda_fixed must lie in (0, 1)")
        if self.max_degree < 0 or self.n_starts < 1 or (self.grid_starts is not None and self.grid_starts < 1):
            raise ValueError("max_degree must be >= 0 and start counts >= 1")

    @property
    def starts_per_cell(self) -> int:
        return self.n_starts if self.grid_starts is None else self.grid_starts

    def layout(self, dim: int, m_neg: int = 0, m_pos: int = 0) -> ParamLayout:
        return ParamLayout(self.family, dim, m_neg, m_pos, self.hetero, self.lambda_fixed)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FitResult:
    """Optimum of the full likelihood together with selection metadata."""

    layout: ParamLayout
    values: np.ndarray
    loglik: float
    n: int
    traces: dict = field(default_factory=dict)
    converged: bool = True

    @property
    def q(self) -> int:
        return self.layout.size

    @property
    def aic(self) -> float:
        return 2.0 * self.q - 2.0 * self.loglik

    @property
    def degrees(self) -> tuple[int, int]:
        return self.layout.m_neg, self.layout.m_pos

    @property
    def packed(self) -> PackedParams:
        return PackedParams(self.layout, self.values)

    @property
    def models(self) -> tuple[CopulaSpec, TMarginParams, CMarginParams]:
        return self.layout.unpack(self.values)

    @property
    def copula(self) -> CopulaSpec:
        return self.models[0]

    @property
    def t_margin(self) -> TMarginParams:
        return self.models[1]

    @property
    def c_margin(self) -> CMarginParams:
        return self.models[2]

    @property
    def continuity_residual(self) -> float:
        return self.layout.continuity(self.values)

    def params(self) -> dict:
        """Parameters on their natural scale."""
        cop, tp, cp = self.models
        return {
            "copula": {"family": cop.family, "theta": cop.theta, "tau": cop.tau},
            "beta": tp.beta.tolist(),
            "gamma": tp.gamma.tolist(),
            "lambda": tp.lam,
            "phi_neg": list(tp.eal.phi_neg),
            "phi_pos": list(tp.eal.phi_pos),
            "alpha": cp.alpha.tolist(),
            "sigma_c": cp.sigma_c,
        }

    def to_dict(self) -> dict:
        return {
            "layout": self.layout.to_dict(),
            "values": [float(v) for v in self.values],
            "names": self.layout.names,
            "params": self.params(),
            "loglik": self.loglik,
            "aic": self.aic,
            "q": self.q,
            "degrees": list(self.degrees),
            "n": self.n,
            "continuity_residual": self.continuity_residual,
            "converged": self.converged,
            "traces": self.traces,
        }

    @classmethod
    def from_dict(cls, d: dict) -> FitResult:
        layout = ParamLayout(**d["layout"])
        return cls(
            layout,
            np.asarray(d["values"], dtype=float),
            float(d["loglik"]),
            int(d["n"]),
            d.get("traces", {}),
            bool(d.get("converged", True)),
        )


def check_loss(z, lam: float):
    """Quantile check loss ``z (lam - 1{z < 0})``."""
    z = np.asarray(z, dtype=float)
    return z * (lam - (z < 0))


def _quantile_regression(x, y, lam):
    coef0, *_ = np.linalg.lstsq(x, y, rcond=None)
    res = nelder_mead(lambda b: np.sum(check_loss(y - x @ b, lam)), coef0, OptBudget(500 * x.shape[1]))
    return res.x


def _start_thetas(family: str) -> list[float]:
    thetas = []
    for tau in START_TAUS:
        try:
            thetas.append(tau_to_theta(family, tau))
        except ValueError:
            continue
    return thetas


def initial_values(data: Dataset, config: FitConfig) -> list[PackedParams]:
    """Data-driven starting points for the basis step plus seeded perturbations.

    Raises
    ------
    ValueError
        If the data contain no uncensored or no censored rows.
    """
    obs, cen = data.uncensored, data.censored
    if obs.size == 0 or cen.size == 0:
        raise ValueError("fitting needs both censored and uncensored observations")
    layout = config.layout(data.dim)
    if data.n < 10 * layout.size:
        log.warning("only %d rows for %d parameters", data.n, layout.size)

    lam0 = config.lambda_fixed if config.lambda_fixed is not None else 0.5
    beta = _quantile_regression(data.x[obs], data.y[obs], lam0)
    resid = data.y[obs] - data.x[obs] @ beta
    mad = np.median(np.abs(resid - np.median(resid)))
    gamma = np.zeros(data.dim)
    gamma[0] = np.log(max(mad, 1e-3))
    alpha, *_ = np.linalg.lstsq(data.x[cen], data.y[cen], rcond=None)
    dof = max(cen.size - data.dim, 1)
    sigma_c = max(np.sqrt(np.sum((data.y[cen] - data.x[cen] @ alpha) ** 2) / dof), 1e-3)

    tp = TMarginParams(beta, gamma, EalParams(lam0))
    cp = CMarginParams(alpha, sigma_c)
    if config.family == "independence":
        bases = [layout.pack(CopulaSpec("independence"), tp, cp)]
    else:
        bases = [layout.pack(CopulaSpec(config.family, th), tp, cp) for th in _start_thetas(config.family)]

    rng = np.random.default_rng([config.seed, 0])
    starts = list(bases[: config.n_starts])
    i = 0
    while len(starts) < config.n_starts:
        base = bases[i % len(bases)]
        starts.append(base + rng.normal(0.0, config.perturb_sd, base.size))
        i += 1
    return [PackedParams(layout, s) for s in starts]


def _best(results):
    # max loglik, ties to the earliest index
    best = None
    for i, (ll, payload) in enumerate(results):
        if best is None or ll > best[0]:
            best = (ll, i, payload)
    return best


def _basis(data: Dataset, config: FitConfig, starts):
    layout = starts[0].layout
    if layout.m_neg or layout.m_pos:
        raise ValueError("the basis step runs with Laguerre degrees (0, 0)")

    def objective(v):
        return -loglik_values(layout, v, data)

    runs = []
    for s in starts:
        res = nelder_mead(objective, s.values, OptBudget(config.basis_iters))
        ll = -res.fun if not res.degenerate else -np.inf
        runs.append((ll, res))
    ll, idx, res = _best(runs)
    if not np.isfinite(ll) or ll <= -1e9:
        raise FitError("every basis-step start is degenerate")
    trace = {"start_logliks": [float(r[0]) for r in runs], "best_start": idx, "loglik": float(ll)}
    return PackedParams(layout, res.x), trace


def basis_step(data: Dataset, config: FitConfig, starts) -> PackedParams:
    """Best-of-starts Nelder-Mead fit with all Laguerre degrees at zero."""
    return _basis(data, config, starts)[0]


def _perturbations(rng, base, count, sd):
    out = [np.array(base)]
    while len(out) < count:
        out.append(base + rng.normal(0.0, sd, base.size))
    return out


def _fit_cell(data, config, basis: PackedParams, m_neg, m_pos, rng):
    layout = basis.layout.with_degrees(m_neg, m_pos)
    frozen = layout.convert(basis.values, basis.layout)
    t_idx = layout.t_indices
    s = layout.slices
    neg = slice(s["phi_neg"].start - t_idx[0], s["phi_neg"].stop - t_idx[0])
    pos = slice(s["phi_pos"].start - t_idx[0], s["phi_pos"].stop - t_idx[0])

    def objective(t):
        full = frozen.copy()
        full[t_idx] = t
        return -loglik_values(layout, full, data)

    def residual(t):
        return continuity_residual(np.r_[1.0, t[neg]], np.r_[1.0, t[pos]])

    runs = []
    for start in _perturbations(rng, frozen[t_idx], config.starts_per_cell, config.perturb_sd):
        res = nmcob(objective, residual, start, config.nm_iters, config.refine_iters)
        feasible = abs(residual(res.x)) < FEASIBILITY_TOL and not res.degenerate
        runs.append((-res.fun if feasible else -np.inf, res.x))
    ll, _, t_best = _best(runs)
    full = frozen.copy()
    full[t_idx] = t_best
    return layout, full, ll


def _intermediate(data: Dataset, config: FitConfig, basis: PackedParams):
    rng = np.random.default_rng([config.seed, 1])
    cells = []
    best = None
    for m_neg in range(config.max_degree + 1):
        for m_pos in range(config.max_degree + 1):
            layout, full, ll = _fit_cell(data, config, basis, m_neg, m_pos, rng)
            aic = 2.0 * layout.size - 2.0 * ll
            cells.append({"m_neg": m_neg, "m_pos": m_pos, "loglik": float(ll), "aic": float(aic)})
            key = (aic, m_neg + m_pos, m_neg)
            if np.isfinite(aic) and (best is None or key < best[0]):
                best = (key, layout, full, ll)
    if best is None:
        raise FitError("no degree pair produced a feasible fit")
    _, layout, full, ll = best
    trace = {"grid": cells, "selected": [layout.m_neg, layout.m_pos], "loglik": float(ll)}
    return PackedParams(layout, full), trace


def intermediate_step(data: Dataset, config: FitConfig, basis: PackedParams):
    """Select Laguerre degrees by AIC with copula and censoring parameters frozen.

    Returns
    -------
    (m_neg, m_pos, t_values)
        Selected degrees and the survival-margin coordinates at that pair.
    """
    composite, _ = _intermediate(data, config, basis)
    lay = composite.layout
    return lay.m_neg, lay.m_pos, composite.values[lay.t_indices]


def _final(data: Dataset, config: FitConfig, warm: PackedParams):
    layout = warm.layout
    rng = np.random.default_rng([config.seed, 2])

    def objective(v):
        return -loglik_values(layout, v, data)

    runs = []
    for start in _perturbations(rng, warm.values, config.n_starts, config.perturb_sd):
        res = nmcob(objective, layout.continuity, start, config.nm_iters, config.refine_iters)
        feasible = abs(layout.continuity(res.x)) < FEASIBILITY_TOL and not res.degenerate
        runs.append((-res.fun if feasible else -np.inf, res.x))
    ll, idx, x = _best(runs)
    if not np.isfinite(ll):
        raise FitError("final step found no feasible optimum")
    trace = {"start_logliks": [float(r[0]) for r in runs], "best_start": idx, "loglik": float(ll)}
    return FitResult(layout, np.asarray(x), float(ll), data.n, {"final": trace}), trace


def final_step(data: Dataset, config: FitConfig, degrees, warm: PackedParams) -> FitResult:
    """Joint NMCob optimisation at fixed degrees, warm-started from ``warm``."""
    layout = config.layout(data.dim, *degrees)
    if warm.layout != layout:
        warm = PackedParams(layout, layout.convert(warm.values, warm.layout))
    return _final(data, config, warm)[0]


def fit(data: Dataset, config: FitConfig = FitConfig()) -> FitResult:
    """Run initial values, basis, intermediate and final steps."""
    starts = initial_values(data, config)
    basis, basis_trace = _basis(data, config, starts)
    composite, inter_trace = _intermediate(data, config, basis)
    result, final_trace = _final(data, config, composite)
    result.traces = {"basis": basis_trace, "intermediate": inter_trace, "final": final_trace}
    result.converged = bool(abs(result.continuity_residual) < FEASIBILITY_TOL)
    return result
