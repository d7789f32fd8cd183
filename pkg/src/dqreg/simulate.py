"""Dependently censored data generation and replication studies.

The named presets cover the first simulation scenario: normal
heteroscedastic (or homoscedastic) log survival times, normal log censoring
times and a single covariate uniform on [0, 4].
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .copula import CopulaSpec, inverse_h, tau_to_theta
from .fitter import FitConfig, FitError, fit
from .likelihood import Dataset
from .margins import CMarginParams, NormalTMargin

__all__ = [
    "ScenarioConfig",
    "SCENARIOS",
    "QUANTILE_LEVELS",
    "COVARIATE_VALUES",
    "get_scenario",
    "sample_pair",
    "generate_dataset",
    "true_quantiles",
    "run_scenario",
    "format_table",
]

log = logging.getLogger(__name__)

QUANTILE_LEVELS = (0.25, 0.5, 0.75)
COVARIATE_VALUES = (1.0, 2.0, 3.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Generator and fit settings of one simulation setting.

    ``uncens`` is the approximate uncensored fraction; it is informational
    and plays no part in generation.
    """

    name: str = "BasisHet"
    n: int = 500
    beta: tuple = (2.8, 0.6)
    gamma: tuple = (-1.5, 0.45)
    alpha: tuple = (3.15, 0.45)
    sigma_c: float = 0.8
    gen_family: str = "frank"
    tau: float = 0.5
    x_low: float = 0.0
    x_high: float = 4.0
    uncens: float | None = 0.54
    fit: FitConfig = field(default_factory=FitConfig)

    @property
    def copula(self) -> CopulaSpec:
        if self.gen_family in ("independence", "indep"):
            return CopulaSpec("independence")
        return CopulaSpec(self.gen_family, tau_to_theta(self.gen_family, self.tau))

    @property
    def t_margin(self) -> NormalTMargin:
        return NormalTMargin(self.beta, self.gamma)

    @property
    def c_margin(self) -> CMarginParams:
        return CMarginParams(self.alpha, self.sigma_c)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta"], d["gamma"], d["alpha"] = list(self.beta), list(self.gamma), list(self.alpha)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ScenarioConfig:
        d = dict(d)
        if "fit" in d and isinstance(d["fit"], dict):
            d["fit"] = FitConfig(**d["fit"])
        for key in ("beta", "gamma", "alpha"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def _presets() -> dict[str, ScenarioConfig]:
    het = ScenarioConfig()
    hom = replace(
        het,
        name="BasisHom",
        gamma=(-1.7, 0.0),
        gen_family="clayton",
        uncens=0.51,
        fit=FitConfig("clayton", hetero=False, lambda_fixed=0.5),
    )
    frank_fit = het.fit
    out = [
        het,
        hom,
        replace(het, name="LessCens", alpha=(3.5, 0.45), uncens=0.74),
        replace(het, name="MoreCens", alpha=(2.85, 0.45), uncens=0.35),
        replace(het, name="SizeS", n=250),
        replace(het, name="SizeL", n=1000),
        replace(het, name="SizeXL", n=2000),
        replace(het, name="LessDep", tau=0.25),
        replace(het, name="MoreDep", tau=0.75),
        replace(het, name="FitPos", fit=replace(frank_fit, family="frankpos")),
        replace(hom, name="Hom0.3", fit=replace(hom.fit, lambda_fixed=0.3)),
        replace(hom, name="Hom0.7", fit=replace(hom.fit, lambda_fixed=0.7)),
        replace(het, name="FitIndep", fit=replace(frank_fit, family="independence")),
        replace(het, name="GenIndep", gen_family="independence", tau=0.0, uncens=0.53),
        replace(
            het,
            name="AllIndep",
            gen_family="independence",
            tau=0.0,
            uncens=0.53,
            fit=replace(frank_fit, family="independence"),
        ),
        replace(hom, name="FitIndepHom", fit=replace(hom.fit, family="independence")),
        replace(het, name="MSCopHet", fit=replace(frank_fit, family="gumbel")),
        replace(hom, name="MSCopHom", fit=replace(hom.fit, family="gumbel")),
    ]
    return {sc.name: sc for sc in out}


SCENARIOS = _presets()


def _key(name: str) -> str:
    return "".join(ch for ch in name.lower() if ch.isalnum())


def get_scenario(name: str) -> ScenarioConfig:
    """Look up a preset; case, dashes, dots and underscores are ignored."""
    lookup = {_key(k): v for k, v in SCENARIOS.items()}
    try:
        return lookup[_key(name)]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}") from None


def sample_pair(c: CopulaSpec, tp, cp, x, rng: np.random.Generator) -> tuple[float, float]:
    """Draw one ``(t, c_time)`` pair at covariate row ``x`` by conditional inversion."""
    u, w = rng.uniform(size=2)
    v = inverse_h(c, w, u)
    return float(tp.quantile(u, x)), float(cp.quantile(v, x))


def generate_dataset(sc: ScenarioConfig, seed=None, n: int | None = None) -> Dataset:
    """Simulate ``(min(T, C), 1{T <= C}, (1, x))`` rows from a scenario."""
    rng = np.random.default_rng(seed)
    n = sc.n if n is None else n
    xt = rng.uniform(sc.x_low, sc.x_high, n)
    u = rng.uniform(size=n)
    w = rng.uniform(size=n)
    x = np.column_stack([np.ones(n), xt])
    v = np.asarray(inverse_h(sc.copula, w, u))
    # keep the PITs off {0, 1} so the quantile functions stay finite
    u = np.clip(u, 1e-15, 1 - 1e-15)
    v = np.clip(v, 1e-15, 1 - 1e-15)
    t = sc.t_margin.quantile(u, x)
    c = sc.c_margin.quantile(v, x)
    delta = (t <= c).astype(np.int8)
    return Dataset(np.where(delta == 1, t, c), delta, x)


def true_quantiles(sc: ScenarioConfig, levels=QUANTILE_LEVELS, xs=COVARIATE_VALUES) -> np.ndarray:
    """Generator quantiles, shape ``(len(levels), len(xs))``."""
    tm = sc.t_margin
    return np.array([[tm.quantile(p, np.array([1.0, xv])) for xv in xs] for p in levels])


def _one_rep(args):
    sc, seq, levels, xs = args
    from .inference import predict_quantile

    data = generate_dataset(sc, seq)
    fit_seed = int(seq.generate_state(1)[0])
    try:
        res = fit(data, replace(sc.fit, seed=fit_seed))
    except (FitError, ValueError, FloatingPointError) as exc:
        log.warning("replication dropped: %s", exc)
        return None
    return np.array([[predict_quantile(res, p, np.array([1.0, xv])) for xv in xs] for p in levels])


def run_scenario(
    sc: ScenarioConfig,
    reps: int,
    levels=QUANTILE_LEVELS,
    xs=COVARIATE_VALUES,
    seed: int = 0,
    n_jobs: int = 1,
    rep_fn=None,
) -> list[dict]:
    """Replicate generate-and-fit ``reps`` times and summarise quantile estimates.

    Parameters
    ----------
    rep_fn : callable, optional
        Replacement for the per-replication routine taking
        ``(sc, seed_sequence, levels, xs)`` and returning the quantile grid or
        None for a failed fit. Mainly for tests.

    Returns
    -------
    list of dict
        One record per ``(p, x)`` cell with keys ``scenario, p, x, true, avg,
        evar10, rbias, reps, dropped``.
    """
    if reps < 2:
        raise ValueError("reps must be at least 2")
    seqs = np.random.SeedSequence(seed).spawn(reps)
    jobs = [(sc, s, tuple(levels), tuple(xs)) for s in seqs]
    fn = _one_rep if rep_fn is None else (lambda a: rep_fn(*a))
    if n_jobs > 1 and rep_fn is None:
        with ProcessPoolExecutor(n_jobs) as pool:
            grids = list(pool.map(_one_rep, jobs))
    else:
        grids = [fn(j) for j in jobs]
    ok = [g for g in grids if g is not None]
    dropped = reps - len(ok)
    if len(ok) < 2:
        raise FitError(f"only {len(ok)} of {reps} replications succeeded")
    est = np.stack(ok)
    truth = true_quantiles(sc, levels, xs)
    avg = est.mean(axis=0)
    evar = est.var(axis=0, ddof=1)
    records = []
    for i, p in enumerate(levels):
        for j, xv in enumerate(xs):
            records.append(
                {
                    "scenario": sc.name,
                    "p": float(p),
                    "x": float(xv),
                    "true": float(truth[i, j]),
                    "avg": float(avg[i, j]),
                    "evar10": float(10.0 * evar[i, j]),
                    "rbias": float((avg[i, j] - truth[i, j]) / truth[i, j]),
                    "reps": len(ok),
                    "dropped": dropped,
                }
            )
    return records


def format_table(records: list[dict]) -> str:
    """Aligned text table with one column per ``(p, x)`` cell."""
    head = "".join(f"{'p=%g,x=%g' % (r['p'], r['x']):>14}" for r in records)
    lines = [f"{records[0]['scenario']:<10}{head}"]
    for key, label in (("true", "true"), ("avg", "avg."), ("evar10", "eVar x10"), ("rbias", "rBias")):
        lines.append(f"{label:<10}" + "".join(f"{r[key]:14.3f}" for r in records))
    return "\n".join(lines)
