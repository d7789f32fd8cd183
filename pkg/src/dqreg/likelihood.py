"""Parameter packing and the copula-based censored log-likelihood.

The packed vector holds, in order::

    theta | beta | [logit lambda] | gamma (or gamma_0) | phi_neg free | phi_pos free | alpha | log sigma_c

with the copula parameter on its transformed scale (raw for Frank, log for
FrankPos and Clayton, log(theta - 1) for Gumbel, absent for independence).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.special import expit, logit, ndtr

from . import _kernels
from ._kernels import FAMILY_CODES
from .copula import EPS, FRANK_ZERO, CopulaSpec, _canonical, log_h
from .laguerre_eal import EalParams, continuity_residual, eal_cdf, eal_pdf
from .margins import CMarginParams, TMarginParams

__all__ = [
    "PENALTY",
    "DENSITY_FLOOR",
    "Dataset",
    "ParamLayout",
    "PackedParams",
    "loglik_contribution",
    "loglik_contributions",
    "loglik",
    "loglik_t_only",
]

PENALTY = -1e10
DENSITY_FLOOR = 1e-300
THETA_BOX = 50.0


@dataclass(frozen=True)
class Dataset:
    """Observed triplets ``(y, delta, x)``; ``x`` rows start with the intercept 1."""

    y: np.ndarray
    delta: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        delta = np.asarray(self.delta)
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.shape[0] != y.shape[0] or delta.reshape(-1).shape[0] != y.shape[0]:
            raise ValueError("y, delta and x must have the same number of rows")
        if not np.all(np.isin(delta, (0, 1))):
            raise ValueError("delta must contain only 0 and 1")
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
            raise ValueError("y and x must be finite")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "delta", delta.reshape(-1).astype(np.int8))
        object.__setattr__(self, "x", x)

    @classmethod
    def from_covariates(cls, y, delta, covariates):
        """Build from covariates without intercept; a column of ones is prepended."""
        cov = np.asarray(covariates, dtype=float)
        if cov.ndim == 1:
            cov = cov.reshape(-1, 1)
        return cls(y, delta, np.column_stack([np.ones(cov.shape[0]), cov]))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        """Number of covariates, intercept excluded."""
        return self.x.shape[1] - 1

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @cached_property
    def uncensored(self) -> np.ndarray:
        return np.flatnonzero(self.delta == 1)

    @cached_property
    def censored(self) -> np.ndarray:
        return np.flatnonzero(self.delta == 0)

    def subset(self, idx) -> Dataset:
        idx = np.asarray(idx)
        return Dataset(self.y[idx], self.delta[idx], self.x[idx])

    def concat(self, other: Dataset) -> Dataset:
        return Dataset(
            np.concatenate([self.y, other.y]),
            np.concatenate([self.delta, other.delta]),
            np.vstack([self.x, other.x]),
        )


def _theta_to_free(family: str, theta: float) -> float:
    if family == "frank":
        return theta
    if family in ("frankpos", "clayton"):
        return np.log(theta)
    return np.log(theta - 1.0)


def _theta_from_free(family: str, z: float) -> float:
    if family == "frank":
        t = float(np.clip(z, -THETA_BOX, THETA_BOX))
        if abs(t) < FRANK_ZERO:
            t = FRANK_ZERO if t >= 0 else -FRANK_ZERO
        return t
    if family in ("frankpos", "clayton"):
        return float(np.exp(np.clip(z, np.log(FRANK_ZERO), np.log(THETA_BOX))))
    return 1.0 + float(np.exp(np.clip(z, -30.0, np.log(THETA_BOX - 1.0))))


@dataclass(frozen=True)
class ParamLayout:
    """Describes which coordinates a packed parameter vector contains.

    Parameters
    ----------
    family : str
        Copula family of the model.
    dim : int
        Covariate dimension including the intercept.
    m_neg, m_pos : int
        Laguerre degrees of the negative and positive EAL branches.
    hetero : bool
        Whether ``gamma`` carries slopes; if not only ``gamma_0`` is free.
    lambda_fixed : float or None
        Fixed EAL quantile level, or ``None`` when it is estimated.
    """

    family: str
    dim: int
    m_neg: int = 0
    m_pos: int = 0
    hetero: bool = True
    lambda_fixed: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", _canonical(self.family))
        if self.lambda_fixed is not None:
            lam = float(self.lambda_fixed)
            if not 0.0 < lam < 1.0:
                raise ValueError("lambda_fixed must lie in (0, 1)")
            object.__setattr__(self, "lambda_fixed", lam)

    @cached_property
    def slices(self) -> dict[str, slice]:
        sizes = [
            ("theta", 0 if self.family == "independence" else 1),
            ("beta", self.dim),
            ("lambda", 0 if self.lambda_fixed is not None else 1),
            ("gamma", self.dim if self.hetero else 1),
            ("phi_neg", self.m_neg),
            ("phi_pos", self.m_pos),
            ("alpha", self.dim),
            ("log_sigma_c", 1),
        ]
        out, start = {}, 0
        for name, k in sizes:
            out[name] = slice(start, start + k)
            start += k
        return out

    @property
    def size(self) -> int:
        return self.slices["log_sigma_c"].stop

    @cached_property
    def t_indices(self) -> np.ndarray:
        """Positions of the survival-margin coordinates."""
        s = self.slices
        return np.arange(s["beta"].start, s["phi_pos"].stop)

    @cached_property
    def names(self) -> list[str]:
        s = self.slices
        names = [""] * self.size
        for key, sl in s.items():
            for i, pos in enumerate(range(sl.start, sl.stop)):
                if key in ("beta", "gamma", "alpha"):
                    names[pos] = f"{key}_{i}"
                elif key in ("phi_neg", "phi_pos"):
                    names[pos] = f"{key}_{i + 1}"
                else:
                    names[pos] = key
        return names

    def with_degrees(self, m_neg: int, m_pos: int) -> ParamLayout:
        return replace(self, m_neg=int(m_neg), m_pos=int(m_pos))

    def unpack(self, values) -> tuple[CopulaSpec, TMarginParams, CMarginParams]:
        v = np.asarray(values, dtype=float)
        s = self.slices
        if self.family == "independence":
            cop = CopulaSpec("independence")
        else:
            cop = CopulaSpec(self.family, _theta_from_free(self.family, v[s["theta"]][0]))
        if self.lambda_fixed is not None:
            lam = self.lambda_fixed
        else:
            lam = float(np.clip(expit(v[s["lambda"]][0]), 1e-6, 1 - 1e-6))
        gamma = v[s["gamma"]]
        if not self.hetero:
            gamma = np.concatenate([gamma, np.zeros(self.dim - 1)])
        eal = EalParams.from_free(lam, v[s["phi_neg"]], v[s["phi_pos"]])
        tp = TMarginParams(v[s["beta"]], gamma, eal)
        cp = CMarginParams(v[s["alpha"]], float(np.exp(np.clip(v[s["log_sigma_c"]][0], -30.0, 30.0))))
        return cop, tp, cp

    def pack(self, copula: CopulaSpec, tp: TMarginParams, cp: CMarginParams) -> np.ndarray:
        s = self.slices
        v = np.zeros(self.size)
        if self.family != "independence":
            if copula.family != self.family:
                raise ValueError("copula family does not match the layout")
            v[s["theta"]] = _theta_to_free(self.family, copula.theta)
        v[s["beta"]] = tp.beta
        if self.lambda_fixed is None:
            v[s["lambda"]] = logit(tp.eal.lam)
        v[s["gamma"]] = tp.gamma if self.hetero else tp.gamma[:1]
        v[s["phi_neg"]] = tp.eal.phi_neg[1:]
        v[s["phi_pos"]] = tp.eal.phi_pos[1:]
        v[s["alpha"]] = cp.alpha
        v[s["log_sigma_c"]] = np.log(cp.sigma_c)
        return v

    def continuity(self, values) -> float:
        """Continuity residual of the EAL density encoded in ``values``."""
        v = np.asarray(values, dtype=float)
        s = self.slices
        return continuity_residual(np.r_[1.0, v[s["phi_neg"]]], np.r_[1.0, v[s["phi_pos"]]])

    def convert(self, values, source: ParamLayout) -> np.ndarray:
        """Map a vector packed under ``source`` onto this layout.

        Shared coordinates are copied; Laguerre weights missing from
        ``source`` start at zero and surplus ones are dropped.
        """
        v = np.asarray(values, dtype=float)
        out = np.zeros(self.size)
        a, b = source.slices, self.slices
        for key in b:
            src = v[a[key]]
            dst = b[key]
            k = min(len(src), dst.stop - dst.start)
            out[dst.start : dst.start + k] = src[:k]
        return out

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "dim": self.dim,
            "m_neg": self.m_neg,
            "m_pos": self.m_pos,
            "hetero": self.hetero,
            "lambda_fixed": self.lambda_fixed,
        }


@dataclass(frozen=True)
class PackedParams:
    """A parameter vector together with its layout."""

    layout: ParamLayout
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.layout.size,):
            raise ValueError(f"expected {self.layout.size} values, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_models(cls, layout: ParamLayout, copula, tp, cp) -> PackedParams:
        return cls(layout, layout.pack(copula, tp, cp))

    def unpack(self):
        return self.layout.unpack(self.values)


def _log1m(h):
    return np.log(np.maximum(1.0 - h, DENSITY_FLOOR))


def _contributions(copula, tp, cp, y, x, delta) -> np.ndarray:
    """Vectorised numpy evaluation of the contributions (reference for the compiled kernel)."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta)
    mu_t = x @ tp.beta
    sig_t = np.exp(x @ tp.gamma)
    z_t = (y - mu_t) / sig_t
    z_c = (y - x @ cp.alpha) / cp.sigma_c
    u = np.clip(eal_cdf(tp.eal, z_t), EPS, 1.0 - EPS)
    v = np.clip(ndtr(z_c), EPS, 1.0 - EPS)
    lu, lv = np.log(u), np.log(v)
    obs = delta == 1
    out = np.empty(y.shape)
    with np.errstate(all="ignore"):
        f_t = np.maximum(eal_pdf(tp.eal, z_t[obs]) / sig_t[obs], DENSITY_FLOOR)
        h_ct = np.exp(log_h(copula, lu[obs], lv[obs]))
        out[obs] = np.log(f_t) + _log1m(h_ct)
        cen = ~obs
        f_c = np.maximum(np.exp(-0.5 * z_c[cen] ** 2) / (np.sqrt(2 * np.pi) * cp.sigma_c), DENSITY_FLOOR)
        h_tc = np.exp(log_h(copula, lv[cen], lu[cen]))
        out[cen] = np.log(f_c) + _log1m(h_tc)
    out[~np.isfinite(out)] = PENALTY
    return out


def _kernel_args(layout: ParamLayout, values):
    v = np.asarray(values, dtype=float)
    s = layout.slices
    if layout.family == "independence":
        code, theta = 0, 0.0
    else:
        theta = _theta_from_free(layout.family, v[s["theta"]][0])
        code = 0 if layout.family in ("frank", "frankpos") and abs(theta) < FRANK_ZERO else FAMILY_CODES[layout.family]
    if layout.lambda_fixed is not None:
        lam = layout.lambda_fixed
    else:
        lam = float(np.clip(expit(v[s["lambda"]][0]), 1e-6, 1 - 1e-6))
    gamma = v[s["gamma"]]
    if not layout.hetero:
        gamma = np.concatenate([gamma, np.zeros(layout.dim - 1)])
    sigma_c = float(np.exp(np.clip(v[s["log_sigma_c"]][0], -30.0, 30.0)))
    return (
        np.ascontiguousarray(v[s["beta"]]),
        np.ascontiguousarray(gamma),
        lam,
        np.r_[1.0, v[s["phi_neg"]]],
        np.r_[1.0, v[s["phi_pos"]]],
        np.ascontiguousarray(v[s["alpha"]]),
        sigma_c,
        code,
        theta,
    )


def _fast_contributions(layout: ParamLayout, values, data: Dataset) -> np.ndarray:
    if max(layout.m_neg, layout.m_pos) > _kernels.LAGUERRE_TABLE.shape[0] - 1:
        cop, tp, cp = layout.unpack(values)
        return _contributions(cop, tp, cp, data.y, data.x, data.delta)
    args = _kernel_args(layout, values)
    return _kernels.contributions(
        data.y, data.x, data.delta, *args, _kernels.LAGUERRE_TABLE, _kernels._FACT
    )


def loglik_contributions(pi: PackedParams, data: Dataset) -> np.ndarray:
    """Per-row log-likelihood contributions."""
    return _fast_contributions(pi.layout, pi.values, data)


def loglik_contribution(pi: PackedParams, y: float, x, delta: int) -> float:
    """Log-likelihood contribution of one observation."""
    row = Dataset(np.array([y]), np.array([delta]), np.atleast_2d(x))
    return float(_fast_contributions(pi.layout, pi.values, row)[0])


def loglik_values(layout: ParamLayout, values, data: Dataset) -> float:
    """Joint log-likelihood for a raw packed vector (the optimiser's hot path)."""
    total = float(np.sum(_fast_contributions(layout, values, data)))
    return total if np.isfinite(total) else PENALTY


def loglik(pi: PackedParams, data: Dataset) -> float:
    """Joint log-likelihood summed over rows."""
    return loglik_values(pi.layout, pi.values, data)


def loglik_t_only(pi_fixed: PackedParams, t_values, data: Dataset) -> float:
    """Log-likelihood with the copula and censoring parameters frozen at ``pi_fixed``.

    ``t_values`` replaces the survival-margin coordinates (``layout.t_indices``).
    """
    full = np.array(pi_fixed.values)
    full[pi_fixed.layout.t_indices] = np.asarray(t_values, dtype=float)
    return loglik_values(pi_fixed.layout, full, data)
