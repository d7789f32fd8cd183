"""Conditional margins for the survival time T|X and censoring time C|X.

All margins share the same duck-typed interface (``cdf``, ``logcdf``, ``pdf``,
``quantile``, ``location``, ``scale``, ``upper``) taking covariate rows that
include the leading intercept 1. ``x`` may be a single vector or a 2-D array
of rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .laguerre_eal import EalParams, eal_cdf, eal_logcdf, eal_pdf, eal_quantile

__all__ = [
    "TMarginParams",
    "CMarginParams",
    "NormalTMargin",
    "UniformCMargin",
    "t_cdf",
    "t_pdf",
    "t_quantile",
    "c_cdf",
    "c_pdf",
    "c_quantile",
]


def _vec(a) -> np.ndarray:
    return np.atleast_1d(np.asarray(a, dtype=float))


def _out(res):
    return float(res) if np.ndim(res) == 0 else res


class _LocationScale:
    """Shared location-scale plumbing: subclasses supply the standardised law."""

    upper_support = np.inf

    def location(self, x):
        raise NotImplementedError

    def scale(self, x):
        raise NotImplementedError

    def _z(self, y, x):
        return (np.asarray(y, dtype=float) - self.location(x)) / self.scale(x)

    def cdf(self, y, x):
        return _out(self._std_cdf(self._z(y, x)))

    def logcdf(self, y, x):
        return _out(self._std_logcdf(self._z(y, x)))

    def pdf(self, y, x):
        return _out(self._std_pdf(self._z(y, x)) / self.scale(x))

    def quantile(self, p, x):
        return _out(self.location(x) + self.scale(x) * self._std_quantile(p))

    def upper(self, x):
        """Upper endpoint of the conditional support."""
        return _out(np.full(np.shape(self.location(x)), self.upper_support))


@dataclass(frozen=True)
class TMarginParams(_LocationScale):
    """EAL location-scale regression ``T = x'beta + exp(x'gamma) eps``.

    A homoscedastic model is one whose ``gamma`` has zeros after the intercept.
    """

    beta: np.ndarray
    gamma: np.ndarray
    eal: EalParams = field(default_factory=lambda: EalParams(0.5))

    def __post_init__(self):
        object.__setattr__(self, "beta", _vec(self.beta))
        object.__setattr__(self, "gamma", _vec(self.gamma))
        if self.beta.shape != self.gamma.shape:
            raise ValueError("beta and gamma must have the same length")

    @property
    def lam(self) -> float:
        return self.eal.lam

    @property
    def homoscedastic(self) -> bool:
        return bool(np.all(self.gamma[1:] == 0.0))

    def location(self, x):
        return np.asarray(x, dtype=float) @ self.beta

    def scale(self, x):
        return np.exp(np.asarray(x, dtype=float) @ self.gamma)

    def _std_cdf(self, z):
        return eal_cdf(self.eal, z)

    def _std_logcdf(self, z):
        return eal_logcdf(self.eal, z)

    def _std_pdf(self, z):
        return eal_pdf(self.eal, z)

    def _std_quantile(self, p):
        return eal_quantile(self.eal, p)


@dataclass(frozen=True)
class NormalTMargin(_LocationScale):
    """Normal heteroscedastic survival margin used to generate Scenario 1 data."""

    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta", _vec(self.beta))
        object.__setattr__(self, "gamma", _vec(self.gamma))

    def location(self, x):
        return np.asarray(x, dtype=float) @ self.beta

    def scale(self, x):
        return np.exp(np.asarray(x, dtype=float) @ self.gamma)

    _std_cdf = staticmethod(special.ndtr)
    _std_logcdf = staticmethod(special.log_ndtr)

    @staticmethod
    def _std_pdf(z):
        return np.exp(-0.5 * np.square(z)) / np.sqrt(2.0 * np.pi)

    _std_quantile = staticmethod(special.ndtri)


@dataclass(frozen=True)
class CMarginParams(_LocationScale):
    """Normal homoscedastic censoring margin ``C = x'alpha + sigma_c eps``."""

    alpha: np.ndarray
    sigma_c: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _vec(self.alpha))
        object.__setattr__(self, "sigma_c", float(self.sigma_c))
        if not self.sigma_c > 0:
            raise ValueError("sigma_c must be positive")

    def location(self, x):
        return np.asarray(x, dtype=float) @ self.alpha

    def scale(self, x):
        return self.sigma_c + 0.0 * self.location(x)

    _std_cdf = staticmethod(special.ndtr)
    _std_logcdf = staticmethod(special.log_ndtr)
    _std_pdf = staticmethod(NormalTMargin._std_pdf)
    _std_quantile = staticmethod(special.ndtri)


@dataclass(frozen=True)
class UniformCMargin(_LocationScale):
    """Censoring uniform on ``x'alpha +/- half_width``; has a finite upper endpoint."""

    alpha: np.ndarray
    half_width: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _vec(self.alpha))
        object.__setattr__(self, "half_width", float(self.half_width))

    def location(self, x):
        return np.asarray(x, dtype=float) @ self.alpha

    def scale(self, x):
        return self.half_width + 0.0 * self.location(x)

    def upper(self, x):
        return _out(self.location(x) + self.half_width)

    @staticmethod
    def _std_cdf(z):
        return np.clip(0.5 * (np.asarray(z) + 1.0), 0.0, 1.0)

    @classmethod
    def _std_logcdf(cls, z):
        with np.errstate(divide="ignore"):
            return np.log(cls._std_cdf(z))

    @staticmethod
    def _std_pdf(z):
        z = np.asarray(z)
        return np.where(np.abs(z) <= 1.0, 0.5, 0.0)

    @staticmethod
    def _std_quantile(p):
        return 2.0 * np.asarray(p, dtype=float) - 1.0


def t_cdf(tp: TMarginParams, y, x):
    """``F_{T|X}(y | x)``."""
    return tp.cdf(y, x)


def t_pdf(tp: TMarginParams, y, x):
    return tp.pdf(y, x)


def t_quantile(tp: TMarginParams, p, x):
    """Conditional quantile ``x'beta + sigma(x) Q_eps(p)``."""
    return tp.quantile(p, x)


def c_cdf(cp: CMarginParams, y, x):
    return cp.cdf(y, x)


def c_pdf(cp: CMarginParams, y, x):
    return cp.pdf(y, x)


def c_quantile(cp: CMarginParams, p, x):
    return cp.quantile(p, x)
