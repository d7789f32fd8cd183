"""Laguerre orthonormal polynomials and the enriched asymmetric Laplace family.

The EAL density multiplies each side of an asymmetric Laplace density with a
squared (normalised) Laguerre series, which keeps the lambda-quantile at zero.
The CDF is evaluated in closed form through integer incomplete gamma sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import factorial

import numpy as np

__all__ = [
    "MAX_DEGREE",
    "EalParams",
    "laguerre_coefficients",
    "laguerre_eval",
    "laguerre_series",
    "eal_pdf",
    "eal_cdf",
    "eal_logcdf",
    "eal_quantile",
    "eal_sample",
    "al_quantile",
    "continuity_residual",
]

MAX_DEGREE = 60


def laguerre_coefficients(k: int) -> np.ndarray:
    """Monomial coefficients of the degree-``k`` Laguerre polynomial.

    Entry ``j`` equals ``binom(k, j) (-1)^j / j!``, built from the ratio of
    consecutive terms so no factorial is ever formed.
    """
    k = int(k)
    if k < 0 or k > MAX_DEGREE:
        raise ValueError(f"Laguerre degree must lie in [0, {MAX_DEGREE}], got {k}")
    coef = np.empty(k + 1)
    coef[0] = 1.0
    for j in range(k):
        coef[j + 1] = -coef[j] * (k - j) / (j + 1) ** 2
    return coef


def _series_monomials(weights: np.ndarray) -> np.ndarray:
    """Monomial coefficients of ``sum_k weights[k] L_k(x)``."""
    weights = np.asarray(weights, dtype=float)
    out = np.zeros(len(weights))
    for k, w in enumerate(weights):
        if w != 0.0:
            out[: k + 1] += w * laguerre_coefficients(k)
    return out


def laguerre_eval(k: int, x):
    """Evaluate the orthonormal Laguerre polynomial ``L_k`` at ``x``."""
    coef = laguerre_coefficients(k)
    res = np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), coef)
    return float(res) if np.ndim(res) == 0 else res


def laguerre_series(coeffs, x):
    """Evaluate ``sum_k coeffs[k] L_k(x)``."""
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if coeffs.size == 0:
        raise ValueError("coefficient vector must be non-empty")
    res = np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), _series_monomials(coeffs))
    return float(res) if np.ndim(res) == 0 else res


class _Side:
    """Precomputed polynomial pieces for one branch of the EAL density."""

    def __init__(self, weights: np.ndarray):
        self.poly = _series_monomials(weights)
        self.norm2 = float(np.dot(weights, weights))
        sq = np.convolve(self.poly, self.poly)
        j = np.arange(len(sq))
        fact = np.array([float(factorial(i)) for i in j])
        # tail[k] = sum_{j >= k} c_j j!  (tail[0] is the total mass, = norm2 by orthonormality)
        tail = np.cumsum((sq * fact)[::-1])[::-1]
        # survival-type polynomial: integral of the branch from u to infinity is e^{-u} sum_k b_k u^k
        self.tail_poly = tail / (tail[0] * fact)


@dataclass(frozen=True)
class EalParams:
    """Parameters of an EAL distribution.

    Parameters
    ----------
    lam : float
        Quantile level in (0, 1) at which the distribution has its zero quantile.
    phi_neg, phi_pos : sequence of float
        Laguerre weights for the ``y <= 0`` and ``y > 0`` branches. The first
        entry is the normalisation constant 1.
    """

    lam: float
    phi_neg: tuple = (1.0,)
    phi_pos: tuple = (1.0,)

    def __post_init__(self):
        neg = tuple(float(v) for v in np.atleast_1d(self.phi_neg))
        pos = tuple(float(v) for v in np.atleast_1d(self.phi_pos))
        object.__setattr__(self, "phi_neg", neg)
        object.__setattr__(self, "phi_pos", pos)
        object.__setattr__(self, "lam", float(self.lam))
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lam must lie in (0, 1), got {self.lam}")
        if not neg or not pos or neg[0] != 1.0 or pos[0] != 1.0:
            raise ValueError("Laguerre weight vectors must start with exactly 1")
        if len(neg) - 1 > MAX_DEGREE or len(pos) - 1 > MAX_DEGREE:
            raise ValueError("Laguerre degree too large")

    @classmethod
    def from_free(cls, lam, phi_neg_free=(), phi_pos_free=()):
        """Build from the free coefficients (everything after the leading 1)."""
        return cls(lam, (1.0, *phi_neg_free), (1.0, *phi_pos_free))

    @property
    def m_neg(self) -> int:
        return len(self.phi_neg) - 1

    @property
    def m_pos(self) -> int:
        return len(self.phi_pos) - 1

    @cached_property
    def _neg(self) -> _Side:
        return _Side(np.array(self.phi_neg))

    @cached_property
    def _pos(self) -> _Side:
        return _Side(np.array(self.phi_pos))


def _polyval(c, x):
    return np.polynomial.polynomial.polyval(x, c)


def _out(res):
    return float(res) if np.ndim(res) == 0 else res


def eal_pdf(p: EalParams, y):
    """EAL density; ``y = 0`` belongs to the negative branch."""
    y = np.asarray(y, dtype=float)
    lam = p.lam
    neg = y <= 0
    u = np.where(neg, (lam - 1.0) * y, lam * y)
    s_neg, s_pos = p._neg, p._pos
    series = np.where(neg, _polyval(s_neg.poly, u), _polyval(s_pos.poly, u))
    norm2 = np.where(neg, s_neg.norm2, s_pos.norm2)
    return _out(lam * (1.0 - lam) * np.exp(-u) * series**2 / norm2)


def eal_cdf(p: EalParams, y):
    """Closed-form EAL distribution function."""
    y = np.asarray(y, dtype=float)
    lam = p.lam
    neg = y <= 0
    u = np.where(neg, (lam - 1.0) * y, lam * y)
    eu = np.exp(-u)
    lower = lam * eu * _polyval(p._neg.tail_poly, u)
    upper = 1.0 - (1.0 - lam) * eu * _polyval(p._pos.tail_poly, u)
    return _out(np.where(neg, lower, upper))


def eal_logcdf(p: EalParams, y):
    """Log of the EAL distribution function, accurate deep in the lower tail."""
    y = np.asarray(y, dtype=float)
    lam = p.lam
    neg = y <= 0
    u_neg = np.where(neg, (lam - 1.0) * y, 0.0)
    with np.errstate(divide="ignore"):
        lower = np.log(lam) - u_neg + np.log(_polyval(p._neg.tail_poly, u_neg))
    u_pos = np.where(neg, 0.0, lam * y)
    upper = np.log1p(-(1.0 - lam) * np.exp(-u_pos) * _polyval(p._pos.tail_poly, u_pos))
    return _out(np.where(neg, lower, upper))


def al_quantile(lam: float, prob):
    """Quantile function of the standard asymmetric Laplace distribution."""
    prob = np.asarray(prob, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        res = np.where(
            prob <= lam,
            np.log(prob / lam) / (1.0 - lam),
            -np.log((1.0 - prob) / (1.0 - lam)) / lam,
        )
    return _out(res)


def eal_quantile(p: EalParams, prob):
    """EAL quantile by bracketing and safeguarded Newton iterations.

    Raises
    ------
    ValueError
        If any probability lies outside (0, 1).
    """
    prob_arr = np.atleast_1d(np.asarray(prob, dtype=float))
    if np.any(~(prob_arr > 0.0) | ~(prob_arr < 1.0)):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    y = np.atleast_1d(np.asarray(al_quantile(p.lam, prob_arr), dtype=float)).copy()
    exact = prob_arr == p.lam
    y[exact] = 0.0

    step = np.ones_like(y)
    lo = y - step
    while True:
        bad = eal_cdf(p, lo) > prob_arr
        if not np.any(bad):
            break
        step[bad] *= 2.0
        lo[bad] -= step[bad]
    step = np.ones_like(y)
    hi = y + step
    while True:
        bad = eal_cdf(p, hi) < prob_arr
        if not np.any(bad):
            break
        step[bad] *= 2.0
        hi[bad] += step[bad]

    active = ~exact
    for _ in range(200):
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        yi = y[idx]
        gap = eal_cdf(p, yi) - prob_arr[idx]
        below = gap < 0
        lo[idx] = np.where(below, np.maximum(lo[idx], yi), lo[idx])
        hi[idx] = np.where(below, hi[idx], np.minimum(hi[idx], yi))
        done = (np.abs(gap) <= 1e-15) | (hi[idx] - lo[idx] <= 4e-16 * np.maximum(1.0, np.abs(yi)))
        dens = eal_pdf(p, yi)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = yi - gap / dens
        ok = np.isfinite(newton) & (newton > lo[idx]) & (newton < hi[idx])
        y[idx] = np.where(done, yi, np.where(ok, newton, 0.5 * (lo[idx] + hi[idx])))
        active[idx[done]] = False
    return float(y[0]) if np.ndim(prob) == 0 else y.reshape(np.shape(prob))


def eal_sample(p: EalParams, u):
    """Inverse-transform draw(s) from the EAL distribution."""
    return eal_quantile(p, u)


def continuity_residual(phi_neg, phi_pos) -> float:
    """Difference of the two branch densities at the origin, up to ``lam(1-lam)``.

    Zero exactly when the EAL density is continuous at zero, since
    ``L_k(0) = 1`` for every ``k``.
    """
    a = np.asarray(phi_neg, dtype=float)
    b = np.asarray(phi_pos, dtype=float)
    return float(a.sum() ** 2 / np.dot(a, a) - b.sum() ** 2 / np.dot(b, b))
