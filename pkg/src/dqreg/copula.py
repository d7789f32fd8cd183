"""Bivariate Archimedean copulas: CDF, h-functions, conditional inversion, Kendall's tau.

Argument convention: ``C(u, v)`` with ``u`` the PIT of the survival time and
``v`` the PIT of the censoring time. All families are exchangeable, so both
h-functions share one log-domain kernel ``log_h(log_cond, log_other)`` giving
``log dC(a, b)/da``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "FAMILIES",
    "EPS",
    "CopulaSpec",
    "copula_cdf",
    "log_h",
    "h_c_given_t",
    "h_t_given_c",
    "inverse_h",
    "tau_to_theta",
    "theta_to_tau",
]

FAMILIES = ("independence", "frank", "frankpos", "clayton", "gumbel")
EPS = 1e-12
FRANK_ZERO = 1e-6


def _canonical(family: str) -> str:
    name = str(family).lower().replace("-", "").replace("_", "")
    if name in ("indep", "independent"):
        name = "independence"
    if name not in FAMILIES:
        raise ValueError(f"unknown copula family {family!r}; expected one of {FAMILIES}")
    return name


@dataclass(frozen=True)
class CopulaSpec:
    """A copula family together with its parameter."""

    family: str
    theta: float = 0.0

    def __post_init__(self):
        fam = _canonical(self.family)
        theta = float(self.theta)
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "theta", theta)
        if not np.isfinite(theta):
            raise ValueError("copula parameter must be finite")
        if fam == "frank" and theta == 0.0:
            raise ValueError("Frank parameter must be non-zero")
        if fam in ("frankpos", "clayton") and theta <= 0.0:
            raise ValueError(f"{fam} parameter must be positive, got {theta}")
        if fam == "gumbel" and theta < 1.0:
            raise ValueError(f"Gumbel parameter must be >= 1, got {theta}")

    @property
    def n_params(self) -> int:
        return 0 if self.family == "independence" else 1

    @property
    def is_independent(self) -> bool:
        if self.family == "independence":
            return True
        if self.family in ("frank", "frankpos"):
            return abs(self.theta) < FRANK_ZERO
        return self.family == "gumbel" and self.theta == 1.0

    @property
    def tau(self) -> float:
        return theta_to_tau(self.family, self.theta)


def _clamp(p):
    return np.clip(np.asarray(p, dtype=float), EPS, 1.0 - EPS)


def _out(res):
    return float(res) if np.ndim(res) == 0 else res


def copula_cdf(c: CopulaSpec, u, v):
    """Joint distribution function ``C_theta(u, v)``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u < 0) | (u > 1) | (v < 0) | (v > 1)):
        raise ValueError("copula arguments must lie in [0, 1]")
    th = c.theta
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if c.is_independent:
            res = u * v
        elif c.family in ("frank", "frankpos"):
            res = -np.log1p(np.expm1(-th * u) * np.expm1(-th * v) / np.expm1(-th)) / th
        elif c.family == "clayton":
            res = np.power(np.power(u, -th) + np.power(v, -th) - 1.0, -1.0 / th)
        else:
            s = np.power(-np.log(u), th) + np.power(-np.log(v), th)
            res = np.exp(-np.power(s, 1.0 / th))
    res = np.where((u == 0) | (v == 0), 0.0, res)
    res = np.where(u == 1, v, np.where(v == 1, u, res))
    return _out(res)


def _log_abs_expm1(theta, logx):
    # log|expm1(-theta x)| for x = exp(logx), exact in the deep tail where x underflows
    x = np.exp(logx)
    with np.errstate(divide="ignore"):
        direct = np.log(np.abs(np.expm1(-theta * x)))
    return np.where(logx < -600.0, np.log(abs(theta)) + logx, direct)


def log_h(c: CopulaSpec, log_cond, log_other):
    """Log of ``dC(a, b)/da`` evaluated at ``a = exp(log_cond)``, ``b = exp(log_other)``.

    Works directly with log-probabilities so tail limits can be examined far
    beyond where the probabilities themselves underflow.
    """
    la = np.asarray(log_cond, dtype=float)
    lb = np.asarray(log_other, dtype=float)
    th = c.theta
    if c.is_independent:
        return _out(lb + 0.0 * la)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if c.family in ("frank", "frankpos"):
            ga = _log_abs_expm1(th, la)
            gb = _log_abs_expm1(th, lb)
            prod = np.exp(ga + gb)
            if th > 0:
                logd = np.log(-np.expm1(-th) - prod)
            else:
                logd = np.log(np.expm1(-th) + prod)
            res = -th * np.exp(la) + gb - logd
        elif c.family == "clayton":
            A = -th * la
            B = -th * lb
            m = np.maximum(A, B)
            lse = m + np.log(np.exp(A - m) + np.exp(B - m) - np.exp(-m))
            res = (-th - 1.0) * la + (-1.0 / th - 1.0) * lse
        else:
            x = -la
            y = -lb
            big = np.maximum(x, y)
            small = np.minimum(x, y)
            logs = th * np.log(big) + np.log1p(np.power(small / big, th))
            res = -np.exp(logs / th) + (1.0 / th - 1.0) * logs + (th - 1.0) * np.log(x) + x
    return _out(np.minimum(res, 0.0))


def h_c_given_t(c: CopulaSpec, v, u):
    """``h_{C|T}(v | u) = dC(u, v)/du``, the law of the censoring PIT given ``u``."""
    return _out(np.exp(log_h(c, np.log(_clamp(u)), np.log(_clamp(v)))))


def h_t_given_c(c: CopulaSpec, u, v):
    """``h_{T|C}(u | v) = dC(u, v)/dv``."""
    return _out(np.exp(log_h(c, np.log(_clamp(v)), np.log(_clamp(u)))))


def inverse_h(c: CopulaSpec, w, u):
    """Solve ``h_c_given_t(c, v, u) = w`` for ``v``."""
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    if c.is_independent:
        return _out(np.broadcast_to(w, np.broadcast(w, u).shape).astype(float))
    th = c.theta
    if c.family in ("frank", "frankpos"):
        a = np.exp(-th * u)
        b = w * np.expm1(-th) / (w + (1.0 - w) * a)
        return _out(np.clip(-np.log1p(b) / th, 0.0, 1.0))
    w, u = np.broadcast_arrays(w, u)
    lo = np.zeros(w.shape)
    hi = np.ones(w.shape)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        below = h_c_given_t(c, mid, u) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-16):
            break
    return _out(0.5 * (lo + hi))


def _debye1(theta: float) -> float:
    def integrand(t):
        return 1.0 if t == 0.0 else t / np.expm1(t)

    val, _ = integrate.quad(integrand, 0.0, theta, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val / theta


def _frank_tau(theta: float) -> float:
    if abs(theta) < 1e-4:
        return theta / 9.0 - theta**3 / 900.0
    return 1.0 - 4.0 / theta * (1.0 - _debye1(theta))


def theta_to_tau(family: str, theta: float) -> float:
    """Kendall's tau implied by a copula parameter."""
    fam = _canonical(family)
    theta = float(theta)
    if fam == "independence":
        return 0.0
    CopulaSpec(fam, theta)
    if fam == "clayton":
        return theta / (theta + 2.0)
    if fam == "gumbel":
        return 1.0 - 1.0 / theta
    return _frank_tau(theta)


def tau_to_theta(family: str, tau: float) -> float:
    """Copula parameter attaining a given Kendall's tau.

    Raises
    ------
    ValueError
        When ``tau`` lies outside the family's attainable range.
    """
    fam = _canonical(family)
    tau = float(tau)
    if fam == "independence":
        if tau != 0.0:
            raise ValueError("the independence copula only attains tau = 0")
        return 0.0
    if fam in ("clayton", "gumbel", "frankpos"):
        if not 0.0 < tau < 1.0:
            raise ValueError(f"{fam} requires tau in (0, 1), got {tau}")
    elif not (-1.0 < tau < 1.0) or tau == 0.0:
        raise ValueError(f"frank requires tau in (-1, 1) without 0, got {tau}")
    if fam == "clayton":
        return 2.0 * tau / (1.0 - tau)
    if fam == "gumbel":
        return 1.0 / (1.0 - tau)
    # Frank's tau is odd in theta
    target = abs(tau)
    hi = 1.0
    while _frank_tau(hi) < target:
        hi *= 2.0
    root = optimize.brentq(lambda t: _frank_tau(t) - target, 1e-12, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    return root if tau > 0 else -root
