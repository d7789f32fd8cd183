"""Compiled scalar kernels for the log-likelihood hot path.

These mirror the vectorised numpy code in ``laguerre_eal``, ``copula`` and
``likelihood`` row by row; the numpy versions serve as the test reference.
"""

import math

import numpy as np
from numba import njit

from .laguerre_eal import MAX_DEGREE, laguerre_coefficients

FAMILY_CODES = {"independence": 0, "frank": 1, "frankpos": 1, "clayton": 2, "gumbel": 3}

_EPS = 1e-12
_FLOOR = 1e-300
_PENALTY = -1e10
_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

_KMAX = 8
LAGUERRE_TABLE = np.zeros((_KMAX + 1, _KMAX + 1))
for _k in range(_KMAX + 1):
    LAGUERRE_TABLE[_k, : _k + 1] = laguerre_coefficients(_k)
_FACT = np.array([float(math.factorial(j)) for j in range(2 * _KMAX + 1)])
assert _KMAX <= MAX_DEGREE


@njit(cache=True)
def side_pieces(phi, table, fact):
    """Series monomials, squared norm and survival polynomial for one branch."""
    m = phi.shape[0]
    poly = np.zeros(m)
    for k in range(m):
        for j in range(k + 1):
            poly[j] += phi[k] * table[k, j]
    norm2 = 0.0
    for k in range(m):
        norm2 += phi[k] * phi[k]
    nsq = 2 * m - 1
    sq = np.zeros(nsq)
    for i in range(m):
        for j in range(m):
            sq[i + j] += poly[i] * poly[j]
    tail = np.zeros(nsq)
    acc = 0.0
    for j in range(nsq - 1, -1, -1):
        acc += sq[j] * fact[j]
        tail[j] = acc
    tail_poly = np.empty(nsq)
    for j in range(nsq):
        tail_poly[j] = tail[j] / (tail[0] * fact[j])
    return poly, norm2, tail_poly


@njit(cache=True)
def _horner(c, x):
    r = 0.0
    for j in range(c.shape[0] - 1, -1, -1):
        r = r * x + c[j]
    return r


@njit(cache=True)
def _log_abs_expm1(theta, logx):
    if logx < -600.0:
        return math.log(abs(theta)) + logx
    return math.log(abs(math.expm1(-theta * math.exp(logx))))


@njit(cache=True)
def log_h_scalar(code, theta, la, lb):
    """log dC(a, b)/da for a = exp(la), b = exp(lb)."""
    if code == 0:
        return lb
    if code == 1:
        ga = _log_abs_expm1(theta, la)
        gb = _log_abs_expm1(theta, lb)
        prod = math.exp(ga + gb)
        if theta > 0:
            logd = math.log(-math.expm1(-theta) - prod)
        else:
            logd = math.log(math.expm1(-theta) + prod)
        res = -theta * math.exp(la) + gb - logd
    elif code == 2:
        A = -theta * la
        B = -theta * lb
        m = max(A, B)
        lse = m + math.log(math.exp(A - m) + math.exp(B - m) - math.exp(-m))
        res = (-theta - 1.0) * la + (-1.0 / theta - 1.0) * lse
    else:
        x = -la
        y = -lb
        big = max(x, y)
        small = min(x, y)
        logs = theta * math.log(big) + math.log1p((small / big) ** theta)
        res = -math.exp(logs / theta) + (1.0 / theta - 1.0) * logs + (theta - 1.0) * math.log(x) + x
    return min(res, 0.0)


@njit(cache=True)
def _frank_h(theta, em_theta, a, b):
    # dC(a, b)/da for the Frank copula on the linear scale; a, b already clamped
    eb = math.expm1(-theta * b)
    h = math.exp(-theta * a) * eb / (em_theta + math.expm1(-theta * a) * eb)
    return min(max(h, 0.0), 1.0)


@njit(cache=True)
def contributions(y, x, delta, beta, gamma, lam, phi_neg, phi_pos, alpha, sigma_c, code, theta, table, fact):
    """Per-row log-likelihood contributions, clamped and floored."""
    n = y.shape[0]
    p = x.shape[1]
    pn, nn, tn = side_pieces(phi_neg, table, fact)
    pp, np_, tpos = side_pieces(phi_pos, table, fact)
    out = np.empty(n)
    em_theta = math.expm1(-theta) if code == 1 else 0.0
    for i in range(n):
        mu = 0.0
        lg = 0.0
        mc = 0.0
        for k in range(p):
            mu += x[i, k] * beta[k]
            lg += x[i, k] * gamma[k]
            mc += x[i, k] * alpha[k]
        sig = math.exp(lg)
        z = (y[i] - mu) / sig
        if z <= 0:
            uu = (lam - 1.0) * z
            eu = math.exp(-uu)
            F = lam * eu * _horner(tn, uu)
            s = _horner(pn, uu)
            f = lam * (1.0 - lam) * eu * s * s / nn
        else:
            uu = lam * z
            eu = math.exp(-uu)
            F = 1.0 - (1.0 - lam) * eu * _horner(tpos, uu)
            s = _horner(pp, uu)
            f = lam * (1.0 - lam) * eu * s * s / np_
        zc = (y[i] - mc) / sigma_c
        G = 0.5 * math.erfc(-zc / _SQRT2)
        u = min(max(F, _EPS), 1.0 - _EPS)
        v = min(max(G, _EPS), 1.0 - _EPS)
        if delta[i] == 1:
            dens = max(f / sig, _FLOOR)
            if code == 1:
                h = _frank_h(theta, em_theta, u, v)
            else:
                h = math.exp(log_h_scalar(code, theta, math.log(u), math.log(v)))
        else:
            dens = max(math.exp(-0.5 * zc * zc - _LOG_SQRT_2PI) / sigma_c, _FLOOR)
            if code == 1:
                h = _frank_h(theta, em_theta, v, u)
            else:
                h = math.exp(log_h_scalar(code, theta, math.log(v), math.log(u)))
        val = math.log(dens) + math.log(max(1.0 - h, _FLOOR))
        if not math.isfinite(val):
            val = _PENALTY
        out[i] = val
    return out
