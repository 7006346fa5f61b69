"""Exponentially modified Gaussian line shape with a signed tail.

``tau_v > 0`` puts the exponential tail on the high-voltage side, ``tau_v < 0``
mirrors it about ``mu`` and ``tau_v == 0`` is the plain Gaussian.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfcx, log_ndtr

from ..errors import FitError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
#: |tau_v| / sigma below which the Gaussian limit is used directly.
GAUSS_LIMIT = 1e-8


def _density_right(z, sigma, tau):
    """Unit-area density of N(0, sigma^2) convolved with Exp(scale=tau), tau > 0.

    ``z`` is the offset ``x - mu``.
    """
    u = (sigma / tau - z / sigma) / _SQRT2
    out = np.empty_like(z)
    pos = u >= 0
    # u >= 0: scaled complementary error function, no overflow.
    zp = z[pos]
    out[pos] = 0.5 / tau * np.exp(-0.5 * (zp / sigma) ** 2) * erfcx(u[pos])
    # u < 0 (deep in the tail): exp(.) * Phi(.) with a non-positive exponent.
    zn = z[~pos]
    out[~pos] = np.exp(0.5 * (sigma / tau) ** 2 - zn / tau
                       + log_ndtr(zn / sigma - sigma / tau)) / tau
    return out


def exgauss_density(x, mu, sigma, tau_v):
    if not sigma > 0:
        raise FitError(f"sigma must be > 0, got {sigma}")
    if not np.isfinite(tau_v):
        raise FitError(f"tau_v must be finite, got {tau_v}")
    x = np.asarray(x, dtype=float)
    z = np.atleast_1d(x - mu).astype(float)
    if abs(tau_v) < GAUSS_LIMIT * sigma:
        out = np.exp(-0.5 * (z / sigma) ** 2) / (sigma * _SQRT2PI)
    else:
        out = _density_right(z if tau_v > 0 else -z, sigma, abs(tau_v))
    return out.reshape(x.shape) if x.ndim else float(out[0])


def exgauss_value(x, mu, sigma, tau_v, amplitude=1.0, baseline=0.0):
    """``baseline + amplitude * density``; amplitude is the peak area."""
    return baseline + amplitude * exgauss_density(x, mu, sigma, tau_v)


def _dlog_density(x, mu, sigma, tau):
    # d/dx log density for tau > 0: -1/tau + phi(w)/(sigma*Phi(w)).
    w = (x - mu) / sigma - sigma / tau
    mills = math.exp(-0.5 * w * w - log_ndtr(w)) / _SQRT2PI
    return -1.0 / tau + mills / sigma


#: sigma / tau above which the mode comes from the asymptotic Mills ratio.
_ASYMPTOTIC_RATIO = 40.0


def _mode_offset_near_gauss(sigma, tau):
    # The root condition is x / sigma = w + phi(w)/Phi(w) with w = x/sigma - sigma/tau;
    # for w << 0 the right side is -1/w + 2/w^3 - 10/w^5 + 74/w^7, a contraction in x.
    x = tau
    for _ in range(100):
        w = x / sigma - sigma / tau
        x_new = sigma * (-1 / w + 2 / w**3 - 10 / w**5 + 74 / w**7)
        if abs(x_new - x) <= 1e-15 * sigma:
            return x_new
        x = x_new
    return x


def exgauss_mode(mu, sigma, tau_v, xtol=1e-12):
    """Location of the density maximum.

    The log-density is concave, so its derivative has a single root; it is
    bracketed between ``mu`` and ``mu + tau`` and found by Brent's method.
    Close to the Gaussian limit the derivative cancels catastrophically and
    an asymptotic expansion is solved instead.
    """
    if not sigma > 0:
        raise FitError(f"sigma must be > 0, got {sigma}")
    tau = abs(tau_v)
    if tau < GAUSS_LIMIT * sigma:
        return float(mu)
    if sigma > _ASYMPTOTIC_RATIO * tau:
        off = _mode_offset_near_gauss(sigma, tau)
        return float(mu + off if tau_v > 0 else mu - off)
    lo, hi = 0.0, tau
    while _dlog_density(hi, 0.0, sigma, tau) > 0:
        hi *= 2.0
    off = brentq(_dlog_density, lo, hi, args=(0.0, sigma, tau), xtol=xtol * max(sigma, 1e-300),
                 rtol=4 * np.finfo(float).eps)
    return float(mu + off if tau_v > 0 else mu - off)
