"""RC edge fits of sampled waveforms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import FitError, RankDeficiencyError
from .lsq import nlls_fit


@dataclass(frozen=True)
class RCFit:
    t0: float
    tau: float
    v_lo: float
    v_hi: float
    stderr_tau: float
    residual_norm: float
    converged: bool

    def __call__(self, t):
        return rc_edge(np.asarray(t, dtype=float), self.t0, self.tau, self.v_lo, self.v_hi)


def rc_edge(t, t0, tau, v_lo, v_hi):
    """``v_lo`` before ``t0``, then an exponential approach to ``v_hi``."""
    s = np.maximum(t - t0, 0.0)
    return v_lo + (v_hi - v_lo) * (1.0 - np.exp(-s / tau))


def _model(t, p):
    t0, tau, v_lo, v_hi = p
    return rc_edge(t, t0, abs(tau), v_lo, v_hi)


def fit_rc_edge(points, window=None) -> RCFit:
    """Fit an RC edge to ``(t, v)`` points inside ``window = (t_min, t_max)``.

    Works for rising and falling edges (the sign of ``v_hi - v_lo``).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    if window is not None:
        sel = (pts[:, 0] >= window[0]) & (pts[:, 0] <= window[1])
        pts = pts[sel]
    if len(pts) < 5:
        raise FitError(f"RC fit needs >= 5 points in the window, got {len(pts)}")
    t, v = pts[:, 0], pts[:, 1]
    k = max(1, len(v) // 10)
    v_lo0 = float(np.median(v[:k]))
    v_hi0 = float(np.median(v[-k:]))
    swing = v_hi0 - v_lo0
    if swing == 0 or np.ptp(v) == 0:
        raise RankDeficiencyError("no edge in the window: data are flat")
    frac = (v - v_lo0) / swing
    start = np.where(frac > 0.1)[0]
    t10 = t[start[0]] if len(start) else t[0]
    reach = np.where(frac > 1 - math.exp(-1))[0]
    t63 = t[reach[0]] if len(reach) else t[-1]
    tau0 = max(t63 - t10, np.min(np.diff(t))) / (1 - 0.1 / (1 - math.exp(-1)))
    t00 = t10 - tau0 * 0.105  # 1 - exp(-0.105) ~ 0.1
    p0 = np.array([t00, tau0, v_lo0, v_hi0])
    x_scale = np.array([tau0, tau0, abs(swing), abs(swing)])
    res = nlls_fit(_model, t, v, p0, x_scale=x_scale)
    t0, tau, v_lo, v_hi = res.params
    return RCFit(float(t0), float(abs(tau)), float(v_lo), float(v_hi), float(res.stderr[1]),
                 res.residual_norm, res.converged)
