"""End-to-end steps shared by the command line and the test-suite:
simulate scans, fit them, rebuild the waveform and summarise it.
"""
from __future__ import annotations

import logging
import math

import numpy as np

from .bench import run_sampling_experiment
from .config import RunConfig
from .errors import FitError
from .fitkit import fit_double_exgauss, fit_exgauss, fit_rc_edge
from .recon import (
    classify_bimodal,
    compare_to_truth,
    count_inversions,
    reconstruct_waveform,
    weight_transition_steps,
)

log = logging.getLogger(__name__)


def simulate(cfg: RunConfig, workers=1, progress=None, errors=None):
    """Resonance scans for every delay of the run."""
    return run_sampling_experiment(cfg.qd, cfg.laser, cfg.pulse, cfg.bench, cfg.dt_grid,
                                   workers=workers, progress=progress, errors=errors)


def fit_scan(scan, cfg: RunConfig):
    """Single- or two-peak fit depending on ``cfg.fit.bimodal``; None on failure."""
    try:
        if cfg.fit.bimodal:
            return fit_double_exgauss(scan, cfg.fit.v_lo_hint, cfg.fit.v_hi_hint)
        return fit_exgauss(scan)
    except FitError as exc:
        log.warning("fit at dt_oe=%g ps failed: %s", scan.dt_oe, exc)
        return None


def fit_scans(scans, cfg: RunConfig):
    return [(sc.dt_oe, fit_scan(sc, cfg)) for sc in scans]


def _nearest_edge(cfg: RunConfig, window):
    """(center, true tau) of the pulse edge closest to the window midpoint."""
    mid = 0.5 * (window[0] + window[1])
    p = cfg.pulse
    period = p.period
    best = None
    for center, tau in ((p.rise_center, p.tau_rise), (p.fall_center, p.tau_fall)):
        c = center + period * round((mid - center) / period)
        if best is None or abs(c - mid) < abs(best[0] - mid):
            best = (c, tau)
    return best


def edge_metrics(sampled, cfg: RunConfig, window=None) -> dict:
    """RC fit of the reconstructed edge inside ``window`` plus off-edge residuals."""
    window = window or cfg.fit.rc_window
    if window is None:
        return {}
    dt, v = sampled.dt_oe, sampled.v
    sel = (dt >= window[0]) & (dt <= window[1])
    bim = np.array([p.bimodal for p in sampled.points], dtype=bool)
    sel &= ~bim
    out = {"rc_window_ps": list(window)}
    try:
        rc = fit_rc_edge(np.column_stack([dt[sel], v[sel]]))
    except FitError as exc:
        log.warning("RC edge fit failed: %s", exc)
        out.update(tau_fit_ps=None, tau_stderr_ps=None, t0_fit_ps=None)
    else:
        out.update(tau_fit_ps=rc.tau, tau_stderr_ps=rc.stderr_tau, t0_fit_ps=rc.t0,
                   rc_v_lo_V=rc.v_lo, rc_v_hi_V=rc.v_hi)
    center, tau_true = _nearest_edge(cfg, window)
    off = sel & (np.abs(dt - center) >= tau_true)
    tm = compare_to_truth(sampled, cfg.pulse, mask=off)
    out.update(edge_center_ps=center, tau_true_ps=tau_true,
               max_abs_offedge_mV=tm.max_abs * 1e3, n_offedge=tm.n_used)
    return out


def reconstruct(fits, cfg: RunConfig):
    """Return ``(SampledWaveform, metrics dict)``; raises on an empty fit list."""
    sampled = reconstruct_waveform(fits, cfg.qd)
    truth = compare_to_truth(sampled, cfg.pulse)
    stderr = sampled.stderr
    metrics = {
        "n_points": len(sampled.points),
        "n_skipped": len(sampled.skipped),
        "skipped_dt_ps": list(sampled.skipped),
        "n_bimodal": sum(p.bimodal for p in sampled.points),
        "rms_mV": truth.rms * 1e3,
        "max_abs_mV": truth.max_abs * 1e3,
        "stderr_rms_mV": float(np.sqrt(np.mean(stderr**2))) * 1e3,
        "rms_bimodal_mV": None if truth.rms_bimodal is None else truth.rms_bimodal * 1e3,
    }
    metrics.update(edge_metrics(sampled, cfg))
    if cfg.fit.bimodal:
        classes = classify_bimodal(fits, cfg.fit.v_lo_hint, cfg.fit.v_hi_hint)
        steps = weight_transition_steps(classes, cfg.dt_step)
        metrics["weight_transition_steps"] = steps if math.isfinite(steps) else None
        metrics["weight_inversions"] = count_inversions(classes, tol=0.05)
    return sampled, metrics
