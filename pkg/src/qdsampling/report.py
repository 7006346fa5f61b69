"""SVG figures for a finished run: scan overlays, the rebuilt waveform with an
edge zoom and RC fit, and the two-peak weight map for jitter-split edges.
"""
from __future__ import annotations

import numpy as np

from .config import RunConfig
from .errors import FitError
from .fitkit import fit_rc_edge
from .fitkit.exgauss import exgauss_value
from .fitkit.peaks import BimodalFit
from .svgplot import PALETTE, Panel, document
from .waveform import eval_pulse

_PICO = 1e12
MAX_OVERLAY = 10


def _pick(n, k):
    if n <= k:
        return list(range(n))
    return sorted({int(round(j)) for j in np.linspace(0, n - 1, k)})


def scans_svg(scans, fits=None) -> str:
    fit_by_dt = dict(fits or [])
    p = Panel(0, 0, 720, 420, title="Resonance scans", xlabel="V_N (V)",
              ylabel="photocurrent (pA)")
    for c, k in enumerate(_pick(len(scans), MAX_OVERLAY)):
        sc = scans[k]
        col = PALETTE[c % len(PALETTE)]
        p.points(sc.v_n, sc.i_pc * _PICO, color=col, radius=1.6,
                 label=f"{sc.dt_oe:g} ps")
        f = fit_by_dt.get(sc.dt_oe)
        if f is not None:
            x = np.linspace(sc.v_n[0], sc.v_n[-1], 400)
            p.line(x, f(x) * _PICO, color=col, width=1.0, dash="4 2")
    return document([p], 720, 420)


def waveform_svg(wave: dict, cfg: RunConfig) -> str:
    dt, v, err = wave["dt_oe_ps"], wave["v_V"], wave["stderr_mV"] * 1e-3
    full = Panel(0, 0, 720, 380, title="Sampled waveform", xlabel="delay (ps)",
                 ylabel="V_P (V)")
    t = np.linspace(dt.min(), dt.max(), 1200)
    full.line(t, eval_pulse(cfg.pulse, t), color="#2ca02c", label="applied")
    full.points(dt, v, yerr=err, color="#000", label="sampled")

    window = cfg.fit.rc_window
    if window is None:
        c = cfg.pulse.rise_center
        window = (c - 60.0, c + 60.0)
    zoom = Panel(0, 380, 720, 380, title="Edge detail", xlabel="delay (ps)",
                 ylabel="V_P (V)")
    sel = (dt >= window[0]) & (dt <= window[1])
    tz = np.linspace(window[0], window[1], 600)
    zoom.line(tz, eval_pulse(cfg.pulse, tz), color="#2ca02c", label="applied")
    zoom.points(dt[sel], v[sel], yerr=err[sel], color="#000", label="sampled")
    single = sel & ~(wave["n_peaks"] == 2)
    try:
        rc = fit_rc_edge(np.column_stack([dt[single], v[single]]))
    except FitError:
        rc = None
    if rc is not None:
        zoom.line(tz, rc(tz), color="#d62728", dash="5 3", elem_id="rc-fit",
                  label=f"RC fit, tau={rc.tau:.1f} ps")
    zoom.xlim = (window[0], window[1])
    return document([full, zoom], 720, 760)


def bimodal_svg(scans, fits) -> str | None:
    """Weight map plus the most balanced two-peak scan; None if nothing to show."""
    two = [(dt, f) for dt, f in fits if isinstance(f, BimodalFit)]
    if not two:
        return None
    wmap = Panel(0, 0, 720, 340, title="High-level weight", xlabel="delay (ps)",
                 ylabel="weight_hi")
    wmap.points([d for d, _ in two], [f.weight_hi for _, f in two], color="#1f77b4")
    wmap.line([d for d, _ in two], [f.weight_hi for _, f in two], color="#1f77b4", width=1)
    wmap.ylim = (-0.05, 1.05)
    panels = [wmap]
    split = [(dt, f) for dt, f in two if f.n_peaks == 2]
    if split:
        dt, f = min(split, key=lambda e: (abs(e[1].weight_hi - 0.5), e[0]))
        sc = next(s for s in scans if s.dt_oe == dt)
        ov = Panel(0, 340, 720, 380, title=f"Two-peak fit at {dt:g} ps", xlabel="V_N (V)",
                   ylabel="photocurrent (pA)")
        ov.points(sc.v_n, sc.i_pc * _PICO, color="#000", radius=1.8, label="scan")
        x = np.linspace(sc.v_n[0], sc.v_n[-1], 600)
        ov.line(x, f(x) * _PICO, color="#7f7f7f", label="sum")
        for pk, col, name in ((f.peak_lo, "#1f77b4", "low level"),
                              (f.peak_hi, "#d62728", "high level")):
            comp = exgauss_value(x, pk.mu, pk.sigma, pk.tau_v, pk.amplitude, f.baseline)
            ov.line(x, comp * _PICO, color=col, dash="4 2", label=name)
        panels.append(ov)
    height = sum(p.box[3] for p in panels)
    return document(panels, 720, height)
