"""Sampled-waveform assembly, truth comparison and bimodality classification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyReconstructionError
from .fitkit.peaks import BimodalFit, PeakFit
from .qdot import QDParams
from .waveform import PulseSpec, eval_pulse


@dataclass(frozen=True)
class WaveformPoint:
    dt_oe: float
    v: float
    stderr: float
    alt_v: float | None = None
    weight: float | None = None  # weight of the alt_v peak
    n_peaks: int = 1
    weight_hi: float | None = None

    @property
    def bimodal(self) -> bool:
        return self.alt_v is not None


@dataclass
class SampledWaveform:
    points: list
    v_bias_res_used: float
    skipped: list = field(default_factory=list)

    def __post_init__(self):
        dts = [p.dt_oe for p in self.points]
        if any(b <= a for a, b in zip(dts, dts[1:])):
            raise ValueError("dt_oe must be strictly increasing")

    @property
    def dt_oe(self):
        return np.array([p.dt_oe for p in self.points])

    @property
    def v(self):
        return np.array([p.v for p in self.points])

    @property
    def stderr(self):
        return np.array([p.stderr for p in self.points])


def reconstruct_waveform(fits, qd: QDParams) -> SampledWaveform:
    """Map fitted resonance positions back to pulse voltage: ``V_P = V_N + V_B,Res``.

    ``fits`` is an iterable of ``(dt_oe, PeakFit | BimodalFit | None)``. Entries
    that are missing or did not converge are skipped (and listed in
    ``skipped``). Two-peak entries report the dominant peak as ``v`` and the
    other one as ``alt_v`` with its area weight.
    """
    shift = qd.v_bias_res
    points, skipped = [], []
    for dt, fit in sorted(fits, key=lambda e: e[0]):
        if fit is None or not fit.converged:
            skipped.append(dt)
            continue
        if isinstance(fit, BimodalFit):
            dom = fit.dominant
            minor = fit.minor
            w_hi = fit.weight_hi
            if minor is None:
                points.append(WaveformPoint(dt, dom.mode + shift, dom.stderr_mode,
                                            weight_hi=w_hi))
            else:
                w_minor = fit.weight_lo if minor is fit.peak_lo else fit.weight_hi
                points.append(WaveformPoint(dt, dom.mode + shift, dom.stderr_mode,
                                            minor.mode + shift, w_minor, 2, w_hi))
        else:
            points.append(WaveformPoint(dt, fit.mode + shift, fit.stderr_mode))
    if not points:
        raise EmptyReconstructionError("no converged fits to reconstruct from")
    return SampledWaveform(points, shift, skipped)


@dataclass(frozen=True)
class TruthMetrics:
    rms: float
    max_abs: float
    residuals: np.ndarray
    rms_bimodal: float | None
    n_used: int


def compare_to_truth(sampled: SampledWaveform, pulse: PulseSpec, include_bimodal=False,
                     mask=None) -> TruthMetrics:
    """Residuals ``v(dt) - V_P(dt)``; summary stats skip bimodal points by default.

    ``mask`` optionally restricts the summary to a boolean subset of points.
    """
    dt = sampled.dt_oe
    res = sampled.v - eval_pulse(pulse, dt)
    bim = np.array([p.bimodal for p in sampled.points], dtype=bool)
    use = np.ones(len(res), bool) if include_bimodal else ~bim
    if mask is not None:
        use &= np.asarray(mask, dtype=bool)
    r = res[use]
    rms = float(np.sqrt(np.mean(r**2))) if r.size else math.nan
    mx = float(np.max(np.abs(r))) if r.size else math.nan
    rb = res[bim]
    return TruthMetrics(rms, mx, res, float(np.sqrt(np.mean(rb**2))) if rb.size else None,
                        int(use.sum()))


@dataclass(frozen=True)
class DelayClass:
    n_peaks: int
    weight_hi: float


def classify_bimodal(fits, v_lo=None, v_hi=None) -> dict:
    """Per-delay peak count and high-level weight.

    Single-peak entries count as fully high or fully low by proximity to the
    level resonances ``v_lo``/``v_hi`` (in V_N); when not given, the extreme
    single-peak modes are used.
    """
    fits = [(dt, f) for dt, f in fits if f is not None]
    modes = [f.mode for _, f in fits if isinstance(f, PeakFit)]
    modes += [f.dominant.mode for _, f in fits if isinstance(f, BimodalFit)]
    if v_lo is None:
        v_lo = min(modes) if modes else 0.0
    if v_hi is None:
        v_hi = max(modes) if modes else 0.0
    out = {}
    for dt, f in sorted(fits, key=lambda e: e[0]):
        if isinstance(f, BimodalFit):
            out[dt] = DelayClass(f.n_peaks, float(f.weight_hi))
        else:
            hi = abs(f.mode - v_hi) < abs(f.mode - v_lo)
            out[dt] = DelayClass(1, 1.0 if hi else 0.0)
    return out


def weight_transition_steps(classes: dict, step: float, upper=0.75, lower=0.25) -> float:
    """Delay span, in units of ``step``, over which weight_hi falls from
    ``upper`` to ``lower`` (linear interpolation between delays).

    Works for either direction of the transition.
    """
    dts = np.array(sorted(classes))
    w = np.array([classes[d].weight_hi for d in dts])
    t_up = _crossing(dts, w, upper)
    t_lo = _crossing(dts, w, lower)
    if t_up is None or t_lo is None:
        return math.inf
    return abs(t_lo - t_up) / step


def _crossing(t, w, level):
    for a, b, wa, wb in zip(t, t[1:], w, w[1:]):
        if (wa - level) * (wb - level) <= 0 and wa != wb:
            return a + (level - wa) * (b - a) / (wb - wa)
    return None


def count_inversions(classes: dict, decreasing=True, tol=0.0) -> int:
    """Number of consecutive delay pairs that break monotonicity by more than ``tol``."""
    w = [classes[d].weight_hi for d in sorted(classes)]
    sign = -1 if decreasing else 1
    return sum(1 for a, b in zip(w, w[1:]) if sign * (b - a) < -tol)
