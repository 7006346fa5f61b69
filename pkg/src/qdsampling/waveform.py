"""Parametric model of the electric transient applied to the dot's Schottky gate.

Times are in ps and voltages in V throughout. A pulse is one RC rising edge,
a plateau, and one RC falling edge, repeated every ``period``. Optional
extras are a Gaussian feed-through undershoot and damped ringing after the
rising edge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

#: 80 MHz laser repetition interval.
REPETITION_PERIOD_PS = 12_500.0


@dataclass(frozen=True)
class Feedthrough:
    """Negative Gaussian dip caused by gate-to-drain coupling in the driver."""

    t_center: float = -30.0
    width_sigma: float = 5.0
    depth: float = 0.0

    def __post_init__(self):
        if not self.depth >= 0:
            raise ConfigError("depth must be >= 0", "feedthrough.depth")
        if not self.width_sigma > 0:
            raise ConfigError("width_sigma must be > 0", "feedthrough.width_sigma")
        if not math.isfinite(self.t_center):
            raise ConfigError("t_center must be finite", "feedthrough.t_center")


@dataclass(frozen=True)
class Ringing:
    """One damped sinusoid ``amplitude * exp(-damping*s) * sin(2*pi*frequency*s + phase)``."""

    amplitude: float
    frequency: float
    damping: float
    phase: float = 0.0

    def __post_init__(self):
        for name in ("amplitude", "frequency", "damping", "phase"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError("must be finite", f"ringing.{name}")
        if self.damping < 0:
            raise ConfigError("damping must be >= 0", "ringing.damping")


@dataclass(frozen=True)
class PulseSpec:
    v_low: float = 0.0
    v_high: float = 1.2
    t_rise_start: float = 0.0
    tau_rise: float = 15.0
    plateau_width: float = 1300.0
    tau_fall: float = 12.0
    feedthrough: Feedthrough | None = None
    ringing: tuple[Ringing, ...] = field(default_factory=tuple)
    period: float = REPETITION_PERIOD_PS

    def __post_init__(self):
        object.__setattr__(self, "ringing", tuple(self.ringing))
        for name in ("v_low", "v_high", "t_rise_start"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError("must be finite", f"pulse.{name}")
        for name in ("tau_rise", "tau_fall", "plateau_width", "period"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be > 0", f"pulse.{name}")
        if not self.period > self.plateau_width:
            raise ConfigError("period must exceed plateau_width", "pulse.period")
        swing = abs(self.v_high - self.v_low)
        scale = swing if swing > 0 else 1.0
        if self._start_offset() * swing > 1e-3 * scale:
            raise ConfigError(
                "falling edge does not return to v_low within one period "
                "(relative residual >= 1e-3)",
                "pulse.tau_fall",
            )
        if self.wrap_residual() >= 1e-3 * scale:
            raise ConfigError(
                "ringing/feed-through do not decay within one period "
                "(relative residual >= 1e-3)",
                "pulse.ringing",
            )

    @property
    def swing(self) -> float:
        return self.v_high - self.v_low

    def _start_offset(self) -> float:
        # Fraction of the swing still left from the previous falling edge
        # when the next rising edge starts. Solves the periodic fixed point.
        a = math.exp(-self.plateau_width / self.tau_rise)
        b = math.exp(-(self.period - self.plateau_width) / self.tau_fall)
        return b * (1.0 - a) / (1.0 - a * b)

    def wrap_residual(self) -> float:
        """Bound on the jump the extras introduce at the period boundary."""
        res = sum(abs(r.amplitude) * math.exp(-r.damping * self.period) for r in self.ringing)
        ft = self.feedthrough
        if ft is not None and ft.depth > 0:
            half = 0.5 * self.period
            res += ft.depth * math.exp(-half * half / (2 * ft.width_sigma**2))
        return res

    @property
    def edge_levels(self) -> tuple[float, float]:
        """(value at rise start, value at fall start) of the bare edges."""
        v_start = self.v_low + self._start_offset() * self.swing
        a = math.exp(-self.plateau_width / self.tau_rise)
        v_fall = self.v_high - (self.v_high - v_start) * a
        return v_start, v_fall

    @property
    def rise_center(self) -> float:
        """Time of the 50 % crossing on the rising edge."""
        return self.t_rise_start + self.tau_rise * math.log(2.0)

    @property
    def fall_center(self) -> float:
        """Time of the 50 % crossing on the falling edge."""
        return self.t_rise_start + self.plateau_width + self.tau_fall * math.log(2.0)


def _local_time(spec: PulseSpec, t):
    return np.mod(np.asarray(t, dtype=float) - spec.t_rise_start, spec.period)


def _wrapped(spec: PulseSpec, dt):
    half = 0.5 * spec.period
    return np.mod(dt + half, spec.period) - half


def _scalar_or_array(t, out):
    return float(out) if np.ndim(t) == 0 else out


def eval_pulse(spec: PulseSpec, t):
    """Pulse voltage at time(s) ``t`` (scalar or array), evaluated modulo the period."""
    s = _local_time(spec, t)
    v_start, v_fall = spec.edge_levels
    w = spec.plateau_width
    rising = s < w
    e_rise = np.exp(-np.where(rising, s, 0.0) / spec.tau_rise)
    e_fall = np.exp(-np.where(rising, 0.0, s - w) / spec.tau_fall)
    out = np.where(rising, spec.v_high - (spec.v_high - v_start) * e_rise,
                   spec.v_low + (v_fall - spec.v_low) * e_fall)
    if spec.ringing:
        env = 1.0 - np.exp(-s / spec.tau_rise)
        for r in spec.ringing:
            osc = np.sin(2 * np.pi * r.frequency * s + r.phase)
            out = out + r.amplitude * np.exp(-r.damping * s) * osc * env
    ft = spec.feedthrough
    if ft is not None and ft.depth > 0:
        d = _wrapped(spec, np.asarray(t, dtype=float) - ft.t_center)
        out = out - ft.depth * np.exp(-0.5 * (d / ft.width_sigma) ** 2)
    return _scalar_or_array(t, out)


def pulse_slope(spec: PulseSpec, t):
    """Analytic dV/dt in V/ps; right-hand derivative at segment junctions."""
    s = _local_time(spec, t)
    v_start, v_fall = spec.edge_levels
    w = spec.plateau_width
    rising = s < w
    e_rise = np.exp(-np.where(rising, s, 0.0) / spec.tau_rise)
    e_fall = np.exp(-np.where(rising, 0.0, s - w) / spec.tau_fall)
    out = np.where(rising, (spec.v_high - v_start) / spec.tau_rise * e_rise,
                   -(v_fall - spec.v_low) / spec.tau_fall * e_fall)
    if spec.ringing:
        e_r = np.exp(-s / spec.tau_rise)
        env = 1.0 - e_r
        denv = e_r / spec.tau_rise
        for r in spec.ringing:
            omega = 2 * np.pi * r.frequency
            damp = np.exp(-r.damping * s)
            sin = np.sin(omega * s + r.phase)
            cos = np.cos(omega * s + r.phase)
            out = out + r.amplitude * damp * ((-r.damping * sin + omega * cos) * env + sin * denv)
    ft = spec.feedthrough
    if ft is not None and ft.depth > 0:
        d = _wrapped(spec, np.asarray(t, dtype=float) - ft.t_center)
        out = out + ft.depth * d / ft.width_sigma**2 * np.exp(-0.5 * (d / ft.width_sigma) ** 2)
    return _scalar_or_array(t, out)


def make_cmos_pulse(
    v_dd: float = 1.2,
    polarity: int = 1,
    tau_rise: float = 15.0,
    tau_fall: float = 12.0,
    width: float = 1300.0,
    *,
    v_ss: float = 0.0,
    t_rise_start: float = 0.0,
    feedthrough: Feedthrough | None = None,
    ringing=(),
    period: float = REPETITION_PERIOD_PS,
) -> PulseSpec:
    """Output pulse of the CMOS driver: swing ``v_dd`` above (or below, for
    ``polarity=-1``) the ``v_ss`` baseline, ``width`` ps from rise start to
    fall start, repeated at the laser period.
    """
    if not v_dd > 0:
        raise ConfigError("v_dd must be > 0", "pulse.v_dd")
    if polarity not in (1, -1):
        raise ConfigError("polarity must be +1 or -1", "pulse.polarity")
    for key, val in (("tau_rise", tau_rise), ("tau_fall", tau_fall), ("width", width)):
        if not val > 0:
            raise ConfigError("must be > 0", f"pulse.{key}")
    return PulseSpec(
        v_low=v_ss,
        v_high=v_ss + polarity * v_dd,
        t_rise_start=t_rise_start,
        tau_rise=tau_rise,
        plateau_width=width,
        tau_fall=tau_fall,
        feedthrough=feedthrough,
        ringing=tuple(ringing),
        period=period,
    )
