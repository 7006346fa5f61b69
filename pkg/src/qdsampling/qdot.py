"""Single quantum-dot photodiode: Stark transduction, pulsed drive, Bloch
dynamics with single-carrier dark states, and the per-cycle photocurrent.

Units: ps, meV, V, rad/ps. Detunings in meV become angular frequencies via
``HBAR_MEV_PS``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields

import numpy as np

from . import _rk
from .errors import ConfigError
from .waveform import PulseSpec, eval_pulse, pulse_slope

HBAR_MEV_PS = 0.6582
PLANCK_MEV_PS = 2 * math.pi * HBAR_MEV_PS
ELEMENTARY_CHARGE = 1.602e-19
FWHM_PER_SIGMA = 2 * math.sqrt(2 * math.log(2))  # 2.3548
TIME_BANDWIDTH_GAUSS = 0.44
#: Integration window on either side of the laser arrival, in envelope FWHMs.
WINDOW_FWHM = 5.0

GG, XX, RE, RH, CR, CI, QX = range(7)
STATE_FIELDS = ("rho_gg", "rho_xx", "rho_e", "rho_h", "coh_re", "coh_im", "q_extracted")


@dataclass(frozen=True)
class QDParams:
    stark_slope: float = 2.52  # meV/V
    v_bias_res: float = -1.1  # V
    gamma_e0: float = 0.02  # 1/ps
    gamma_h0: float = 0.005  # 1/ps
    v_e: float = 0.5  # V, math.inf for bias-independent rates
    v_h: float = 0.5
    gamma_pure0: float = 0.001  # 1/ps
    rep_rate: float = 8e-5  # 1/ps (80 MHz)

    def __post_init__(self):
        if not self.stark_slope > 0:
            raise ConfigError("stark_slope must be > 0", "qd.stark_slope")
        if not math.isfinite(self.v_bias_res):
            raise ConfigError("v_bias_res must be finite", "qd.v_bias_res")
        for name in ("gamma_e0", "gamma_h0", "gamma_pure0"):
            if not getattr(self, name) >= 0:
                raise ConfigError("rate must be >= 0", f"qd.{name}")
        for name in ("v_e", "v_h"):
            if not getattr(self, name) > 0:
                raise ConfigError("voltage scale must be > 0", f"qd.{name}")
        if not self.rep_rate > 0:
            raise ConfigError("rep_rate must be > 0", "qd.rep_rate")

    @property
    def period(self) -> float:
        return 1.0 / self.rep_rate

    def check_drains(self):
        """Raise unless the dot empties well within one repetition period.

        Photocurrent accounting assumes every extracted exciton finishes its
        tunnelling cascade before the next laser pulse.
        """
        ge, gh = tunneling_rates(self, self.v_bias_res)
        for key, g in (("gamma_e0", ge), ("gamma_h0", gh)):
            if not g * self.period > 10:
                raise ConfigError("tunnelling time must be << repetition period "
                                  "(rate * period > 10)", f"qd.{key}")


@dataclass(frozen=True)
class LaserSpec:
    """Gaussian ps pulse. ``fwhm`` is the FWHM of the Rabi-frequency envelope."""

    fwhm: float = 4.5 * math.sqrt(2)
    theta: float = 0.75 * math.pi
    arrival_time: float = 0.0

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ConfigError("fwhm must be > 0", "laser.fwhm")
        if not self.theta >= 0:
            raise ConfigError("pulse area must be >= 0", "laser.theta")

    @classmethod
    def from_intensity_fwhm(cls, intensity_fwhm, theta=0.75 * math.pi, arrival_time=0.0):
        """Laser whose *intensity* (|Omega|^2) has the given FWHM."""
        return cls(intensity_fwhm * math.sqrt(2), theta, arrival_time)

    @property
    def sigma(self) -> float:
        return self.fwhm / FWHM_PER_SIGMA

    @property
    def intensity_fwhm(self) -> float:
        return self.fwhm / math.sqrt(2)

    @property
    def spectral_fwhm(self) -> float:
        """Transform-limited spectral FWHM in meV (Gaussian time-bandwidth product)."""
        return TIME_BANDWIDTH_GAUSS * PLANCK_MEV_PS / self.intensity_fwhm


@dataclass(frozen=True)
class BlochState:
    rho_gg: float
    rho_xx: float
    rho_e: float
    rho_h: float
    coh_re: float
    coh_im: float
    q_extracted: float

    @classmethod
    def from_array(cls, y):
        return cls(*(float(v) for v in np.ravel(y)[:7]))

    def as_array(self):
        return np.array([getattr(self, f.name) for f in fields(self)])

    @property
    def trace(self) -> float:
        return self.rho_gg + self.rho_xx + self.rho_e + self.rho_h


@dataclass(frozen=True)
class BlochTrajectory:
    times: np.ndarray
    states: np.ndarray  # shape (n_times, 7)

    @property
    def final(self) -> BlochState:
        return BlochState.from_array(self.states[-1])

    def __getitem__(self, i) -> BlochState:
        return BlochState.from_array(self.states[i])

    def __len__(self):
        return len(self.times)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t_ps",) + STATE_FIELDS)
            for t, row in zip(self.times, self.states):
                w.writerow([f"{t:.9g}"] + [f"{v:.12g}" for v in row])


def stark_detuning(qd: QDParams, v_bias):
    """Transition detuning (meV) from the laser at reverse bias ``v_bias``."""
    d = qd.stark_slope * (np.asarray(v_bias, dtype=float) - qd.v_bias_res)
    return float(d) if np.ndim(d) == 0 else d


def rabi_envelope(laser: LaserSpec, t):
    sig = laser.sigma
    peak = laser.theta / (sig * math.sqrt(2 * math.pi))
    return peak * np.exp(-0.5 * ((np.asarray(t, dtype=float) - laser.arrival_time) / sig) ** 2)


def tunneling_rates(qd: QDParams, v_bias):
    """Electron and hole tunnelling rates (1/ps); exponential in bias offset."""
    dv = np.asarray(v_bias, dtype=float) - qd.v_bias_res
    ge = qd.gamma_e0 * np.exp(dv / qd.v_e)
    gh = qd.gamma_h0 * np.exp(dv / qd.v_h)
    if np.ndim(v_bias) == 0:
        return float(ge), float(gh)
    return ge, gh


def chirp_at(qd: QDParams, pulse: PulseSpec, t):
    """Instantaneous electric chirp of the transition in meV/ps."""
    return qd.stark_slope * pulse_slope(pulse, t)


def bloch_rhs(qd: QDParams, laser: LaserSpec, bias_fn, thetas=None):
    """Right-hand side ``f(t, y)`` for states of shape ``(7, n_batch)``.

    ``bias_fn(t)`` returns the reverse bias V_P - V_N, scalar or ``(n_batch,)``.
    ``thetas`` optionally gives a pulse area per batch column.
    """
    k_rad = qd.stark_slope / HBAR_MEV_PS
    sig = laser.sigma
    area = laser.theta if thetas is None else np.asarray(thetas, dtype=float)
    peak = area / (sig * math.sqrt(2 * math.pi))
    t_a = laser.arrival_time

    def f(t, y):
        v = bias_fn(t)
        dv = v - qd.v_bias_res
        delta = k_rad * dv
        ge = qd.gamma_e0 * np.exp(dv / qd.v_e)
        gh = qd.gamma_h0 * np.exp(dv / qd.v_h)
        om = peak * math.exp(-0.5 * ((t - t_a) / sig) ** 2)
        gg, xx, re, rh, cr, ci = y[GG], y[XX], y[RE], y[RH], y[CR], y[CI]
        gsum = ge + gh
        gam = 0.5 * gsum + qd.gamma_pure0
        drive = om * ci
        out = np.empty_like(y)
        out[GG] = -drive + ge * re + gh * rh
        out[XX] = drive - gsum * xx
        out[RE] = gh * xx - ge * re
        out[RH] = ge * xx - gh * rh
        out[CR] = -delta * ci - gam * cr
        out[CI] = delta * cr - gam * ci + 0.5 * om * (gg - xx)
        out[QX] = gsum * xx
        return out

    return f


def _initial(n):
    y = np.zeros((7, n))
    y[GG] = 1.0
    return y


def integrate_bloch(qd: QDParams, laser: LaserSpec, bias_fn, t_span, tol=1e-9,
                    max_steps=100_000) -> BlochTrajectory:
    """Integrate one cycle from the ground state with adaptive step control.

    ``bias_fn(t)`` gives the instantaneous reverse bias in volts.
    """
    t0, t1 = t_span
    lo = laser.arrival_time - 5 * laser.fwhm
    hi = laser.arrival_time + 5 * laser.fwhm
    if t0 > lo or t1 < hi:
        raise ConfigError("t_span must cover arrival_time +- 5*fwhm", "t_span")
    f = bloch_rhs(qd, laser, lambda t: bias_fn(t))
    _, times, states = _rk.dopri5(f, t0, t1, _initial(1), rtol=tol, atol=tol,
                                  h0=laser.sigma / 10, max_steps=max_steps, store=True)
    return BlochTrajectory(np.array(times), np.array(states)[:, :, 0])


def integrate_bloch_rk4(qd: QDParams, laser: LaserSpec, bias_fn, t_span, dt=None,
                        thetas=None):
    """Fixed-step fourth-order reference integration; returns the final state.

    With ``thetas`` all pulse areas run in one batch and a list of final
    states (one per area) is returned.
    """
    dt = laser.fwhm / 2000 if dt is None else dt
    n = 1 if thetas is None else len(thetas)
    f = bloch_rhs(qd, laser, lambda t: bias_fn(t), thetas)
    y = _rk.rk4_fixed(f, t_span[0], t_span[1], _initial(n), dt)
    if thetas is None:
        return BlochState.from_array(y[:, 0])
    return [BlochState.from_array(y[:, k]) for k in range(n)]


def extracted_fraction(qd: QDParams, laser: LaserSpec, pulse: PulseSpec, v_n, arrival,
                       tol=1e-8):
    """Electron-hole pairs extracted per cycle for arrays of ``v_n`` and laser arrival times.

    All entries are integrated together over a window of +-5 FWHM around each
    arrival. Exciton population left at the end of the window only leaves the
    dot by tunnelling, so it is counted as extracted.
    """
    v_n, arrival = np.broadcast_arrays(np.asarray(v_n, dtype=float),
                                       np.asarray(arrival, dtype=float))
    shape = v_n.shape
    v_n = v_n.ravel()
    arrival = arrival.ravel()
    if laser.theta == 0:
        return np.zeros(shape)
    local = LaserSpec(laser.fwhm, laser.theta, 0.0)

    def bias(s):
        return eval_pulse(pulse, arrival + s) - v_n

    f = bloch_rhs(qd, local, bias)
    half = WINDOW_FWHM * laser.fwhm
    y, _, _ = _rk.dopri5(f, -half, half, _initial(v_n.size), rtol=tol, atol=tol,
                         h0=laser.sigma / 10)
    q = np.clip(y[QX] + y[XX], 0.0, 1.0)
    return q.reshape(shape)


def photocurrent_single(qd: QDParams, laser: LaserSpec, pulse: PulseSpec, v_n, dt_oe,
                        tol=1e-8):
    """Mean photocurrent (A) for cathode voltage ``v_n`` at optoelectronic delay ``dt_oe``.

    The laser arrives at ``laser.arrival_time + dt_oe`` in pulse time; the dot
    sees the reverse bias ``V_P(t) - v_n``.
    """
    q = extracted_fraction(qd, laser, pulse, v_n, laser.arrival_time + np.asarray(dt_oe), tol)
    i = ELEMENTARY_CHARGE * qd.rep_rate * 1e12 * q
    return float(i) if np.ndim(i) == 0 else i


def max_photocurrent(qd: QDParams) -> float:
    """One extracted pair per laser pulse: ``e * f_rep`` in A."""
    return ELEMENTARY_CHARGE * qd.rep_rate * 1e12
