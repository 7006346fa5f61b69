import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from qdsampling.errors import ConfigError
from qdsampling.qdot import (
    HBAR_MEV_PS,
    LaserSpec,
    QDParams,
    chirp_at,
    extracted_fraction,
    integrate_bloch,
    max_photocurrent,
    photocurrent_single,
    stark_detuning,
    tunneling_rates,
)
from qdsampling.waveform import make_cmos_pulse


def reference_populations(qd, laser, bias_fn, t0, t1):
    """Density matrix on {g, x} plus the two single-carrier states, written
    from H = delta |x><x| + Omega/2 (|x><g| + h.c.) with hbar = 1."""
    sig = laser.sigma
    peak = laser.theta / (sig * math.sqrt(2 * math.pi))

    def rhs(t, y):
        gg, xx, re, rh, gx_r, gx_i, q = y
        gx = gx_r + 1j * gx_i
        dv = bias_fn(t) - qd.v_bias_res
        delta = qd.stark_slope * dv / HBAR_MEV_PS
        ge = qd.gamma_e0 * math.exp(dv / qd.v_e)
        gh = qd.gamma_h0 * math.exp(dv / qd.v_h)
        om = peak * math.exp(-0.5 * ((t - laser.arrival_time) / sig) ** 2)
        dgx = -1j * (0.5 * om * (xx - gg) - delta * gx) - (0.5 * (ge + gh) + qd.gamma_pure0) * gx
        dxx = om * gx.imag - (ge + gh) * xx
        return [-om * gx.imag + ge * re + gh * rh, dxx, gh * xx - ge * re, ge * xx - gh * rh,
                dgx.real, dgx.imag, (ge + gh) * xx]

    sol = solve_ivp(rhs, (t0, t1), [1, 0, 0, 0, 0, 0, 0], method="DOP853", rtol=1e-11,
                    atol=1e-13)
    y = sol.y[:, -1]
    return y[:4], math.hypot(y[4], y[5]), y[6]


def test_detuning_zero_at_resonance(qd):
    assert stark_detuning(qd, qd.v_bias_res) == 0.0
    assert stark_detuning(qd, qd.v_bias_res + 0.1) == pytest.approx(0.252)


def test_spectral_width():
    laser = LaserSpec()
    assert laser.intensity_fwhm == pytest.approx(4.5)
    assert laser.spectral_fwhm == pytest.approx(0.44 * 2 * math.pi * 0.6582 / 4.5)


def test_tunneling_law(qd):
    ge, gh = tunneling_rates(qd, qd.v_bias_res)
    assert (ge, gh) == pytest.approx((qd.gamma_e0, qd.gamma_h0))
    ge2, _ = tunneling_rates(qd, qd.v_bias_res + qd.v_e)
    assert ge2 == pytest.approx(math.e * qd.gamma_e0)


def test_max_current():
    assert max_photocurrent(QDParams()) == pytest.approx(1.602e-19 * 80e6)


@pytest.mark.parametrize("bias_kind", ["static", "ramp"])
def test_matches_reference_model(qd, laser, bias_kind):
    if bias_kind == "static":
        bias = lambda t: qd.v_bias_res + 0.05  # noqa: E731
    else:
        bias = lambda t: qd.v_bias_res - 0.1 + 0.02 * t  # noqa: E731
    half = 5 * laser.fwhm
    traj = integrate_bloch(qd, laser, bias, (-half, half), tol=1e-10)
    pops, coh, q = reference_populations(qd, laser, bias, -half, half)
    s = traj.final
    assert np.allclose([s.rho_gg, s.rho_xx, s.rho_e, s.rho_h], pops, atol=1e-7)
    assert math.hypot(s.coh_re, s.coh_im) == pytest.approx(coh, abs=1e-7)
    assert s.q_extracted == pytest.approx(q, abs=1e-7)


def test_ideal_rabi_flop(ideal_qd):
    laser = LaserSpec(theta=math.pi)
    bias = lambda t: ideal_qd.v_bias_res  # noqa: E731
    s = integrate_bloch(ideal_qd, laser, bias, (-40, 40), tol=1e-11).final
    assert s.rho_xx == pytest.approx(1.0, abs=1e-8)
    assert s.trace == pytest.approx(1.0, abs=1e-10)


def test_short_span_rejected(qd, laser):
    with pytest.raises(ConfigError):
        integrate_bloch(qd, laser, lambda t: -1.1, (-5.0, 5.0))


def test_trajectory_csv(tmp_path, qd, laser):
    traj = integrate_bloch(qd, laser, lambda t: -1.1, (-40, 40))
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("t_ps,rho_gg,rho_xx")
    assert len(lines) == len(traj) + 1


def test_zero_area_extracts_nothing(qd, pulse):
    laser = LaserSpec(theta=0.0)
    assert np.all(extracted_fraction(qd, laser, pulse, np.linspace(1, 2.5, 5), 600.0) == 0)


def test_extracted_fraction_broadcasts(qd, laser, pulse):
    v_n = np.linspace(2.0, 2.6, 4)
    batch = extracted_fraction(qd, laser, pulse, v_n[:, None], np.array([600.0, 700.0]))
    assert batch.shape == (4, 2)
    one = extracted_fraction(qd, laser, pulse, v_n[1], 700.0)
    assert float(one) == pytest.approx(batch[1, 1], abs=1e-7)


@settings(max_examples=15, deadline=None)
@given(v_n=st.floats(0.8, 2.6), dt=st.floats(-100.0, 1500.0))
def test_current_bounded(v_n, dt):
    i = photocurrent_single(QDParams(), LaserSpec(), make_cmos_pulse(), v_n, dt)
    assert 0.0 <= i <= max_photocurrent(QDParams()) * (1 + 1e-12)


def test_resonant_current_peaks_on_plateau(qd, laser, pulse):
    v_res = 1.2 - qd.v_bias_res
    i = photocurrent_single(qd, laser, pulse, np.array([v_res - 0.2, v_res, v_res + 0.2]), 650.0)
    assert i[1] > i[0] and i[1] > i[2]


def test_drain_check():
    QDParams().check_drains()
    with pytest.raises(ConfigError):
        QDParams(gamma_h0=1e-6).check_drains()


def test_chirp_values(qd):
    p = make_cmos_pulse(tau_rise=16.7)
    assert chirp_at(qd, p, 650.0) == pytest.approx(0.0, abs=1e-12)
    assert chirp_at(qd, p, 0.0) == pytest.approx(2.52 * 1.2 / 16.7, rel=1e-9)
    assert chirp_at(qd, p, p.plateau_width + 1.0) < 0


@pytest.mark.parametrize("theta", [0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi, 2 * math.pi])
def test_rabi_areas(ideal_qd, theta):
    laser = LaserSpec(theta=theta)
    s = integrate_bloch(ideal_qd, laser, lambda t: ideal_qd.v_bias_res, (-40, 40), tol=1e-10)
    assert s.final.rho_xx == pytest.approx(math.sin(theta / 2) ** 2, abs=1e-6)


def test_far_detuned_pulse_does_nothing(ideal_qd):
    laser = LaserSpec(theta=math.pi)
    far = 100 * laser.spectral_fwhm / ideal_qd.stark_slope
    s = integrate_bloch(ideal_qd, laser, lambda t: ideal_qd.v_bias_res + far, (-40, 40)).final
    assert s.rho_xx < 1e-3


def test_tolerance_convergence(qd, laser):
    bias = lambda t: qd.v_bias_res + 0.03  # noqa: E731
    a = integrate_bloch(qd, laser, bias, (-40, 40), tol=1e-7).final.rho_xx
    b = integrate_bloch(qd, laser, bias, (-40, 40), tol=5e-8).final.rho_xx
    assert abs(a - b) < 10 * 1e-7


def test_low_level_resonance_at_1p1(qd, laser, pulse):
    v_n = np.round(np.arange(0.9, 1.3, 0.005), 6)
    i = photocurrent_single(qd, laser, pulse, v_n, -300.0)
    assert abs(v_n[np.argmax(i)] - 1.1) <= 0.005
