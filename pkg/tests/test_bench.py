import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdsampling import bench
from qdsampling.bench import (
    BenchConfig,
    ResonanceScan,
    add_readout_noise,
    clean_scan_currents,
    jitter_average,
    jitter_nodes,
    noisy_scan,
    point_rng,
    resonance_scan,
    run_sampling_experiment,
)
from qdsampling.errors import ConfigError, IntegrationError
from qdsampling.qdot import LaserSpec, max_photocurrent

COARSE = dict(v_n_start=1.9, v_n_stop=2.7, v_n_step=0.05)


def test_noise_sigma():
    assert BenchConfig().noise_sigma == pytest.approx(30e-15 * math.sqrt(5), rel=1e-12)
    assert BenchConfig().noise_sigma == pytest.approx(67.08e-15, rel=1e-3)


def test_grid():
    g = BenchConfig().v_n_grid()
    assert len(g) == 121 and g[0] == 0.8 and g[-1] == pytest.approx(2.6)


@pytest.mark.parametrize("kwargs", [dict(jitter_sigma=-1), dict(jitter_method="x"),
                                    dict(n_samples=0), dict(v_n_stop=0.5), dict(seed=-1),
                                    dict(seed=2**64)])
def test_bad_config(kwargs):
    with pytest.raises(ConfigError):
        BenchConfig(**kwargs)


def test_scan_validation():
    with pytest.raises(ValueError):
        ResonanceScan(0.0, np.arange(5.0), np.zeros(5))
    with pytest.raises(ValueError):
        ResonanceScan(0.0, np.arange(10.0)[::-1], np.zeros(10))
    s = ResonanceScan(1.0, np.arange(10.0), np.ones(10))
    assert s.points[2] == (2.0, 1.0)


def test_point_streams_independent():
    a = point_rng(7, 12.0, 3).normal(size=4)
    assert np.array_equal(a, point_rng(7, 12.0, 3).normal(size=4))
    for other in (point_rng(8, 12.0, 3), point_rng(7, 13.0, 3), point_rng(7, 12.0, 4),
                  point_rng(7, 12.0, 3, stream=1)):
        assert not np.array_equal(a, other.normal(size=4))


@settings(max_examples=50, deadline=None)
@given(d=st.floats(-50, 50), sig=st.floats(0.1, 20))
def test_hermite_exact_for_polynomials(d, sig):
    cfg = BenchConfig(jitter_sigma=sig, jitter_order=6)
    got = jitter_average(lambda t: t**4, d, cfg)
    exact = d**4 + 6 * d**2 * sig**2 + 3 * sig**4
    assert got == pytest.approx(exact, rel=1e-10, abs=1e-10)


def test_hermite_weights_sum_to_one():
    off, w = jitter_nodes(BenchConfig(jitter_sigma=3.0, jitter_order=40))
    assert w.sum() == pytest.approx(1.0)
    assert off @ w == pytest.approx(0.0, abs=1e-12)
    assert (off**2) @ w == pytest.approx(9.0)


def test_monte_carlo_mean():
    cfg = BenchConfig(jitter_sigma=5.0, jitter_method="monte_carlo", n_samples=100_000)
    rng = np.random.default_rng(1)
    m = jitter_average(lambda t: t, 10.0, cfg, rng)
    assert abs(m - 10.0) < 4 * 5.0 / math.sqrt(1e5)


def test_readout_noise_std():
    cfg = BenchConfig()
    draws = add_readout_noise(np.zeros(100_000), cfg, np.random.default_rng(3))
    assert draws.std() == pytest.approx(cfg.noise_sigma, rel=0.02)
    assert add_readout_noise(1.0, BenchConfig(noise_density=0), None) == 1.0


def test_zero_area_gives_zero_current(qd, pulse):
    cfg = BenchConfig(noise_density=0, **COARSE)
    scan = resonance_scan(qd, LaserSpec(theta=0.0), pulse, cfg, 600.0)
    assert np.all(scan.i_pc == 0)


def test_plateau_scan_peaks_at_resonance(qd, laser, pulse):
    cfg = BenchConfig(noise_density=0, v_n_start=2.0, v_n_stop=2.6, v_n_step=0.01)
    i = clean_scan_currents(qd, laser, pulse, cfg, 650.0)
    v_res = pulse.v_high - qd.v_bias_res
    assert abs(cfg.v_n_grid()[np.argmax(i)] - v_res) <= cfg.v_n_step + 1e-12
    assert np.all(i <= max_photocurrent(qd) * (1 + 1e-12))


def test_noise_is_reproducible_and_local(qd, laser, pulse):
    cfg = BenchConfig(seed=11, **COARSE)
    clean = clean_scan_currents(qd, laser, pulse, cfg, 600.0)
    a, b = noisy_scan(clean, cfg, 600.0), noisy_scan(clean, cfg, 600.0)
    assert np.array_equal(a.i_pc, b.i_pc)
    c = noisy_scan(clean, cfg, 600.0, seed=12)
    assert not np.array_equal(a.i_pc, c.i_pc)
    assert a.meta["seed"] == 11


def test_experiment_sorted_and_order_free(qd, laser, pulse):
    cfg = BenchConfig(seed=5, **COARSE)
    fwd = run_sampling_experiment(qd, laser, pulse, cfg, [600.0, -50.0, 20.0])
    rev = run_sampling_experiment(qd, laser, pulse, cfg, [20.0, 600.0, -50.0])
    assert [s.dt_oe for s in fwd] == [-50.0, 20.0, 600.0]
    for a, b in zip(fwd, rev):
        assert np.array_equal(a.i_pc, b.i_pc)
    sub = run_sampling_experiment(qd, laser, pulse, cfg, [20.0])
    assert np.array_equal(sub[0].i_pc, fwd[1].i_pc)


def test_experiment_rejects_bad_grid(qd, laser, pulse):
    cfg = BenchConfig(**COARSE)
    with pytest.raises(ConfigError):
        run_sampling_experiment(qd, laser, pulse, cfg, [])
    with pytest.raises(ConfigError):
        run_sampling_experiment(qd, laser, pulse, cfg, [1.0, 1.0])


def test_failed_delay_is_skipped(qd, laser, pulse, monkeypatch):
    real = bench.resonance_scan

    def flaky(qd, laser, pulse, cfg, dt):
        if dt == 20.0:
            raise IntegrationError("step size underflow")
        return real(qd, laser, pulse, cfg, dt)

    monkeypatch.setattr(bench, "resonance_scan", flaky)
    errors, seen = {}, []
    scans = run_sampling_experiment(qd, laser, pulse, BenchConfig(**COARSE), [0.0, 20.0, 40.0],
                                    errors=errors, progress=lambda k, n, dt: seen.append((k, n)))
    assert [s.dt_oe for s in scans] == [0.0, 40.0]
    assert "underflow" in errors[20.0]
    assert seen == [(1, 3), (2, 3), (3, 3)]


@pytest.mark.parametrize("method", ["gauss_hermite", "monte_carlo"])
def test_jitter_average_identities(method):
    cfg = BenchConfig(jitter_sigma=4.0, jitter_method=method, jitter_order=2)
    rng = np.random.default_rng(0)
    assert jitter_average(lambda t: np.full(np.shape(t), 3.0), 5.0, cfg, rng) == pytest.approx(3.0)
    if method == "gauss_hermite":
        assert jitter_average(lambda t: 2 * t + 1, 5.0, cfg) == pytest.approx(11.0, abs=1e-12)
    assert jitter_average(lambda t: 2 * t + 1, 5.0, BenchConfig()) == 11.0


def test_noise_mean():
    cfg = BenchConfig()
    draws = add_readout_noise(np.full(100_000, 1e-12), cfg, np.random.default_rng(4))
    assert abs(draws.mean() - 1e-12) < 3 * cfg.noise_sigma / math.sqrt(1e5)


def test_single_delay_matches_resonance_scan(qd, laser, pulse):
    cfg = BenchConfig(seed=8, **COARSE)
    (one,) = run_sampling_experiment(qd, laser, pulse, cfg, [13.0])
    assert np.array_equal(one.i_pc, resonance_scan(qd, laser, pulse, cfg, 13.0).i_pc)
