import math

import numpy as np
import pytest

from qdsampling.errors import EmptyReconstructionError
from qdsampling.fitkit import BimodalFit, PeakFit
from qdsampling.recon import (
    DelayClass,
    SampledWaveform,
    WaveformPoint,
    classify_bimodal,
    compare_to_truth,
    count_inversions,
    reconstruct_waveform,
    weight_transition_steps,
)


def peak(mode, converged=True, stderr=1e-4):
    return PeakFit(mu=mode, sigma=0.04, tau_v=0.0, amplitude=1e-13, baseline=0.0, mode=mode,
                   stderr_mode=stderr, residual_norm=0.0, converged=converged)


def test_mode_maps_to_pulse_voltage(qd):
    w = reconstruct_waveform([(5.0, peak(2.3)), (-5.0, peak(1.1))], qd)
    assert w.dt_oe.tolist() == [-5.0, 5.0]
    assert np.allclose(w.v, [0.0, 1.2])
    assert w.v_bias_res_used == qd.v_bias_res


def test_skips_failed_and_unconverged(qd):
    w = reconstruct_waveform([(0.0, None), (7.0, peak(2.3, converged=False)), (14.0, peak(2.3))],
                             qd)
    assert w.skipped == [0.0, 7.0] and len(w.points) == 1


def test_empty_reconstruction(qd):
    with pytest.raises(EmptyReconstructionError):
        reconstruct_waveform([(0.0, None)], qd)


def test_bimodal_points(qd):
    two = BimodalFit(peak(1.1), peak(2.3), 0.3, 0.7, 0.0, 0.0, True)
    one = BimodalFit(peak(1.1), None, 1.0, 0.0, 0.0, 0.0, True)
    w = reconstruct_waveform([(0.0, two), (7.0, one)], qd)
    a, b = w.points
    assert a.v == pytest.approx(1.2) and a.alt_v == pytest.approx(0.0)
    assert a.weight == pytest.approx(0.3) and a.n_peaks == 2 and a.bimodal
    assert b.v == pytest.approx(0.0) and not b.bimodal and b.weight_hi == 0.0


def test_points_must_increase():
    with pytest.raises(ValueError):
        SampledWaveform([WaveformPoint(1.0, 0, 0), WaveformPoint(1.0, 0, 0)], -1.1)


def test_compare_to_truth(pulse):
    pts = [WaveformPoint(-100.0, 0.003, 1e-3), WaveformPoint(650.0, 1.196, 1e-3),
           WaveformPoint(700.0, 1.2, 1e-3, alt_v=0.0, weight=0.4, n_peaks=2)]
    m = compare_to_truth(SampledWaveform(pts, -1.1), pulse)
    assert m.n_used == 2
    assert m.rms == pytest.approx(math.sqrt((0.003**2 + 0.004**2) / 2))
    assert m.max_abs == pytest.approx(0.004)
    assert m.rms_bimodal == pytest.approx(0.0, abs=1e-12)
    masked = compare_to_truth(SampledWaveform(pts, -1.1), pulse, mask=[True, False, True])
    assert masked.n_used == 1


def test_classify_single_peaks_by_proximity():
    fits = [(0.0, peak(2.28)), (7.0, peak(1.15)), (14.0, None)]
    c = classify_bimodal(fits, 1.1, 2.3)
    assert c == {0.0: DelayClass(1, 1.0), 7.0: DelayClass(1, 0.0)}


def test_transition_width_interpolates():
    w = {0.0: 1.0, 7.0: 0.8, 14.0: 0.5, 21.0: 0.2, 28.0: 0.0}
    classes = {d: DelayClass(1, v) for d, v in w.items()}
    # 0.75 crossed at 7 + 7/6, 0.25 at 14 + 7*5/6
    assert weight_transition_steps(classes, 7.0) == pytest.approx((14 + 35 / 6 - 7 - 7 / 6) / 7)
    rising = {d: DelayClass(1, 1 - v) for d, v in w.items()}
    assert weight_transition_steps(rising, 7.0) == pytest.approx(
        weight_transition_steps(classes, 7.0))
    flat = {0.0: DelayClass(1, 1.0), 7.0: DelayClass(1, 1.0)}
    assert weight_transition_steps(flat, 7.0) == math.inf


def test_inversions():
    classes = {float(k): DelayClass(1, v) for k, v in enumerate([1.0, 0.8, 0.85, 0.3, 0.0])}
    assert count_inversions(classes) == 1
    assert count_inversions(classes, tol=0.1) == 0
    assert count_inversions(classes, decreasing=False) == 3
