"""Optoelectronic sampling of electric pulses with a single quantum dot.

A photocurrent resonance scan at fixed optical delay locates the bias at
which the dot's exciton line meets the laser; repeating it over a series of
delays samples the applied pulse. This package simulates the scans (optical
Bloch equations with tunnelling drains, timing jitter and readout noise), fits
them, and rebuilds and scores the waveform.
"""
from .bench import BenchConfig, ResonanceScan, resonance_scan, run_sampling_experiment
from .config import PRESETS, RunConfig, load_config
from .errors import (
                     ConfigError,
                     EmptyReconstructionError,
                     FitError,
                     IntegrationError,
                     NoPeakError,
                     QDSamplingError,
                     RankDeficiencyError,
)
from .qdot import LaserSpec, QDParams, integrate_bloch, photocurrent_single
from .recon import SampledWaveform, compare_to_truth, reconstruct_waveform
from .waveform import PulseSpec, eval_pulse, make_cmos_pulse

__version__ = "0.1.0"

__all__ = [
    "BenchConfig", "ConfigError", "EmptyReconstructionError", "FitError", "IntegrationError",
    "LaserSpec", "NoPeakError", "PRESETS", "PulseSpec", "QDParams", "QDSamplingError",
    "RankDeficiencyError", "ResonanceScan", "RunConfig", "SampledWaveform", "compare_to_truth",
    "eval_pulse", "integrate_bloch", "load_config", "make_cmos_pulse", "photocurrent_single",
    "reconstruct_waveform", "resonance_scan", "run_sampling_experiment",
]
