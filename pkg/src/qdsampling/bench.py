"""Virtual instrument: delay line with timing jitter, source-meter noise and
resonance-scan orchestration.

Every measured point draws its random numbers from its own stream, derived
from ``(seed, delay value, v_n index)``, so results do not depend on the
order or the process in which scans run.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigError, QDSamplingError
from .qdot import LaserSpec, QDParams, extracted_fraction, max_photocurrent
from .waveform import PulseSpec

log = logging.getLogger(__name__)

JITTER_METHODS = ("gauss_hermite", "monte_carlo")
_DT_KEY_SCALE = 1000  # delays keyed to 1 fs


@dataclass(frozen=True)
class BenchConfig:
    jitter_sigma: float = 0.0  # ps
    jitter_method: str = "gauss_hermite"
    jitter_order: int = 20
    n_samples: int = 200
    noise_density: float = 30.0  # fA/sqrt(Hz)
    integration_time: float = 0.1  # s
    v_n_start: float = 0.8
    v_n_stop: float = 2.6
    v_n_step: float = 0.015
    seed: int = 0
    ode_tol: float = 1e-8

    def __post_init__(self):
        if not self.jitter_sigma >= 0:
            raise ConfigError("must be >= 0", "bench.jitter_sigma")
        if self.jitter_method not in JITTER_METHODS:
            raise ConfigError(f"must be one of {JITTER_METHODS}", "bench.jitter_method")
        if self.jitter_order < 1:
            raise ConfigError("must be >= 1", "bench.jitter_order")
        if self.n_samples < 1:
            raise ConfigError("must be >= 1", "bench.n_samples")
        if not self.noise_density >= 0:
            raise ConfigError("must be >= 0", "bench.noise_density")
        if not self.integration_time > 0:
            raise ConfigError("must be > 0", "bench.integration_time")
        if not self.v_n_step > 0:
            raise ConfigError("must be > 0", "bench.v_n_step")
        if not self.v_n_stop > self.v_n_start:
            raise ConfigError("must exceed v_n_start", "bench.v_n_stop")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("must be an unsigned 64-bit integer", "bench.seed")
        if not self.ode_tol > 0:
            raise ConfigError("must be > 0", "bench.ode_tol")

    @property
    def noise_sigma(self) -> float:
        """Per-point current noise std in A, bandwidth 1/(2 T_int)."""
        return self.noise_density * 1e-15 * math.sqrt(1.0 / (2.0 * self.integration_time))

    def v_n_grid(self) -> np.ndarray:
        n = int(math.floor((self.v_n_stop - self.v_n_start) / self.v_n_step + 1e-9)) + 1
        return np.round(self.v_n_start + self.v_n_step * np.arange(n), 12)


@dataclass
class ResonanceScan:
    dt_oe: float
    v_n: np.ndarray
    i_pc: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.v_n = np.asarray(self.v_n, dtype=float)
        self.i_pc = np.asarray(self.i_pc, dtype=float)
        if self.v_n.shape != self.i_pc.shape or self.v_n.ndim != 1:
            raise ValueError("v_n and i_pc must be 1-D arrays of equal length")
        if len(self.v_n) < 8:
            raise ValueError("a resonance scan needs at least 8 points")
        if np.any(np.diff(self.v_n) <= 0):
            raise ValueError("v_n must be strictly increasing")
        if not np.all(np.isfinite(self.i_pc)):
            raise ValueError("i_pc must be finite")

    @property
    def points(self):
        return list(zip(self.v_n.tolist(), self.i_pc.tolist()))


def _dt_key(dt_oe):
    return int(round(dt_oe * _DT_KEY_SCALE)) % 2**64


_JITTER_STREAM, _NOISE_STREAM = 0, 1


def point_rng(seed, dt_oe, vn_index, stream=_JITTER_STREAM) -> np.random.Generator:
    """Independent random stream for one measured point."""
    key = (_dt_key(dt_oe), int(vn_index), stream)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.default_rng(ss)


def jitter_nodes(cfg: BenchConfig, rng=None):
    """Delay offsets (ps) and weights approximating the jitter expectation."""
    sig = cfg.jitter_sigma
    if sig == 0:
        return np.zeros(1), np.ones(1)
    if cfg.jitter_method == "gauss_hermite":
        x, w = np.polynomial.hermite.hermgauss(cfg.jitter_order)
        return math.sqrt(2.0) * sig * x, w / math.sqrt(math.pi)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    return rng.normal(0.0, sig, cfg.n_samples), np.full(cfg.n_samples, 1.0 / cfg.n_samples)


def jitter_average(current_fn, dt_oe, cfg: BenchConfig, rng=None):
    """E[current_fn(dt_oe + xi)] with xi ~ N(0, jitter_sigma^2).

    ``current_fn`` must accept an array of delays.
    """
    if cfg.jitter_sigma == 0:
        return current_fn(dt_oe)
    offsets, weights = jitter_nodes(cfg, rng)
    vals = np.asarray(current_fn(dt_oe + offsets), dtype=float)
    return float(weights @ vals)


def add_readout_noise(i, cfg: BenchConfig, rng):
    if cfg.noise_density == 0:
        return i
    return i + rng.normal(0.0, cfg.noise_sigma, np.shape(i))


def clean_scan_currents(qd: QDParams, laser: LaserSpec, pulse: PulseSpec, cfg: BenchConfig,
                        dt_oe: float) -> np.ndarray:
    """Jitter-averaged, noise-free photocurrents (A) on the bench's v_n grid."""
    v_n = cfg.v_n_grid()
    if cfg.jitter_sigma > 0 and cfg.jitter_method == "monte_carlo":
        offsets = np.stack([jitter_nodes(cfg, point_rng(cfg.seed, dt_oe, j))[0]
                            for j in range(len(v_n))])
        weights = np.full(offsets.shape, 1.0 / offsets.shape[1])
    else:
        off, w = jitter_nodes(cfg)
        offsets = np.broadcast_to(off, (len(v_n), len(off)))
        weights = np.broadcast_to(w, offsets.shape)
    arrival = laser.arrival_time + dt_oe + offsets
    q = extracted_fraction(qd, laser, pulse, v_n[:, None], arrival, tol=cfg.ode_tol)
    return max_photocurrent(qd) * np.sum(weights * q, axis=1)


def noisy_scan(clean: np.ndarray, cfg: BenchConfig, dt_oe: float, seed=None) -> ResonanceScan:
    """Attach readout noise to precomputed clean currents."""
    seed = cfg.seed if seed is None else seed
    v_n = cfg.v_n_grid()
    i = np.array(clean, dtype=float)
    if cfg.noise_density > 0:
        for j in range(len(v_n)):
            i[j] = add_readout_noise(i[j], cfg, point_rng(seed, dt_oe, j, _NOISE_STREAM))
    meta = {"bench": asdict(replace(cfg, seed=seed)), "seed": seed}
    return ResonanceScan(float(dt_oe), v_n, i, meta)


def resonance_scan(qd: QDParams, laser: LaserSpec, pulse: PulseSpec, cfg: BenchConfig,
                   dt_oe: float) -> ResonanceScan:
    """One cathode-voltage sweep at fixed optoelectronic delay."""
    try:
        clean = clean_scan_currents(qd, laser, pulse, cfg, dt_oe)
    except QDSamplingError as exc:
        raise type(exc)(f"scan at dt_oe={dt_oe} ps failed: {exc}") from exc
    return noisy_scan(clean, cfg, dt_oe)


def _scan_task(args):
    qd, laser, pulse, cfg, dt = args
    try:
        return dt, resonance_scan(qd, laser, pulse, cfg, dt), None
    except Exception as exc:  # reported per delay, never aborts the run
        return dt, None, f"{type(exc).__name__}: {exc}"


def run_sampling_experiment(qd: QDParams, laser: LaserSpec, pulse: PulseSpec, cfg: BenchConfig,
                            dt_grid, *, workers=1, progress=None, errors=None):
    """Resonance scans for every delay in ``dt_grid``, returned sorted by delay.

    Failed delays are skipped; their messages go to ``errors`` (a dict keyed
    by delay) when given. ``progress(done, total, dt_oe)`` is called as scans
    complete.
    """
    dts = sorted(float(d) for d in dt_grid)
    if not dts:
        raise ConfigError("dt_grid must not be empty", "run.dt_grid")
    if len(set(dts)) != len(dts):
        raise ConfigError("dt_grid contains duplicate delays", "run.dt_grid")
    tasks = [(qd, laser, pulse, cfg, dt) for dt in dts]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_scan_task, tasks)
            results = list(_report(results, len(tasks), progress))
    else:
        results = list(_report(map(_scan_task, tasks), len(tasks), progress))
    scans = []
    for dt, scan, err in results:
        if err is None:
            scans.append(scan)
        else:
            log.warning("delay %g ps failed: %s", dt, err)
            if errors is not None:
                errors[dt] = err
    return scans


def _report(results, total, progress):
    for k, res in enumerate(results, 1):
        if progress is not None:
            progress(k, total, res[0])
        yield res
