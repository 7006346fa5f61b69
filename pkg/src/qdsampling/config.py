"""Run configuration: TOML sections, presets and validation.

A config file has the sections ``[pulse]``, ``[laser]``, ``[qd]``, ``[bench]``,
``[fit]`` and ``[run]``. Values missing from the file come from the selected
preset and then from ``DEFAULTS``. Unknown keys are rejected.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .bench import BenchConfig
from .errors import ConfigError
from .qdot import LaserSpec, QDParams
from .waveform import Feedthrough, PulseSpec, Ringing, make_cmos_pulse

DEFAULTS = {
    "pulse": {
        "v_ss": 0.0,
        "v_dd": 1.2,
        "polarity": 1,
        "t_rise_start": 0.0,
        "tau_rise": 15.0,
        "tau_fall": 12.0,
        "width": 1300.0,
        "period": 12500.0,
        "feedthrough_depth": 0.0,
        "feedthrough_center": -30.0,
        "feedthrough_sigma": 5.0,
        "ringing": [],
    },
    "laser": {
        "intensity_fwhm": 4.5,
        "theta_pi": 0.75,
    },
    "qd": {
        "stark_slope": 2.52,
        "v_bias_res": -1.1,
        "gamma_e0": 0.02,
        "gamma_h0": 0.005,
        "v_e": 0.5,
        "v_h": 0.5,
        "gamma_pure0": 0.001,
        "rep_rate_mhz": 80.0,
    },
    "bench": {
        "jitter_sigma": 0.0,
        "jitter_method": "gauss_hermite",
        "jitter_order": 20,
        "n_samples": 200,
        "noise_density": 30.0,
        "integration_time": 0.1,
        "v_n_start": 0.8,
        "v_n_stop": 2.6,
        "v_n_step": 0.015,
        "ode_tol": 1e-8,
    },
    "fit": {
        "bimodal": False,
        "v_lo_hint": None,
        "v_hi_hint": None,
        "rc_window": None,
    },
    "run": {
        "preset": "",
        "dt_start": -49.0,
        "dt_stop": 49.0,
        "dt_step": 7.0,
        "dt_list": [],
        "seed": 0,
    },
}

_RINGING_KEYS = {"amplitude", "frequency", "damping", "phase"}
_FALL_CENTER_S1B = 1365.0

PRESETS = {
    # Rising edge of the simulated sampling run: 15 ps RC edge, 6.5 ps jitter.
    "fig3": {
        "pulse": {"tau_rise": 15.0},
        "bench": {"jitter_sigma": 6.5, "jitter_order": 60, "noise_density": 0.0},
        "fit": {"rc_window": [-49.0, 49.0]},
        "run": {"dt_start": -49.0, "dt_stop": 49.0, "dt_step": 7.0},
    },
    # Full 1.3 ns pulse with the measured 16.7 ps edge and a feed-through dip.
    "fig4": {
        "pulse": {"tau_rise": 16.7, "feedthrough_depth": 0.02},
        "bench": {"jitter_sigma": 6.0, "jitter_order": 60},
        "fit": {"rc_window": [-49.0, 98.0]},
        "run": {"dt_start": -98.0, "dt_stop": 1400.0, "dt_step": 7.0},
    },
    # Five resonance scans across the measured rising edge.
    "fig5a": {
        "pulse": {"tau_rise": 16.7},
        "bench": {"jitter_sigma": 6.0, "jitter_order": 60},
        "run": {"dt_list": [-43.0, -22.0, -1.0, 13.0, 41.0]},
    },
    "figS1a": {
        "pulse": {"tau_rise": 15.0},
        "bench": {"jitter_sigma": 6.5, "jitter_order": 60, "noise_density": 0.0},
        "fit": {"rc_window": [-50.0, 50.0]},
        "run": {"dt_start": -50.0, "dt_stop": 50.0, "dt_step": 10.0},
    },
    # Falling edge with 20 ps jitter; the 50 % point of the edge sits at 1365 ps.
    "figS1b": {
        "pulse": {"tau_fall": 12.0, "width": _FALL_CENTER_S1B - 12.0 * math.log(2.0)},
        "bench": {"jitter_sigma": 20.0, "jitter_order": 100, "noise_density": 0.0},
        "fit": {"bimodal": True},
        "run": {"dt_start": 1316.0, "dt_stop": 1414.0, "dt_step": 7.0},
    },
    # Low-level plateau at default noise settings (repeat-statistics studies).
    "plateau-stats": {
        "run": {"dt_list": [-300.0]},
    },
    "plateau": {
        "run": {"dt_list": [-300.0]},
    },
    # Delays that only ever see the constant low level.
    "constant": {
        "run": {"dt_list": [-400.0, -350.0, -300.0, -250.0, -200.0]},
    },
}


@dataclass(frozen=True)
class FitOptions:
    bimodal: bool
    v_lo_hint: float
    v_hi_hint: float
    rc_window: tuple | None


@dataclass(frozen=True)
class RunConfig:
    pulse: PulseSpec
    laser: LaserSpec
    qd: QDParams
    bench: BenchConfig
    fit: FitOptions
    dt_grid: tuple
    seed: int
    preset: str
    resolved: dict

    @property
    def config_hash(self) -> str:
        return config_hash(self.resolved)

    @property
    def dt_step(self) -> float:
        return float(self.resolved["run"]["dt_step"])


def config_hash(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _json_default(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    raise TypeError(type(obj))


def _merge(base: dict, over: dict, where: str):
    for section, values in over.items():
        if section not in base:
            raise ConfigError(f"unknown section [{section}]", section)
        if not isinstance(values, dict):
            raise ConfigError("expected a table", section)
        for key, val in values.items():
            if key not in base[section]:
                raise ConfigError(f"unknown key in {where}", f"{section}.{key}")
            base[section][key] = val


def _num(d, section, key, integer=False):
    val = d[section][key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"expected a number, got {val!r}", f"{section}.{key}")
    if integer:
        if isinstance(val, float) and not val.is_integer():
            raise ConfigError(f"expected an integer, got {val!r}", f"{section}.{key}")
        return int(val)
    return float(val)


def resolve(user: dict | None = None, preset: str | None = None, seed: int | None = None) -> dict:
    """Merge defaults, preset and user values into one validated-key dict."""
    user = copy.deepcopy(user or {})
    name = preset if preset is not None else user.get("run", {}).get("preset", "") or ""
    if name and name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}", "run.preset")
    out = copy.deepcopy(DEFAULTS)
    if name:
        _merge(out, copy.deepcopy(PRESETS[name]), f"preset {name}")
    _merge(out, user, "config file")
    out["run"]["preset"] = name
    if seed is not None:
        out["run"]["seed"] = seed
    return out


def build(resolved: dict) -> RunConfig:
    """Construct validated model objects from a resolved config dict."""
    d = resolved
    p = d["pulse"]
    ringing = []
    for k, r in enumerate(p["ringing"]):
        if not isinstance(r, dict) or set(r) - _RINGING_KEYS or not {"amplitude", "frequency",
                                                                      "damping"} <= set(r):
            raise ConfigError("each entry needs amplitude, frequency, damping[, phase]",
                              f"pulse.ringing[{k}]")
        ringing.append(Ringing(**{key: float(v) for key, v in r.items()}))
    depth = _num(d, "pulse", "feedthrough_depth")
    ft = None
    if depth > 0:
        ft = Feedthrough(_num(d, "pulse", "feedthrough_center"),
                         _num(d, "pulse", "feedthrough_sigma"), depth)
    pulse = make_cmos_pulse(
        _num(d, "pulse", "v_dd"), _num(d, "pulse", "polarity", integer=True),
        _num(d, "pulse", "tau_rise"), _num(d, "pulse", "tau_fall"), _num(d, "pulse", "width"),
        v_ss=_num(d, "pulse", "v_ss"), t_rise_start=_num(d, "pulse", "t_rise_start"),
        feedthrough=ft, ringing=ringing, period=_num(d, "pulse", "period"),
    )
    ifwhm = _num(d, "laser", "intensity_fwhm")
    if not ifwhm > 0:
        raise ConfigError("must be > 0", "laser.intensity_fwhm")
    laser = LaserSpec.from_intensity_fwhm(ifwhm, _num(d, "laser", "theta_pi") * math.pi)
    qd = QDParams(
        stark_slope=_num(d, "qd", "stark_slope"), v_bias_res=_num(d, "qd", "v_bias_res"),
        gamma_e0=_num(d, "qd", "gamma_e0"), gamma_h0=_num(d, "qd", "gamma_h0"),
        v_e=_num(d, "qd", "v_e"), v_h=_num(d, "qd", "v_h"),
        gamma_pure0=_num(d, "qd", "gamma_pure0"),
        rep_rate=_num(d, "qd", "rep_rate_mhz") * 1e-6,
    )
    qd.check_drains()
    b = d["bench"]
    if not isinstance(b["jitter_method"], str):
        raise ConfigError("expected a string", "bench.jitter_method")
    seed = _num(d, "run", "seed", integer=True)
    bench = BenchConfig(
        jitter_sigma=_num(d, "bench", "jitter_sigma"), jitter_method=b["jitter_method"],
        jitter_order=_num(d, "bench", "jitter_order", integer=True),
        n_samples=_num(d, "bench", "n_samples", integer=True),
        noise_density=_num(d, "bench", "noise_density"),
        integration_time=_num(d, "bench", "integration_time"),
        v_n_start=_num(d, "bench", "v_n_start"), v_n_stop=_num(d, "bench", "v_n_stop"),
        v_n_step=_num(d, "bench", "v_n_step"), seed=seed, ode_tol=_num(d, "bench", "ode_tol"),
    )
    f = d["fit"]
    if not isinstance(f["bimodal"], bool):
        raise ConfigError("expected true or false", "fit.bimodal")
    v_lo_hint = (pulse.v_low - qd.v_bias_res if f["v_lo_hint"] is None
                 else _num(d, "fit", "v_lo_hint"))
    v_hi_hint = (pulse.v_high - qd.v_bias_res if f["v_hi_hint"] is None
                 else _num(d, "fit", "v_hi_hint"))
    if v_hi_hint < v_lo_hint:
        v_lo_hint, v_hi_hint = v_hi_hint, v_lo_hint
    window = f["rc_window"]
    if window is not None:
        if not (isinstance(window, list) and len(window) == 2 and window[0] < window[1]):
            raise ConfigError("expected [t_min, t_max] with t_min < t_max", "fit.rc_window")
        window = (float(window[0]), float(window[1]))
    fit = FitOptions(bool(f["bimodal"]), v_lo_hint, v_hi_hint, window)
    return RunConfig(pulse, laser, qd, bench, fit, _dt_grid(d), seed, d["run"]["preset"], d)


def _dt_grid(d) -> tuple:
    lst = d["run"]["dt_list"]
    if not isinstance(lst, list):
        raise ConfigError("expected a list of delays", "run.dt_list")
    if lst:
        grid = sorted(float(v) for v in lst)
    else:
        start = _num(d, "run", "dt_start")
        stop = _num(d, "run", "dt_stop")
        step = _num(d, "run", "dt_step")
        if not step > 0:
            raise ConfigError("must be > 0", "run.dt_step")
        if stop < start:
            raise ConfigError("must be >= dt_start", "run.dt_stop")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        grid = [round(start + k * step, 9) for k in range(n)]
    if len(set(grid)) != len(grid):
        raise ConfigError("delays must be distinct", "run.dt_list")
    return tuple(grid)


def parse_toml(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        where = f" (line {m.group(1)}, column {m.group(2)})" if m else ""
        raise ConfigError(f"TOML parse error{where}: {exc}") from exc


def load_config(path=None, preset: str | None = None, seed: int | None = None) -> RunConfig:
    """Read, merge and validate a config file; ``path=None`` means no file."""
    user = {}
    if path is not None:
        user = parse_toml(Path(path).read_text())
    return build(resolve(user, preset, seed))
