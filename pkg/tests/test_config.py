import math

import pytest

from qdsampling.config import DEFAULTS, PRESETS, build, config_hash, load_config, resolve
from qdsampling.errors import ConfigError


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_builds(name):
    cfg = build(resolve(preset=name))
    assert cfg.preset == name and len(cfg.dt_grid) >= 1


def test_defaults():
    cfg = build(resolve())
    assert cfg.laser.intensity_fwhm == pytest.approx(4.5)
    assert cfg.laser.theta == pytest.approx(0.75 * math.pi)
    assert cfg.qd.rep_rate == pytest.approx(8e-5)
    assert cfg.fit.v_lo_hint == pytest.approx(1.1) and cfg.fit.v_hi_hint == pytest.approx(2.3)
    assert cfg.dt_grid[0] == -49.0 and cfg.dt_grid[-1] == 49.0 and len(cfg.dt_grid) == 15


def test_falling_edge_preset_centre():
    cfg = build(resolve(preset="figS1b"))
    assert cfg.pulse.fall_center == pytest.approx(1365.0)
    assert cfg.fit.bimodal and cfg.dt_grid[0] == 1316.0 and cfg.dt_grid[-1] == 1414.0


def test_user_overrides_preset_and_seed_overrides_all():
    r = resolve({"bench": {"jitter_sigma": 1.0}, "run": {"seed": 3}}, "fig3", seed=9)
    cfg = build(r)
    assert cfg.bench.jitter_sigma == 1.0 and cfg.seed == 9 and cfg.bench.seed == 9


def test_preset_from_file():
    cfg = build(resolve({"run": {"preset": "fig5a"}}))
    assert cfg.dt_grid == (-43.0, -22.0, -1.0, 13.0, 41.0)


def test_defaults_not_mutated():
    before = repr(DEFAULTS)
    resolve({"pulse": {"ringing": [{"amplitude": 0.1, "frequency": 0.01, "damping": 0.1}]}})
    assert repr(DEFAULTS) == before


def test_hash_tracks_content():
    a, b = resolve(preset="fig3"), resolve(preset="fig3")
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(resolve(preset="fig3", seed=1))


@pytest.mark.parametrize("user, key", [
    ({"pulse": {"tau_rize": 1.0}}, "pulse.tau_rize"),
    ({"extra": {}}, "extra"),
    ({"pulse": {"tau_rise": "fast"}}, "pulse.tau_rise"),
    ({"pulse": {"tau_rise": -1.0}}, "pulse.tau_rise"),
    ({"bench": {"jitter_order": 2.5}}, "bench.jitter_order"),
    ({"fit": {"bimodal": 1}}, "fit.bimodal"),
    ({"fit": {"rc_window": [5, 1]}}, "fit.rc_window"),
    ({"run": {"dt_list": [1.0, 1.0]}}, "run.dt_list"),
    ({"run": {"dt_step": 0.0}}, "run.dt_step"),
    ({"laser": {"intensity_fwhm": 0.0}}, "laser.intensity_fwhm"),
    ({"qd": {"gamma_h0": 1e-7}}, "qd.gamma_h0"),
    ({"pulse": {"ringing": [{"amplitude": 0.1}]}}, "pulse.ringing[0]"),
])
def test_errors_name_the_key(user, key):
    with pytest.raises(ConfigError) as exc:
        build(resolve(user))
    assert exc.value.key == key


def test_unknown_preset():
    with pytest.raises(ConfigError, match="fig3"):
        resolve(preset="fig9")


def test_load_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('[run]\npreset = "constant"\nseed = 4\n\n[bench]\nnoise_density = 0.0\n')
    cfg = load_config(path)
    assert cfg.preset == "constant" and cfg.seed == 4 and cfg.bench.noise_density == 0.0


def test_parse_error_has_position(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[pulse]\ntau_rise = = 3\n")
    with pytest.raises(ConfigError, match=r"line 2, column \d+"):
        load_config(path)
