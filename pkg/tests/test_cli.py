import json

import pytest

from qdsampling import cli

SMALL = """
[pulse]
tau_rise = 15.0

[bench]
v_n_start = 0.9
v_n_stop = 2.5
v_n_step = 0.02

[fit]
rc_window = [-30.0, 60.0]

[run]
dt_list = [-30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0, 45.0, 60.0]
seed = 17
"""


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "small.toml"
    cfg.write_text(SMALL)
    out = root / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_OK
    return cfg, out


def test_run_writes_everything(small_run):
    _, out = small_run
    for name in ("scans.csv", "fits.csv", "waveform.csv", "metrics.json", "manifest.json",
                 "scans.svg", "waveform.svg"):
        assert (out / name).is_file(), name
    assert not (out / "bimodal.svg").exists()
    assert 'id="rc-fit"' in (out / "waveform.svg").read_text()
    m = json.loads((out / "manifest.json").read_text())
    assert m["seed"] == 17 and set(m["steps"]) == {"simulate", "fit", "reconstruct", "report"}
    assert "wall" not in json.dumps(m)
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["n_points"] == 9 and metrics["rms_mV"] < 20


def test_steps_rerun_from_manifest(small_run):
    cfg, out = small_run
    before = (out / "waveform.csv").read_bytes()
    assert cli.main(["reconstruct", "--out", str(out), "--config", str(cfg)]) == 0
    assert (out / "waveform.csv").read_bytes() == before


def test_hash_mismatch_and_force(small_run, capsys):
    cfg, out = small_run
    assert cli.main(["reconstruct", "--out", str(out), "--config", str(cfg), "--seed", "5"]) == 1
    assert "config hash" in capsys.readouterr().err
    assert cli.main(["reconstruct", "--out", str(out), "--config", str(cfg), "--seed", "5",
                     "--force"]) == 0
    assert cli.main(["reconstruct", "--out", str(out), "--config", str(cfg)]) == 0


def test_missing_inputs_listed(tmp_path, capsys):
    assert cli.main(["report", "--out", str(tmp_path)]) == cli.EXIT_IO
    err = capsys.readouterr().err
    assert "scans.csv" in err and "fits.csv" in err and "waveform.csv" in err


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "--out", str(tmp_path), "--seed", "-1"])
    assert exc.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        cli.main(["run"])
    assert exc.value.code == cli.EXIT_USAGE
    assert cli.main(["simulate", "--out", str(tmp_path), "--workers", "0"]) == cli.EXIT_USAGE


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[pulse]\ntau_rize = 3.0\n")
    assert cli.main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert "pulse.tau_rize" in capsys.readouterr().err
    bad.write_text("[pulse\n")
    assert cli.main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert "line 1" in capsys.readouterr().err
    missing = tmp_path / "nope.toml"
    assert cli.main(["simulate", "--config", str(missing), "--out", str(tmp_path)]) == 3


def test_malformed_input_is_io_error(small_run, tmp_path, capsys):
    cfg, out = small_run
    (tmp_path / "fits.csv").write_text((out / "fits.csv").read_text() + "1,x\n")
    assert cli.main(["reconstruct", "--out", str(tmp_path), "--config", str(cfg)]) == 3
    assert "row" in capsys.readouterr().err


def test_nothing_fittable_is_computation_error(tmp_path, capsys):
    cfg = tmp_path / "dark.toml"
    cfg.write_text("[laser]\ntheta_pi = 0.0\n\n[bench]\nv_n_step = 0.05\n\n"
                   "[run]\ndt_list = [0.0, 10.0]\n")
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "no scan could be fitted" in capsys.readouterr().err


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out


def test_plateau_preset_recovers_low_level(tmp_path):
    out = tmp_path / "p"
    assert cli.main(["run", "--preset", "plateau", "--out", str(out), "--seed", "3"]) == 0
    _, fits = cli.io.read_fits(out / "fits.csv")
    (_, pk), = fits
    assert abs(pk.mode - 1.1) <= 1e-3


def test_constant_preset_within_stderr(tmp_path):
    out = tmp_path / "c"
    assert cli.main(["run", "--preset", "constant", "--out", str(out), "--seed", "2"]) == 0
    m = json.loads((out / "metrics.json").read_text())
    assert m["n_points"] == 5
    assert m["rms_mV"] < 3 * m["stderr_rms_mV"]
