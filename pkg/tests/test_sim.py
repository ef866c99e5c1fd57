import math

import numpy as np
import pytest

from beamseek.cli import main
from beamseek.sim import (TIMESERIES_COLUMNS, ConfigError, SimConfig, load_config,
                          parse_config, read_timeseries, run, summarize)


def test_empty_config_is_default_scenario():
    cfg = parse_config("")
    assert (cfg.H, cfg.Theta_star, cfg.y_star) == (-1.0, 1.5, 2.4)
    assert (cfg.omega, cfg.a, cfg.c, cfg.cbar, cfg.K) == (5.0, 0.2, 0.1, 6.0, 0.1)
    assert cfg.n_elems == 20 and cfg.t_end == 200.0
    assert cfg.dt == pytest.approx(2 * math.pi / 5000)


def test_overrides_merge_with_defaults():
    cfg = parse_config("omega = 10 \n a = 0.1  # smaller dither\n")
    assert cfg.omega == 10.0 and cfg.a == 0.1 and cfg.c == 0.1
    assert cfg.dt == pytest.approx(2 * math.pi / 10000)


def test_flags_and_strings():
    cfg = parse_config("use_true_hessian = yes\ntheta_feedback = gradient\nn_elems = 30")
    assert cfg.use_true_hessian is True and cfg.theta_feedback == "gradient"
    assert cfg.n_elems == 30


@pytest.mark.parametrize("text, needle", [
    ("a = 0", "a:"),
    ("bogus = 1", ":1: unknown key"),
    ("\n\nK = fast", ":3: bad value for K"),
    ("t_end", ":1: expected"),
    ("t_end = -1", "t_end"),
    ("H = 1", "Hessian"),
    ("theta_feedback = other", "theta_feedback"),
    ("use_true_hessian = maybe", "bad value"),
])
def test_bad_configs(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(text, source="cfg")


def test_load_config(tmp_path):
    path = tmp_path / "x.cfg"
    path.write_text("# comment\nt_end = 3\n")
    assert load_config(path).t_end == 3.0


def _short(tmp_path, name, text="t_end = 6\ndecimation = 1"):
    cfg = parse_config(text)
    summary, hist = run(cfg, out_dir=tmp_path / name, plots=False)
    return cfg, summary, hist


def test_outputs_and_determinism(tmp_path):
    _short(tmp_path, "a")
    _short(tmp_path, "b")
    for name in ("timeseries.csv", "snapshots.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header = (tmp_path / "a" / "timeseries.csv").read_text().splitlines()[0].split(",")
    assert header[:9] == ["t", "Theta", "y", "theta1", "theta2", "G", "Hhat", "U1", "U2"]
    lines = (tmp_path / "a" / "snapshots.csv").read_text().splitlines()
    x = np.array(lines[0].split(",")[1:], dtype=float)
    np.testing.assert_allclose(x, np.linspace(0, 1, 21))
    snap = np.loadtxt(lines[1:], delimiter=",")
    assert snap.shape == (100, 22)


def test_summary_recomputable_from_csv(tmp_path):
    cfg, summary, _ = _short(tmp_path, "r")
    data = read_timeseries(tmp_path / "r" / "timeseries.csv")
    n_last = int(round(5 * cfg.dither().period / cfg.dt))
    err = np.mean(np.abs(data["Theta"][-n_last:] - cfg.Theta_star))
    assert abs(err - summary.final_Theta_err) <= 1e-12
    text = (tmp_path / "r" / "summary.txt").read_text()
    assert f"final_Theta_err: {summary.final_Theta_err!r}" in text


def test_summary_independent_of_decimation(tmp_path):
    _, s1, _ = _short(tmp_path, "d1", "t_end = 4\ndecimation = 1")
    _, s7, _ = _short(tmp_path, "d7", "t_end = 4\ndecimation = 7")
    assert s1.lines()[:4] == s7.lines()[:4]
    rows = len((tmp_path / "d7" / "timeseries.csv").read_text().splitlines()) - 1
    assert rows == math.ceil(parse_config("t_end = 4").n_steps / 7)


def test_pure_dither_output_bound(tmp_path):
    cfg = parse_config("theta1_hat0 = 1.5\nfeedback_enabled = false\nt_end = 10")
    summary, _ = run(cfg, write=False)
    assert summary.final_y_err <= 0.5 * 0.4115**2
    # Theta = Theta* + a sin, so mean |y - y*| = a^2 / 4
    assert summary.final_y_err == pytest.approx(0.2**2 / 4, rel=0.02)


def test_summarize_settled_flag():
    cfg = SimConfig(t_end=10)
    n = cfg.n_steps
    hist = {k: np.zeros(n) for k in TIMESERIES_COLUMNS}
    hist["theta1_hat"][:] = 1.5
    hist["Theta"][:] = 1.6
    s = summarize(hist, cfg)
    assert s.settled and s.final_Theta_err == pytest.approx(0.1)
    hist["theta1_hat"][-1] = 2.0
    assert not summarize(hist, cfg).settled


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_reported_with_context(tmp_path):
    cfg = parse_config("t_end = 30\nK = 50\ncbar = 60")
    with pytest.raises(RuntimeError, match=r"step \d+ \(t = "):
        run(cfg, write=False)


# --- CLI ---------------------------------------------------------------------

def test_cli_run(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("t_end = 2\n")
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    for name in ("timeseries.csv", "snapshots.csv", "summary.txt",
                 "timeseries.png", "snapshots.png"):
        assert (out / name).exists(), name
    assert "final_Theta_err" in capsys.readouterr().out


def test_cli_bad_config(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("omega = -1\n")
    assert main(["run", "--config", str(cfg)]) == 2
    assert "frequency" in capsys.readouterr().err


def test_cli_validate(capsys):
    assert main(["validate", "averaging"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 3 and "[FAIL]" not in out


def test_cli_spectrum(tmp_path, capsys):
    csv = tmp_path / "s.csv"
    png = tmp_path / "s.png"
    assert main(["spectrum", "--c", "0.1", "--kbar", "0.1", "--elems", "64",
                 "--csv", str(csv), "--plot", str(png)]) == 0
    assert "matched 9 of 9" in capsys.readouterr().out
    assert csv.exists() and png.exists()
    assert main(["spectrum", "--elems", "8"]) == 1
