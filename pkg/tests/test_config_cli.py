import os

import numpy as np
import pytest

from mmtls.cli import main
from mmtls.config import KEYS, Config, ConfigError, parse_config, parse_text


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("")
    cfg = parse_config(p)
    assert cfg == Config()
    assert (cfg.scenario.si_len, cfg.scenario.rt_len, cfg.layers) == (4, 10, 3)
    assert (cfg.lambda_sigma, cfg.c1, cfg.nw, cfg.gamma) == (0.98, 2.576, 14, 1.0)


def test_echo_round_trip_is_byte_identical():
    cfg = parse_text("isr_db = 40\n")
    assert "isr_db = 40" in cfg.echo()
    again = parse_text("\n".join(cfg.echo()))
    assert again.echo() == cfg.echo()
    assert len(cfg.echo()) == len(KEYS)


def test_comments_and_per_layer_mu():
    cfg = parse_text("# header\nmu = 0.001, 0.002, 0.003  # per layer\nlayers = 3\n")
    assert cfg.layer_mu() == (0.001, 0.002, 0.003)
    assert parse_text("mu = 0.004").layer_mu(2) == (0.004, 0.004)


@pytest.mark.parametrize("text,key,line", [
    ("layers = 0", "layers", 1),
    ("\nfoo = 1", "foo", 2),
    ("nw = abc", "nw", 1),
    ("lambda_sigma = 1.0", "lambda_sigma", 1),
    ("layers = 2\nmu = 0.1, 0.2, 0.3", "mu", None),
    ("impulse_prob = 2", "impulse_prob", 1),
    ("seed = -1", "seed", 1),
    ("si_len = 2.5", "si_len", 1),
    ("layers", "layers", 1),
])
def test_config_errors_name_key(text, key, line):
    with pytest.raises(ConfigError) as exc:
        parse_text(text)
    assert exc.value.key == key
    assert key in str(exc.value)
    if line is not None:
        assert exc.value.line == line


def test_cli_bad_value_exits_2(tmp_path, capsys):
    assert main(["fig2", "--layers", "0", "--out", str(tmp_path / "x.csv")]) == 2
    assert "layers" in capsys.readouterr().err
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("gamma = -1\n")
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2
    assert "gamma" in capsys.readouterr().err


def test_cli_unwritable_output_exits_3(tmp_path):
    assert main(["fig2", "--trials", "1", "--out", str(tmp_path / "missing" / "x.csv")]) == 3
    assert main(["fig2", "--trials", "1", "--out", str(tmp_path)]) == 3


def _read(path):
    lines = path.read_text().splitlines()
    meta = [l for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    return meta, body


def test_cli_fig2_csv_layout(tmp_path):
    out = tmp_path / "fig2.csv"
    assert main(["fig2", "--trials", "2", "--seed", "9", "--out", str(out), "--plot-script",
                 str(tmp_path / "plot.py")]) == 0
    meta, body = _read(out)
    assert out.read_text().startswith("#")
    assert "# seed = 9" in meta
    assert body[0] == "n,nmsd_lms_db,nmsd_tls_db,nmsd_mtls_db"
    assert len(body) == 1 + 4000
    assert np.loadtxt(body[1:], delimiter=",").shape == (4000, 4)
    assert (tmp_path / "fig2.cfg").read_text().splitlines() == [m[2:] for m in meta if " = " in m][-len(KEYS):]
    compile((tmp_path / "plot.py").read_text(), "plot.py", "exec")


def test_cli_flags_override_file(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("isr_db = 30\nsnr_db = 10\n")
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", str(cfg), "--snr-db", "25", "--trials", "2", "--ns", "200",
                 "--isr-points", "20,40", "--out", str(out)]) == 0
    meta, body = _read(out)
    assert "# snr_db = 25" in meta and "# isr_db = 30" in meta
    assert body[0] == "isr_db,nmsd_mtls_db,nmsd_mmtls_db,residual_si_mtls_db,residual_si_mmtls_db"
    assert len(body) == 3


def test_cli_spectrum_and_compare_columns(tmp_path):
    s = tmp_path / "s.csv"
    assert main(["spectrum", "--isr_db", "40", "--trials", "2", "--ns", "200", "--eval-len", "1024",
                 "--out", str(s)]) == 0
    assert _read(s)[1][0] == "freq_hz,psd_rx_db,psd_rt_db,psd_post_sic_db"
    c = tmp_path / "c.csv"
    assert main(["compare", "--impulse_prob", "0.05", "--trials", "2", "--ns", "200", "--out", str(c),
                 "--estimators", "mmse,mmtls"]) == 0
    body = _read(c)[1]
    assert body[0] == "snr_db,nmsd_mmse_db,nmsd_mmtls_db"
    assert [float(r.split(",")[0]) for r in body[1:]] == [0, 10, 20, 30]
    assert main(["compare", "--estimators", "lms", "--out", str(c)]) == 2


@pytest.mark.parametrize("cmd", [["fig2"], ["spectrum", "--eval-len", "1024"], ["compare"], ["sweep"]])
def test_cli_output_independent_of_jobs(tmp_path, cmd):
    outs = []
    for jobs in (1, 3):
        out = tmp_path / f"{cmd[0]}_{jobs}.csv"
        extra = [] if cmd[0] == "fig2" else ["--ns", "300"]
        assert main(cmd + extra + ["--trials", "60", "--jobs", str(jobs), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
