import io
import os
import subprocess
import sys

import pytest

from nsfcontact import cli
from nsfcontact.config import Config, dump_config, parse_config, parse_config_text
from nsfcontact.exceptions import ConfigError


def test_defaults_roundtrip():
    cfg = Config()
    assert parse_config_text(dump_config(cfg)) == cfg


def test_keys_are_case_sensitive():
    cfg = parse_config_text("[thermo]\nR = 2.0\n")
    assert cfg.thermo.R == 2.0


def test_lists_and_bools():
    cfg = parse_config_text("[experiment]\nalphas = 0.01, 0.03\nbaseline = no\n")
    assert cfg.experiment.alphas == (0.01, 0.03)
    assert cfg.experiment.baseline is False


@pytest.mark.parametrize("text, line, word", [
    ("[thermo]\ngamma = 1.5\n", 2, "gamma > 2"),
    ("[contact]\nrho_plus = 2\n", 2, "theta_plus"),
    ("[grid]\nn = 512\ncolour = red\n", 3, "unknown key"),
    ("[solver]\ndissipation_sign = -1\n", 2, "unknown key"),
    ("[bogus]\nx = 1\n", 1, "unknown section"),
    ("x = 1\n", 1, "outside"),
    ("[grid]\nn = many\n", 2, "bad value"),
    ("[init]\nwidth_cells = 2\n", 2, "width_cells"),
    ("[shift]\ndelta = 0.001\n", 2, "delta"),
    ("[experiment]\nconverge_levels = 3\n", 2, "converge_levels"),
    ("[grid]\nn = 8\n[grid]\nn = 9\n", 3, None),
])
def test_errors_carry_line(text, line, word, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ConfigError) as err:
        parse_config(path)
    assert err.value.line == line
    msg = str(err.value)
    assert msg.startswith(f"{path}:{line}:")
    if word:
        assert word in msg


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "none.txt")


def _main(*argv):
    buf = io.StringIO()
    code = cli.main(list(argv), out=buf)
    return code, buf.getvalue()


def test_verify_deterministic():
    c1, out1 = _main("verify", "--seed", "3")
    c2, out2 = _main("verify", "--seed", "3")
    assert c1 == 0 and out1 == out2
    assert all(line.startswith("PASS") for line in out1.strip().splitlines())


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("[thermo]\ngamma = 1.5\n")
    assert _main("verify", "--config", str(bad))[0] == cli.EXIT_CONFIG
    assert "bad.txt:2:" in capsys.readouterr().err
    assert _main("verify", "--config", str(tmp_path / "nope.txt"))[0] == cli.EXIT_CONFIG
    assert _main("verify", "--seed", "-1")[0] == cli.EXIT_CONFIG
    assert _main("frobnicate")[0] == cli.EXIT_CONFIG
    assert _main("report", str(tmp_path / "empty"))[0] == cli.EXIT_IO


def test_run_persist_report(tmp_path):
    cfg = tmp_path / "run.txt"
    cfg.write_text("[grid]\nn = 128\n[solver]\nt_end = 0.02\nnu = 2e-3\nkappa = 2e-3\n"
                   "[shift]\ndelta = 0.1\nepsilon = 0.1\n")
    out = tmp_path / "out"
    code, text = _main("run", "--config", str(cfg), "--out", str(out))
    assert code == 0, text
    assert "monitor PASS" in text
    for name in ("manifest.txt", "config.txt", "series.csv", "diagnostics.csv"):
        assert os.path.isfile(out / name)
    assert parse_config(out / "config.txt").grid.n == 128
    code, text = _main("report", str(out))
    assert code == 0 and "reproduced True" in text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nsfcontact", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("run", "sweep", "converge", "verify", "commutator", "report"):
        assert name in proc.stdout
