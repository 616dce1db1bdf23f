import json

import pytest

from bdg2gl.cli import (EXIT_ASSUMPTION, EXIT_CONFIG, EXIT_OK, ConfigError, load_config, main,
                        reference_config_text)



def _run(tmp_path, *args, config=None):
    argv = list(args) + ["--out", str(tmp_path)]
    if config is not None:
        path = tmp_path / "run.ini"
        path.write_text(config)
        argv += ["--config", str(path)]
    return main(argv)


def test_print_config(capsys):
    assert main(["print-config"]) == EXIT_OK
    text = capsys.readouterr().out
    assert text == reference_config_text()
    assert "[model]" in text and "v0 = 20.0" in text


def test_reference_config_round_trip(tmp_path):
    path = tmp_path / "ref.ini"
    path.write_text(reference_config_text())
    a, b = load_config(path).echo(), load_config().echo()
    a.pop("source"), b.pop("source")
    assert a == b


def test_tc_matches_golden(tmp_path):
    assert _run(tmp_path, "tc") == EXIT_OK
    rec = json.loads((tmp_path / "tc.json").read_text())
    assert rec["golden_match"]
    man = json.loads((tmp_path / "manifest_tc.json").read_text())
    assert man["exit_status"] == 0
    assert {"bdg2gl", "numpy", "scipy", "python"} <= set(man["versions"])
    assert man["config"]["v0"] == 20.0


@pytest.mark.parametrize("mode", ["constant", "newton", "phase-plane"])
def test_solve_gl(tmp_path, mode):
    cfg = f"[model]\nD = 3.0\n[gl]\nmode = {mode}\n"
    assert _run(tmp_path, "solve-gl", config=cfg) == EXIT_OK
    rec = json.loads((tmp_path / "gl.json").read_text())
    assert rec["residual"] <= 1e-8
    assert (tmp_path / "psi.csv").exists() and (tmp_path / "psi.dat").exists()


def test_solve_gl_below_threshold_is_assumption_exit(tmp_path):
    cfg = "[model]\nD = 0.5\n[gl]\nmode = phase-plane\n"
    assert _run(tmp_path, "solve-gl", config=cfg) == EXIT_ASSUMPTION
    assert json.loads((tmp_path / "manifest_solve-gl.json").read_text())["exit_status"] == EXIT_ASSUMPTION


def test_verify_passes(tmp_path, capsys):
    assert _run(tmp_path, "verify") == EXIT_OK
    summary = json.loads((tmp_path / "verify.json").read_text())["summary"]
    assert summary["passed"] == summary["total"]
    assert "PASS" in capsys.readouterr().out


@pytest.mark.parametrize("text", ["[model]\nbogus = 1\n", "[model]\nv0 = abc\n",
                                  "[solver]\ndamping = 2.0\n", "[nosuch]\nx = 1\n"])
def test_bad_config_exit_code(tmp_path, text):
    assert _run(tmp_path, "tc", config=text) == EXIT_CONFIG


def test_load_config_raises_on_unknown_key(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[grid]\nwidth = 3\n")
    with pytest.raises(ConfigError):
        load_config(path)
