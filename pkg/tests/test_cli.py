import json
import subprocess
import sys

import numpy as np
import pytest

from renest import acceptance
from renest.cli import THEOREMS, build_parser, main


@pytest.fixture()
def samples(tmp_path):
    rng = np.random.default_rng(0)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    np.savetxt(a, rng.normal(0, 1, (60, 1)), delimiter=",")
    np.savetxt(b, rng.normal(1, 1, (60, 1)), delimiter=",")
    return str(a), str(b)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_estimate_plugin(samples, capsys):
    a, b = samples
    argv = ["estimate", "--method", "plugin-smoothed", "--divergence", "kl", "--x", a, "--y", b,
            "--sigma", "0.5", "--seed", "7", "--mc-draws", "2000"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    report = json.loads(out)
    assert isinstance(report["result"]["value"], float)
    assert report["seed"] == 7 and report["version"]
    assert report["config"]["sigma"] == 0.5
    _, again, _ = run(argv, capsys)
    assert again == out


def test_alpha_one_rejected(samples, capsys):
    a, b = samples
    code, _, err = run(["estimate", "--method", "plugin-smoothed", "--divergence", "renyi", "--alpha", "1.0",
                        "--x", a, "--y", b, "--sigma", "0.5"], capsys)
    assert code == 2 and "alpha" in err


def test_bad_flag_exit_two(capsys):
    assert run(["estimate", "--nope"], capsys)[0] == 2
    assert run(["bound", "--theorem", "kl-compact", "--r", "1"], capsys)[0] == 2


def test_bad_data_exit_three(tmp_path, samples, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("0.1\nnan\n")
    code, _, err = run(["estimate", "--method", "plugin-smoothed", "--x", str(bad), "--y", samples[1],
                        "--sigma", "1"], capsys)
    assert code == 3 and "non-finite" in err
    assert run(["estimate", "--method", "plugin-smoothed", "--x", str(tmp_path / "missing.csv"),
                "--y", samples[1], "--sigma", "1"], capsys)[0] == 3


def test_config_file_and_seed_precedence(tmp_path, samples, capsys, monkeypatch):
    a, b = samples
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# flat key = value\nsigma = 0.3\nmc-draws = 1000\nseed = 3\n")
    monkeypatch.setenv("RENEST_SEED", "11")
    base = ["estimate", "--method", "plugin-smoothed", "--x", a, "--y", b, "--config", str(cfg)]
    report = json.loads(run(base + ["--sigma", "0.4"], capsys)[1])
    assert report["config"]["sigma"] == 0.4 and report["config"]["mc_draws"] == 1000
    assert report["seed"] == 3
    cfg.write_text("sigma = 0.3\n")
    assert json.loads(run(base, capsys)[1])["seed"] == 11
    cfg.write_text("bogus = 1\n")
    assert run(base, capsys)[0] == 2


def test_oracle_and_bound(capsys):
    out = json.loads(run(["oracle", "--family", "discrete", "--mu-atoms", "0,1", "--mu-probs", "0.5,0.5",
                          "--nu-atoms", "0,1", "--nu-probs", "0.25,0.75"], capsys)[1])
    assert out["result"]["value"] == pytest.approx(0.143841, abs=1e-6)
    out = json.loads(run(["oracle", "--family", "gaussian", "--mu-mean", "0", "--mu-var", "1", "--nu-mean", "1",
                          "--nu-var", "1", "--divergence", "renyi", "--alpha", "2"], capsys)[1])
    assert out["result"]["value"] == pytest.approx(1.0)
    out = json.loads(run(["bound", "--theorem", "kl-compact", "--r", "0", "--d", "1", "--sigma", "1",
                          "--n", "10000", "--z", "0.1"], capsys)[1])
    assert set(out["result"]) >= {"radius", "probability", "raw_probability", "log_constants"}
    assert out["result"]["radius"] == pytest.approx(1.595e6, rel=1e-3)


@pytest.mark.parametrize("theorem,flags", [
    ("renyi-compact", "--r 1 --d 1 --sigma 1 --n 100 --z 0.1 --alpha 2"),
    ("kl-subgauss", "--L 1 --p 2 --tau 0.5 --d 1 --sigma 1 --n 100 --z 0.1"),
    ("one-sample", "--r 1 --d 1 --sigma 1 --n 100 --z 0.1"),
    ("neural-kl", "--M 2 --beta 1 --d 1 --delta 0.01 --n 100 --z 0.1"),
    ("neural-renyi", "--M 2 --beta 1 --d 1 --n 100 --z 0.1 --alpha 0.5"),
    ("unsmoothed-kl", "--n 100 --d 1 --s 1 --r 1 --M 2 --z 0.1"),
    ("smoothing-gap", "--M 2 --d 1 --s 1 --sigma 0.1"),
])
def test_every_theorem_runs(theorem, flags, capsys):
    code, out, _ = run(["bound", "--theorem", theorem] + flags.split(), capsys)
    assert code == 0
    assert json.loads(out)["result"]["radius"] >= 0


def test_help_lists_theorems():
    text = build_parser()._subparsers._group_actions[0].choices["bound"].format_help()
    for tag in THEOREMS:
        assert tag in text


def test_rademacher_and_audit(tmp_path, samples, capsys):
    small = tmp_path / "s.csv"
    np.savetxt(small, np.array([[0.0], [0.0], [1.0]]), delimiter=",")
    out = json.loads(run(["rademacher", "--x", str(small), "--mode", "exact", "--bound", "2"], capsys)[1])
    assert out["result"]["value"] == pytest.approx(4.0)
    a, b = samples
    code, out, _ = run(["audit", "--x", a, "--y", b, "--alpha", "2", "--epsilon", "0.1", "--m", "2",
                        "--steps", "20", "--restarts", "1", "--alt-gap", "0.5"], capsys)
    assert code == 0
    assert json.loads(out)["result"]["decision"] in ("reject_H0", "fail_to_reject")


def test_out_and_timing(tmp_path, capsys):
    target = tmp_path / "r.json"
    argv = ["oracle", "--family", "gaussian", "--mu-mean", "0", "--mu-var", "1", "--nu-mean", "0",
            "--nu-var", "2", "--out", str(target), "--timing"]
    assert run(argv, capsys)[0] == 0
    assert "wall_clock_seconds" in json.loads(target.read_text())


def test_verify_subset(capsys):
    code, out, err = run(["verify", "--only", "5,8"], capsys)
    assert code == 0
    assert "criterion  5 PASS" in err
    assert json.loads(out)["result"]["passed"] is True


def test_verify_names_failing_criterion(monkeypatch, capsys):
    monkeypatch.setattr(acceptance, "c_ds", lambda d, s: 0.8)
    code, out, err = run(["verify", "--only", "5"], capsys)
    assert code == 4
    assert "FAILED: criterion 5" in err
    assert json.loads(out)["result"]["failed"] == [5]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "renest", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "renest" in proc.stdout
