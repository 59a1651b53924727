import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from torusweyl import cli
from torusweyl.errors import ConvergenceError
from torusweyl.lattice import ball_count

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(command, config, out, *extra):
    return cli.main([command, "--config", str(config), "--out", str(out), *extra])


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# torusweyl ") and "config_sha256=" in lines[0]
    return list(csv.DictReader(lines[1:]))


def write_config(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def test_spectrum_constant_median(tmp_path):
    assert run("spectrum", CONFIGS / "spectrum_constant.json", tmp_path) == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert list(rows[0]) == ["j", "mu_j", "j_mu_j", "lambda_plus_j", "lambda_minus_j"]
    # the trusted window of the K = 24 lattice
    jm = np.array([float(r["j_mu_j"]) for r in rows])
    T = ball_count(2, 24)
    med = np.median(jm[-(-T // 4) : T // 2 + 1])
    assert abs(med - 1 / (4 * math.pi)) < 0.1 / (4 * math.pi)


def test_spectrum_schrodinger_zero(tmp_path):
    assert run("spectrum", CONFIGS / "spectrum_schrodinger_zero.json", tmp_path) == 0
    summary = json.loads((tmp_path / "spectrum_summary.json").read_text())
    assert summary["negative_count"] == 0


@pytest.mark.parametrize(
    "command, config, files",
    [
        ("spectrum", "spectrum_constant.json", ["spectrum.csv"]),
        ("weyl", "weyl_cosine.json", ["convergence.csv", "weyl_report.json"]),
        ("semiclassical", "semiclassical_constant.json", ["sweep.csv"]),
        ("clr", "clr_cosine_family.json", ["clr.csv"]),
        ("ncint", "ncint_laplacian.json", ["ncint.csv", "ncint_report.json"]),
    ],
)
def test_commands_deterministic(tmp_path, command, config, files):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(command, CONFIGS / config, a) == 0
    assert run(command, CONFIGS / config, b) == 0
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_weyl_report_fields(tmp_path):
    run("weyl", CONFIGS / "weyl_cosine.json", tmp_path)
    rep = json.loads((tmp_path / "weyl_report.json").read_text())
    for key in ("estimated_Lambda_abs", "predicted_abs", "window", "uncertainty", "quadrature_delta"):
        assert key in rep
    rows = read_csv(tmp_path / "convergence.csv")
    assert list(rows[0]) == ["K", "estimate", "prediction", "gap"]
    assert abs(float(rows[-1]["gap"])) < 0.1 * float(rows[-1]["prediction"])


def test_semiclassical_csv(tmp_path):
    run("semiclassical", CONFIGS / "semiclassical_constant.json", tmp_path)
    rows = read_csv(tmp_path / "sweep.csv")
    assert list(rows[0])[:6] == ["h", "K", "count", "scaled", "prediction", "adequacy"]
    assert [int(r["count"]) for r in rows[:3]] == [1, 9, 37]


def test_clr_csv(tmp_path):
    run("clr", CONFIGS / "clr_cosine_family.json", tmp_path)
    rows = read_csv(tmp_path / "clr.csv")
    assert {"member", "lhs", "orlicz", "ratio"} <= set(rows[0])
    assert len(rows) == 8


def test_ncint_verdict(tmp_path):
    run("ncint", CONFIGS / "ncint_laplacian.json", tmp_path)
    rep = json.loads((tmp_path / "ncint_report.json").read_text())
    assert rep["verdict"] is True
    rows = read_csv(tmp_path / "ncint.csv")
    assert list(rows[0]) == ["N", "log_mean_re", "log_mean_im", "dilation_spread"]


def test_seed_changes_provenance(tmp_path):
    cfg = CONFIGS / "spectrum_schrodinger_zero.json"
    run("spectrum", cfg, tmp_path / "a", "--seed", "1")
    run("spectrum", cfg, tmp_path / "b", "--seed", "2")
    first = lambda d: (tmp_path / d / "spectrum.csv").read_text().splitlines()[0]  # noqa: E731
    assert first("a") != first("b")


def test_random_potential_reproducible(tmp_path):
    cfg = write_config(tmp_path, {"n": 2, "K": 4, "operator": "schrodinger", "h": "0.3", "r": 2,
                                  "potential": {"type": "random_trig", "degree": 1, "scale": "2"}})
    run("spectrum", cfg, tmp_path / "a", "--seed", "11")
    run("spectrum", cfg, tmp_path / "b", "--seed", "11")
    assert (tmp_path / "a" / "spectrum.csv").read_bytes() == (tmp_path / "b" / "spectrum.csv").read_bytes()


@pytest.mark.parametrize(
    "data",
    [
        {"n": 2, "K": 4, "operator": "qup", "potential": {"type": "radial_singular", "center": [0, 0], "beta": "2.5"},
         "Q": {"kind": "homogeneous", "s": "-1"}, "P": {"kind": "homogeneous", "s": "-1"}},
        {"n": 2, "K": 4, "operator": "qup", "potential": {"type": "nonsense"}},
        {"n": 2, "K": -1, "operator": "schrodinger", "h": "1", "potential": {"type": "constant", "value": "0"}},
        {"n": 2, "K": 4, "operator": "resolvent", "potential": {"type": "constant", "value": "0"}},
        {"n": 2, "K": 4, "operator": "schrodinger", "h": "-0.5", "potential": {"type": "constant", "value": "0"}},
    ],
)
def test_config_errors_exit_2(tmp_path, data, capsys):
    assert run("spectrum", write_config(tmp_path, data), tmp_path) == 2
    assert "config error" in capsys.readouterr().err


def test_malformed_json_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"n": 2,\n "K": }')
    assert run("spectrum", p, tmp_path) == 2
    assert "line 2" in capsys.readouterr().err


def test_bad_seed_exit_2(tmp_path):
    assert run("spectrum", CONFIGS / "spectrum_schrodinger_zero.json", tmp_path, "--seed", str(2**64)) == 2


def test_convergence_error_exit_3(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise ConvergenceError("forced")

    monkeypatch.setattr(cli, "spectrum", boom)
    assert run("spectrum", CONFIGS / "spectrum_constant.json", tmp_path) == 3


def test_acceptance_single_pass(tmp_path, capsys):
    assert run("acceptance", write_config(tmp_path, {"only": [9]}), tmp_path) == 0
    assert "[PASS]  9" in capsys.readouterr().out
    rep = json.loads((tmp_path / "acceptance_report.json").read_text())
    assert rep["all_passed"] is True and rep["criteria"][0]["number"] == 9


def test_acceptance_failure_exit_1(tmp_path, capsys):
    assert run("acceptance", write_config(tmp_path, {"only": [6]}), tmp_path) == 1
    assert "[FAIL]  6" in capsys.readouterr().out


def test_acceptance_rejects_unknown_criterion(tmp_path):
    assert run("acceptance", write_config(tmp_path, {"only": [11]}), tmp_path) == 2
