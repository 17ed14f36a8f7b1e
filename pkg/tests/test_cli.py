import json
import math

import pytest

from stochmech import nelson_sde
from stochmech.cli import main
from stochmech.serialize import chsh_report_from_dict, chsh_report_to_dict, series_from_dict

INV_SQRT2 = 1.0 / math.sqrt(2.0)


def two_oscillator_config(**overrides):
    cfg = {
        "system": {"clusters": [
            {"kind": "harmonic", "omega": 1.0, "k": 2},
            {"kind": "harmonic", "omega": 1.0, "k": 2},
        ]},
        "state": {"terms": [
            {"coefficient": INV_SQRT2, "indices": [0, 1]},
            {"coefficient": INV_SQRT2, "indices": [1, 0]},
        ]},
        "observables": [
            {"kind": "position", "cluster": 0},
            {"kind": "position", "cluster": 1},
        ],
        "lags": {"start": 0.0, "stop": 2.0 * math.pi, "step": math.pi / 4.0},
        "output": {"format": "csv"},
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_rows(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_qm_corr_table(tmp_path):
    cfg_path = write_config(tmp_path, two_oscillator_config())
    out = tmp_path / "qm.csv"
    assert main(["qm-corr", "--config", cfg_path, "--out", str(out)]) == 0
    header, rows = read_rows(out)
    assert header == ["lag", "value", "method"]
    assert len(rows) == 9
    assert float(rows[0][1]) == pytest.approx(0.5, abs=1e-9)
    assert rows[0][2] == "qm"
    # newline endings and full-precision floats
    raw = out.read_bytes()
    assert b"\r" not in raw
    assert (tmp_path / "qm.csv.meta.json").exists()


def test_missing_state_block_exits_2(tmp_path, capsys):
    cfg = two_oscillator_config()
    del cfg["state"]
    cfg_path = write_config(tmp_path, cfg)
    assert main(["qm-corr", "--config", cfg_path, "--out", str(tmp_path / "x.csv")]) == 2
    assert "state" in capsys.readouterr().err


def test_empty_lags_exit_2(tmp_path):
    cfg = two_oscillator_config(lags=[])
    cfg_path = write_config(tmp_path, cfg)
    assert main(["qm-corr", "--config", cfg_path, "--out", str(tmp_path / "x.csv")]) == 2


def test_invalid_json_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["qm-corr", "--config", str(path), "--out", str(tmp_path / "x.csv")]) == 2


def test_compare_two_oscillators(tmp_path):
    cfg_path = write_config(tmp_path, two_oscillator_config())
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--config", cfg_path, "--out", str(out)]) == 0
    header, rows = read_rows(out)
    assert header == ["lag", "qm", "bohm", "nelson"]
    summary = json.loads((tmp_path / "cmp.csv.summary.json").read_text())
    assert summary["equal_time_agreement"] < 1e-6
    assert summary["max_abs_dev_qm_bohm"] > 0.1
    assert summary["max_abs_dev_qm_nelson"] > 0.1


def test_compare_product_state(tmp_path):
    cfg = two_oscillator_config()
    cfg["state"] = {"terms": [{"coefficient": 1.0, "indices": [0, 0]}]}
    cfg_path = write_config(tmp_path, cfg)
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--config", cfg_path, "--out", str(out)]) == 0
    summary = json.loads((tmp_path / "cmp.csv.summary.json").read_text())
    assert summary["max_abs_dev_qm_bohm"] < 1e-6
    assert summary["max_abs_dev_qm_nelson"] < 1e-6


def test_compare_unsupported_nelson_partial_output(tmp_path, capsys):
    cfg = two_oscillator_config()
    cfg["system"]["clusters"] = [
        {"kind": "infinite_well", "half_width": 1.0, "k": 2},
        {"kind": "infinite_well", "half_width": 1.0, "k": 2},
    ]
    cfg["state"]["terms"][1]["coefficient"] = -INV_SQRT2
    cfg["observables"] = [{"kind": "sign", "cluster": 0}, {"kind": "sign", "cluster": 1}]
    cfg_path = write_config(tmp_path, cfg)
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--config", cfg_path, "--out", str(out)]) == 0
    header, _ = read_rows(out)
    assert header == ["lag", "qm", "bohm"]
    assert "Nelson" in capsys.readouterr().err


@pytest.fixture()
def mc_config(tmp_path):
    cfg = two_oscillator_config(
        lags=[0.25, 0.5],
        mc={"n_paths": 3000, "dt": 1e-3, "seed": 424, "epsilon": 1e-3, "horizon": 0.5},
    )
    return write_config(tmp_path, cfg)


def test_nelson_mc_outputs_and_determinism(tmp_path, mc_config, capsys):
    out1 = tmp_path / "mc1.csv"
    out2 = tmp_path / "mc2.csv"
    assert main(["nelson-mc", "--config", mc_config, "--out", str(out1)]) == 0
    assert main(["nelson-mc", "--config", mc_config, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    d1 = (tmp_path / "mc1.csv.diag.json").read_bytes()
    d2 = (tmp_path / "mc2.csv.diag.json").read_bytes()
    assert d1 == d2
    header, rows = read_rows(out1)
    assert header == ["lag", "estimate", "stderr"]
    assert len(rows) == 2
    diag = json.loads(d1)
    assert set(diag) == {"ks_stats", "clamp_rate", "sign_change_fraction"}
    assert diag["clamp_rate"] <= 0.01


def test_nelson_mc_seed_override_changes_bytes(tmp_path, mc_config):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(["nelson-mc", "--config", mc_config, "--out", str(out1)]) == 0
    assert main(["nelson-mc", "--config", mc_config, "--out", str(out2), "--seed", "7"]) == 0
    assert out1.read_bytes() != out2.read_bytes()


def test_nelson_mc_dt_zero_exit_2(tmp_path):
    cfg = two_oscillator_config(
        lags=[0.25],
        mc={"n_paths": 100, "dt": 0.0, "seed": 1, "epsilon": 1e-3, "horizon": 0.5},
    )
    cfg_path = write_config(tmp_path, cfg)
    assert main(["nelson-mc", "--config", cfg_path, "--out", str(tmp_path / "x.csv")]) == 2


def test_nelson_mc_missing_seed_exit_2(tmp_path):
    cfg = two_oscillator_config(
        lags=[0.25],
        mc={"n_paths": 100, "dt": 1e-3, "epsilon": 1e-3, "horizon": 0.5},
    )
    cfg_path = write_config(tmp_path, cfg)
    assert main(["nelson-mc", "--config", cfg_path, "--out", str(tmp_path / "x.csv")]) == 2


def test_nelson_mc_off_grid_lag_exit_2(tmp_path):
    cfg = two_oscillator_config(
        lags=[0.1234567],
        mc={"n_paths": 100, "dt": 1e-3, "seed": 1, "epsilon": 1e-3, "horizon": 0.5},
    )
    cfg_path = write_config(tmp_path, cfg)
    assert main(["nelson-mc", "--config", cfg_path, "--out", str(tmp_path / "x.csv")]) == 2


def test_nelson_mc_clamp_threshold_exit_4(tmp_path, mc_config, monkeypatch):
    monkeypatch.setattr(nelson_sde, "CLAMP_SIGMAS", 0.02)
    assert main(["nelson-mc", "--config", mc_config, "--out", str(tmp_path / "x.csv")]) == 4


def test_chsh_box_violates(tmp_path, capsys):
    cfg = {
        "system": {"clusters": [{"kind": "infinite_well", "half_width": 1.0, "k": 2}]},
        "state": {"terms": [{"coefficient": 1.0, "indices": [0]}]},
        "output": {"format": "json"},
    }
    cfg_path = write_config(tmp_path, cfg)
    out = tmp_path / "chsh.json"
    assert main(["chsh", "--config", cfg_path, "--out", str(out)]) == 0
    captured = capsys.readouterr().out
    assert "VIOLATES" in captured and "infeasible" in captured
    report = chsh_report_from_dict(json.loads(out.read_text()))
    assert report.S == pytest.approx(-2.0379, abs=1e-4)
    assert not report.classical_feasible
    # round trip: emitted JSON reparses to the in-memory structure
    assert chsh_report_to_dict(report) == json.loads(out.read_text())


def test_chsh_harmonic_feasible(tmp_path, capsys):
    cfg = {
        "system": {"clusters": [
            {"kind": "harmonic", "omega": 1.0, "k": 2,
             "grid": {"x_min": -10.0, "x_max": 10.0, "n": 2001}}
        ]},
        "state": {"terms": [{"coefficient": 1.0, "indices": [0]}]},
        "output": {"format": "json"},
    }
    cfg_path = write_config(tmp_path, cfg)
    out = tmp_path / "chsh.json"
    assert main(["chsh", "--config", cfg_path, "--out", str(out)]) == 0
    assert "NO VIOLATION" in capsys.readouterr().out
    report = chsh_report_from_dict(json.loads(out.read_text()))
    assert report.classical_feasible
    assert report.alpha**2 == pytest.approx(2.0 / math.pi, abs=1e-8)


def test_eps_study_table(tmp_path):
    cfg = two_oscillator_config(
        lags=[0.25],
        mc={"n_paths": 1500, "dt": 1e-3, "seed": 11, "epsilon": 1e-3, "horizon": 0.5},
        eps_study={"epsilons": [0.1, 0.03], "lag": 0.25},
    )
    cfg_path = write_config(tmp_path, cfg)
    out = tmp_path / "eps.csv"
    assert main(["eps-study", "--config", cfg_path, "--out", str(out)]) == 0
    header, rows = read_rows(out)
    assert header == ["epsilon", "value", "stderr", "spectral_ref", "abs_dev"]
    assert len(rows) == 2
    assert float(rows[0][0]) == pytest.approx(0.1)


def test_eps_study_empty_list_exit_2(tmp_path):
    cfg = two_oscillator_config(
        lags=[0.25],
        mc={"n_paths": 100, "dt": 1e-3, "seed": 1, "epsilon": 1e-3, "horizon": 0.5},
        eps_study={"epsilons": [], "lag": 0.25},
    )
    cfg_path = write_config(tmp_path, cfg)
    assert main(["eps-study", "--config", cfg_path, "--out", str(tmp_path / "x.csv")]) == 2


def test_eigen_export(tmp_path):
    cfg_path = write_config(tmp_path, two_oscillator_config())
    out = tmp_path / "eigen.csv"
    assert main(["eigen", "--config", cfg_path, "--out", str(out)]) == 0
    header, rows = read_rows(out)
    assert header == ["x", "psi_0", "psi_1"]
    assert len(rows) == 2000


def test_series_json_round_trip():
    raw = {"method": "qm", "lags": [0.0, 1.0], "values": [0.5, 0.2]}
    series = series_from_dict(raw)
    assert series.method == "qm"
    assert series.values == (0.5, 0.2)
