"""Unit tests for config parsing/emission and the command-line interface."""

import json
import os

import numpy as np
import pytest

from hamlearn.cli import main
from hamlearn.config import RunConfig, emit_config, parse_config
from hamlearn.errors import SchemaError


class TestParseConfig:
    def test_empty_object_gives_defaults(self):
        config = parse_config("{}")
        assert config == RunConfig()
        assert config.model.graph == "complete"
        assert config.particles == 2000
        assert config.resample.a == 0.9

    def test_unknown_top_level_field_named(self):
        with pytest.raises(SchemaError, match="particels"):
            parse_config('{"particels": 100}')

    def test_unknown_nested_field_named(self):
        with pytest.raises(SchemaError, match="model.qubits"):
            parse_config('{"model": {"qubits": 4}}')

    def test_bad_json_reports_line(self):
        with pytest.raises(SchemaError, match="line 2"):
            parse_config('{\n  "particles": }')

    def test_type_errors_name_field(self):
        with pytest.raises(SchemaError, match="particles"):
            parse_config('{"particles": "many"}')
        with pytest.raises(SchemaError, match="resample.a"):
            parse_config('{"resample": {"a": 1.5}}')
        with pytest.raises(SchemaError, match="bitflip_alpha"):
            parse_config('{"bitflip_alpha": 0.7}')

    def test_explicit_edge_list(self):
        config = parse_config('{"model": {"graph": [[0, 1], [1, 2]], "n": 3}}')
        assert config.model.graph == ((0, 1), (1, 2))

    def test_bounds_enforced(self):
        with pytest.raises(SchemaError, match="model.box"):
            parse_config('{"model": {"box": [1.0, -1.0]}}')
        with pytest.raises(SchemaError, match="trials"):
            parse_config('{"trials": 0}')
        with pytest.raises(SchemaError, match="particles"):
            parse_config('{"particles": 1}')


class TestRoundTrip:
    def test_default_round_trip(self):
        config = RunConfig()
        assert parse_config(emit_config(config)) == config

    def test_golden_file_round_trip(self):
        golden = os.path.join(os.path.dirname(__file__), "data", "golden_config.json")
        with open(golden) as handle:
            text = handle.read()
        config = parse_config(text)
        assert config.particles == 5000
        assert config.model.n == 4
        assert emit_config(config) == text
        assert parse_config(emit_config(config)) == config

    def test_custom_round_trip(self):
        config = parse_config(
            json.dumps(
                {
                    "model": {
                        "kind": "ising",
                        "graph": [[0, 2], [1, 2]],
                        "n": 3,
                        "box": [0.0, 100.0],
                        "degenerate_couplings": True,
                    },
                    "experiment": {"kind": "QLE", "measurement": "two"},
                    "particles": 1234,
                    "resample": {"a": 0.98, "threshold": 0.4},
                    "evaluator": {"mode": "noisy_exact", "noise": 0.1},
                    "bitflip_alpha": 0.05,
                    "n_experiments": 77,
                    "trials": 3,
                    "seed": 99,
                    "out": "somewhere",
                    "pgh": {"t_max": 1e5, "min_separation": 1e-9, "max_redraws": 17},
                    "fit_window": 0.2,
                    "truth": [0.5, 0.25],
                }
            )
        )
        assert parse_config(emit_config(config)) == config


def write_config(tmp_path, **extra):
    payload = {
        "model": {"kind": "single"},
        "experiment": {"kind": "IQLE", "measurement": "two"},
        "particles": 200,
        "n_experiments": 15,
        "trials": 2,
        "seed": 3,
    }
    payload.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    return str(path)


class TestCli:
    def test_learn_writes_outputs(self, tmp_path, capsys):
        config_path = write_config(tmp_path)
        out_dir = str(tmp_path / "results")
        assert main(["learn", "--config", config_path, "--out", out_dir]) == 0
        for name in ("trajectories.jsonl", "summary.csv", "fits.csv", "meta.json"):
            assert os.path.exists(os.path.join(out_dir, name))
        captured = capsys.readouterr()
        assert "median loss" in captured.out

    def test_learn_deterministic_output_bytes(self, tmp_path):
        config_path = write_config(tmp_path)
        out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["learn", "--config", config_path, "--out", out_a]) == 0
        assert main(["learn", "--config", config_path, "--out", out_b]) == 0
        for name in ("summary.csv", "fits.csv"):
            with open(os.path.join(out_a, name), "rb") as fa:
                bytes_a = fa.read()
            with open(os.path.join(out_b, name), "rb") as fb:
                bytes_b = fb.read()
            assert bytes_a == bytes_b

    def test_learn_trials_override(self, tmp_path):
        config_path = write_config(tmp_path)
        out_dir = str(tmp_path / "results")
        assert main(["learn", "--config", config_path, "--out", out_dir, "--trials", "1"]) == 0
        with open(os.path.join(out_dir, "fits.csv")) as handle:
            assert len(handle.readlines()) == 2  # header + one trial

    def test_risk_scan_csv(self, tmp_path, capsys):
        out_dir = str(tmp_path / "risk")
        assert main([
            "risk", "--mu", "0.5", "--sigma", "0.1", "--strategy", "none",
            "--points", "5", "--out", out_dir,
        ]) == 0
        with open(os.path.join(out_dir, "risk.csv")) as handle:
            lines = handle.read().strip().splitlines()
        assert lines[0] == "x_inv,t,alpha,risk,stderr"
        assert len(lines) == 6

    def test_fit_refits_summary(self, tmp_path, capsys):
        path = tmp_path / "summary.csv"
        rows = ["experiment_index,p25,p50,p75"]
        for k in range(40):
            value = 2.0 * np.exp(-0.1 * k)
            rows.append(f"{k},{value},{value},{value}")
        path.write_text("\n".join(rows) + "\n")
        assert main(["fit", "--input", str(path), "--column", "p50", "--window", "0.0"]) == 0
        out = capsys.readouterr().out
        gamma = float(out.split("gamma=")[1].split()[0])
        assert gamma == pytest.approx(0.1, rel=1e-9)

    def test_validate_passes(self, capsys):
        assert main(["validate", "--instances", "5", "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 4
        assert "FAIL" not in out

    def test_schema_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"unknown_field": 1}')
        assert main(["learn", "--config", str(path)]) == 2
        assert "unknown_field" in capsys.readouterr().err

    def test_meta_echoes_config(self, tmp_path):
        config_path = write_config(tmp_path)
        out_dir = str(tmp_path / "results")
        assert main(["learn", "--config", config_path, "--out", out_dir]) == 0
        with open(os.path.join(out_dir, "meta.json")) as handle:
            meta = json.load(handle)
        assert meta["config"]["particles"] == 200
        assert meta["config"]["model"]["kind"] == "single"
        assert "numpy" in meta["versions"]
        assert len(meta["trial_seeds"]) == 2
