"""CLI parsing, exit codes, artifacts, determinism."""

import json
import subprocess
import sys

import pytest

import harnack_forge.verifier_cli as cli


class TestParse:
    def test_defaults(self):
        cfg = cli.parse_cli(["errata"])
        assert cfg.name == "errata"
        assert cfg.seed == 0 and cfg.jobs >= 1
        assert cfg.params == cli.DEFAULTS["errata"]

    def test_set_override(self):
        cfg = cli.parse_cli(["riccati", "--set", "k1=3.5", "--set", "n_eval=11"])
        assert cfg.params["k1"] == 3.5
        assert cfg.params["n_eval"] == 11

    def test_dotted_keys_scope_by_campaign(self):
        cfg = cli.parse_cli(
            ["riccati", "--set", "riccati.k1=2.0", "--set", "errata.k1=9.0"]
        )
        assert cfg.params["k1"] == 2.0  # foreign-campaign key ignored

    def test_config_file(self, tmp_path):
        path = tmp_path / "conf.json"
        path.write_text(json.dumps({"riccati.t_end": 1.5, "seedless": None}))
        with pytest.raises(SystemExit):
            cli.parse_cli(["riccati", "--config", str(path)])

    def test_config_file_valid_keys(self, tmp_path):
        path = tmp_path / "conf.json"
        path.write_text(json.dumps({"riccati.t_end": 1.5}))
        cfg = cli.parse_cli(["riccati", "--config", str(path)])
        assert cfg.params["t_end"] == 1.5

    def test_unknown_campaign_exits(self):
        with pytest.raises(SystemExit):
            cli.parse_cli(["fourier"])

    def test_json_values_in_set(self):
        cfg = cli.parse_cli(["errata", "--set", "t_grid=[0.5,1.0]"])
        assert cfg.params["t_grid"] == [0.5, 1.0]


class TestMain:
    def test_errata_campaign_passes(self, tmp_path):
        out = str(tmp_path / "out")
        assert cli.main(["errata", "--out", out]) == 0
        report = json.loads((tmp_path / "out" / "report_errata.json").read_text())
        assert report["passed"] is True
        assert report["campaign"] == "errata"
        for art in report["artifacts"]:
            assert (tmp_path / "out" / art).exists()

    def test_kernel_sharpness_campaign(self, tmp_path):
        out = str(tmp_path / "out")
        assert cli.main(["kernel-sharpness", "--out", out]) == 0
        report = json.loads(
            (tmp_path / "out" / "report_kernel-sharpness.json").read_text()
        )
        assert report["passed"] is True

    def test_numeric_failure_exit_code(self, tmp_path):
        # an impossible tolerance turns agreement into a reported failure
        code = cli.main(
            [
                "closed-form",
                "--out",
                str(tmp_path / "out"),
                "--set",
                "rel_tol=1e-18",
            ]
        )
        assert code == 1

    def test_usage_error_exit_code(self):
        assert cli.main(["no-such-campaign"]) == 2

    def test_bad_config_path_exit_code(self, tmp_path):
        code = cli.main(
            ["errata", "--config", str(tmp_path / "missing.json")]
        )
        assert code == 2

    def test_internal_error_exit_code(self, tmp_path, monkeypatch):
        def boom(cfg):
            raise RuntimeError("synthetic")

        monkeypatch.setitem(cli.RUNNERS, "errata", boom)
        assert cli.main(["errata", "--out", str(tmp_path / "out")]) == 3

    def test_deterministic_reports(self, tmp_path):
        for d in ("a", "b"):
            assert cli.main(["errata", "--out", str(tmp_path / d)]) == 0
        ra = json.loads((tmp_path / "a" / "report_errata.json").read_text())
        rb = json.loads((tmp_path / "b" / "report_errata.json").read_text())
        ra.pop("timestamp")
        rb.pop("timestamp")
        assert ra == rb
        csv_a = (tmp_path / "a" / "errata.csv").read_bytes()
        csv_b = (tmp_path / "b" / "errata.csv").read_bytes()
        assert csv_a == csv_b


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "harnack_forge.verifier_cli",
            "errata",
            "--out",
            str(tmp_path / "out"),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "out" / "report_errata.json").exists()
