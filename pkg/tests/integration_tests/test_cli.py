"""Integration tests for the speckill command line."""
from __future__ import annotations

import json
import os
import shutil

import pandas as pd
import pytest

from speckill.cli import EXIT_ERROR, EXIT_FAIL, EXIT_INVALID, EXIT_OK, main


def run_cli(mock_config_dir, name, out_dir, *extra, command=None):
    argv = ["--config", os.path.join(mock_config_dir, name), "--out", str(out_dir), *extra]
    return main(argv, command=command)


def read_json(path):
    with open(path) as f:
        return json.load(f)


class TestKillerCommands:
    """Tests for killer-certify and killer-probe."""

    def test_certify_scenario(self, mock_config_dir, tmp_path, capsys):
        """The reference ball certifies and writes JSON and Markdown."""
        code = run_cli(mock_config_dir, "killer_certify.json", tmp_path)

        assert code == EXIT_OK
        assert sorted(os.listdir(tmp_path)) == ["certificate.json", "certificate.md"]
        payload = read_json(tmp_path / "certificate.json")
        assert payload["command"] == "killer-certify"
        assert payload["certificate"]["status"] == "CERTIFIED"
        assert "CERTIFIED" in capsys.readouterr().out

    def test_positional_command(self, mock_config_dir, tmp_path):
        """The command may be given before the flags."""
        argv = [
            "killer-certify",
            "--config",
            os.path.join(mock_config_dir, "killer_certify.json"),
            "--out",
            str(tmp_path),
        ]
        assert main(argv) == EXIT_OK

    def test_probe_refutes(self, mock_config_dir, tmp_path, capsys):
        """a = -0.1 leaves an orbit with action in (0, E]."""
        code = run_cli(mock_config_dir, "killer_probe.json", tmp_path)

        assert code == EXIT_FAIL
        payload = read_json(tmp_path / "probe_certificate.json")
        assert payload["certificate"]["status"] == "REFUTED"
        assert "offender: step 5, l = -1" in capsys.readouterr().out

    def test_probe_flag_overrides_config(self, mock_config_dir, tmp_path):
        """--probe supplies the plateau when the config has none."""
        code = run_cli(
            mock_config_dir, "killer_certify.json", tmp_path, "--probe", "-0.1",
            command="killer-probe",
        )
        assert code == EXIT_FAIL

    def test_probe_needs_plateau(self, mock_config_dir, tmp_path):
        """killer-probe without a value is a config error."""
        code = run_cli(mock_config_dir, "killer_certify.json", tmp_path, command="killer-probe")
        assert code == EXIT_INVALID

    def test_csv_rows(self, mock_config_dir, tmp_path):
        """--format csv writes one row per index-n orbit."""
        code = run_cli(mock_config_dir, "killer_certify.json", tmp_path, "--format", "csv")

        assert code == EXIT_OK
        assert os.listdir(tmp_path) == ["certificate.csv"]
        assert len(pd.read_csv(tmp_path / "certificate.csv")) == 65

    def test_repeat_runs_are_identical(self, mock_config_dir, tmp_path):
        """Two runs on the same config give byte-identical reports."""
        for name in ("a", "b"):
            run_cli(mock_config_dir, "killer_certify.json", tmp_path / name, "--format", "json,md")
        for stem in ("certificate.json", "certificate.md"):
            with open(tmp_path / "a" / stem, "rb") as fa, open(tmp_path / "b" / stem, "rb") as fb:
                assert fa.read() == fb.read()


class TestConfigErrors:
    """Tests for invalid configurations and flags."""

    def test_invalid_epsilon(self, mock_config_dir, tmp_path, caplog):
        """epsilon >= r/4 exits with code 3 and names the field."""
        code = run_cli(mock_config_dir, "invalid_epsilon.json", tmp_path)

        assert code == EXIT_INVALID
        assert "killer.epsilon: must be < r/4 = 7/80" in caplog.text
        assert not os.path.exists(tmp_path / "certificate.json")

    def test_unknown_format(self, mock_config_dir, tmp_path):
        """Unknown --format values are rejected."""
        code = run_cli(mock_config_dir, "killer_certify.json", tmp_path, "--format", "xml")
        assert code == EXIT_INVALID

    def test_missing_config(self, tmp_path):
        """A missing config file is an I/O error."""
        code = main(["--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
        assert code == EXIT_ERROR

    def test_config_flag_required(self):
        """argparse exits when --config is absent."""
        with pytest.raises(SystemExit):
            main([])


class TestCoverCommands:
    """Tests for cover-analyze and cover-pb."""

    def test_analyze(self, mock_config_dir, tmp_path):
        """The 4 x 4 torus grid is 8-regular."""
        code = run_cli(mock_config_dir, "torus_cover.json", tmp_path, "--format", "json,csv")

        assert code == EXIT_OK
        summary = read_json(tmp_path / "cover_analysis.json")
        assert summary["balls"] == 16
        assert summary["d"] == 8
        assert len(summary["families"]) <= 9
        assert len(pd.read_csv(tmp_path / "cover_analysis.csv")) == 16

    def test_pb_exit_code_follows_status(self, mock_config_dir, tmp_path):
        """cover-pb exits 0 on PASS and 2 on FAIL, and writes the norm grid."""
        code = run_cli(
            mock_config_dir, "torus_cover.json", tmp_path, "--format", "json,csv",
            "--grid", "32", command="cover-pb",
        )

        report = read_json(tmp_path / "pb_report.json")
        status = report["bound_check"]["status"]
        assert code == (EXIT_FAIL if status == "FAIL" else EXIT_OK)
        norms = pd.read_csv(tmp_path / "pb_norms.csv")
        assert list(norms.columns) == ["x", "y", "norm"]
        assert len(norms) == 32 * 32


class TestBoundPropagate:
    """Tests for bound-propagate."""

    def test_ball_and_pb_traces(self, mock_config_dir, tmp_path):
        """Both traces are derived and audited."""
        code = run_cli(mock_config_dir, "bound_propagate.json", tmp_path)

        assert code == EXIT_OK
        payload = read_json(tmp_path / "bound_trace.json")
        assert payload["theorem"]["audit"]["ok"]
        assert payload["pb"]["audit"]["ok"]
        assert payload["pb"]["bound_value"] == pytest.approx(1 / (128 * 3.141592653589793 * 0.04))

    def certified_run(self, mock_config_dir, tmp_path):
        assert run_cli(mock_config_dir, "killer_certify.json", tmp_path) == EXIT_OK
        shutil.copy(os.path.join(mock_config_dir, "bound_certified.json"), tmp_path)
        return str(tmp_path / "bound_certified.json")

    def test_certificate_replaces_theorem(self, mock_config_dir, tmp_path):
        """A killer-certify certificate supplies c(H1 + K1) = 0 for its ball."""
        config = self.certified_run(mock_config_dir, tmp_path)
        code = main(["--config", config, "--out", str(tmp_path / "out")])

        assert code == EXIT_OK
        payload = read_json(tmp_path / "out" / "bound_trace.json")
        facts = payload["theorem"]["trace"]["facts"]
        certified = [f for f in facts if f["rule"] == "killer_certificate"]
        assert [f["quantity"] for f in certified] == ["c(HK1)"]
        assert [f["rule"] for f in facts].count("killer_theorem") == 1
        assert certified[0]["params"]["digest"] == read_json(tmp_path / "certificate.json")[
            "certificate"
        ]["digest"]
        assert payload["theorem"]["audit"]["ok"]

    def test_tampered_certificate(self, mock_config_dir, tmp_path, caplog):
        """A certificate whose digest does not replay is a config error."""
        config = self.certified_run(mock_config_dir, tmp_path)
        document = read_json(tmp_path / "certificate.json")
        document["certificate"]["digest"] = "0" * 64
        with open(tmp_path / "certificate.json", "w") as f:
            json.dump(document, f)

        code = main(["--config", config, "--out", str(tmp_path / "out")])
        assert code == EXIT_INVALID
        assert "bound.certificates[0].path: Certificate digest does not match" in caplog.text

    def test_certificate_for_other_ball(self, mock_config_dir, tmp_path, caplog):
        """The certified ball must have the certificate's r and E."""
        self.certified_run(mock_config_dir, tmp_path)
        config = read_json(tmp_path / "bound_certified.json")
        config["bound"]["certificates"][0]["ball"] = 2
        with open(tmp_path / "bound_certified.json", "w") as f:
            json.dump(config, f)

        code = main(["--config", str(tmp_path / "bound_certified.json"), "--out", str(tmp_path)])
        assert code == EXIT_INVALID
        assert "bound.balls[1]: r and E must match its certificate" in caplog.text
