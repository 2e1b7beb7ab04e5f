"""Unit tests for run configuration parsing and report writers."""
from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pandas as pd
import pytest

from speckill.certify.certifier import certify
from speckill.certify.utils.certificate_infra import CertificateStatus
from speckill.errors import ConfigError
from speckill.floer.utils.orbit_infra import Mode
from speckill.radial.utils.pi_rational import PiRational
from speckill.report.config import DEFAULT_FORMATS, config_from_dict, parse_config
from speckill.report.writers import (
    certificate_markdown,
    dumps,
    to_plain,
    write_reports,
)

SCENARIO = {
    "command": "killer-certify",
    "killer": {"n": 1, "lambda": -1, "r": "0.35", "epsilon": "0.05", "E": "0.4"},
}


class TestConfigFromDict:
    """Tests for config_from_dict."""

    def test_scenario(self):
        """Decimal strings become exact parameters."""
        config = config_from_dict(SCENARIO)
        assert config.command == "killer-certify"
        assert config.killer.r == Fraction(7, 20)
        assert config.killer.eps == Fraction(1, 20)
        assert config.killer.energy == PiRational(Fraction(2, 5))
        assert config.output.formats == DEFAULT_FORMATS
        assert config.seed == 0

    def test_command_override(self):
        """The command-line command wins over the config field."""
        data = dict(SCENARIO, probe={"a": "-0.1"})
        config = config_from_dict(data, command="killer-probe")
        assert config.command == "killer-probe"
        assert config.probe_a == PiRational(Fraction(-1, 10))

    def test_unknown_command(self):
        """Unknown commands list the valid ones."""
        with pytest.raises(ConfigError) as exc:
            config_from_dict(dict(SCENARIO, command="killer-kill"))
        assert exc.value.errors[0].startswith("command: unknown command 'killer-kill'")
        assert exc.value.error_code == 3

    def test_collects_every_error(self):
        """All problems are reported at once with field paths."""
        data = {
            "command": "killer-certify",
            "killer": {"n": 1, "lambda": -1, "r": "0.35", "epsilon": "0.1", "E": "0.4", "x": 1},
            "seed": -1,
        }
        with pytest.raises(ConfigError) as exc:
            config_from_dict(data)
        errors = exc.value.errors
        assert "killer.x: unexpected field" in errors
        assert "killer.epsilon: must be < r/4 = 7/80" in errors
        assert "seed: must be a nonnegative integer" in errors

    def test_missing_fields(self):
        """Required killer fields are named."""
        with pytest.raises(ConfigError) as exc:
            config_from_dict({"command": "killer-certify", "killer": {"lambda": -1}})
        assert "killer.r: missing required field" in exc.value.errors
        assert "killer.E: missing required field" in exc.value.errors

    def test_wrong_block(self):
        """Each command needs its own parameter block."""
        with pytest.raises(ConfigError) as exc:
            config_from_dict({"command": "cover-pb", "killer": SCENARIO["killer"]})
        assert any(e.startswith("cover:") for e in exc.value.errors)

    def test_aspherical_defaults_lambda(self):
        """lambda defaults to zero without sphere classes."""
        data = {
            "command": "killer-certify",
            "killer": {"mode": "aspherical", "r": "0.35", "epsilon": "0.05", "E": "0.4"},
        }
        model = config_from_dict(data).killer.model
        assert model.mode is Mode.ASPHERICAL
        assert model.lam == 0

    def test_grid_cover(self):
        """grid_cover builds the regular torus cover."""
        data = {
            "command": "cover-pb",
            "cover": {"grid_cover": {"nx": 4, "ny": 4, "overlap": 0.2}, "grid": 64},
        }
        spec = config_from_dict(data).cover
        assert len(spec.cover) == 16
        assert spec.grid == 64
        assert spec.cutoff == "polynomial"

    def test_explicit_cover_and_bad_cutoff(self):
        """Unknown cutoffs are rejected."""
        data = {
            "command": "cover-analyze",
            "cover": {
                "domain": {"torus": [1, 1]},
                "balls": [{"c": [0.5, 0.5], "r": 0.8}],
                "cutoff": "gaussian",
            },
        }
        with pytest.raises(ConfigError) as exc:
            config_from_dict(data)
        assert any(e.startswith("cover.cutoff:") for e in exc.value.errors)

    def test_bound_block(self):
        """Balls and pb parameters are both read."""
        data = {
            "command": "bound-propagate",
            "bound": {
                "model": {"n": 1, "lambda": -1},
                "balls": [{"r": "0.2", "E": "0.4"}, {"r": "0.3", "E": "0.4"}],
                "pb": {"d": 8, "r": "0.2"},
            },
        }
        spec = config_from_dict(data).bound
        assert [r for r, _ in spec.balls] == [Fraction(1, 5), Fraction(3, 10)]
        assert (spec.pb_d, spec.pb_r) == (8, Fraction(1, 5))

    def test_output_block(self):
        """Formats may be given as a comma-separated string."""
        data = dict(SCENARIO, output={"dir": "out", "formats": "json,csv"})
        output = config_from_dict(data).output
        assert (output.directory, output.formats) == ("out", ("json", "csv"))


class TestParseConfig:
    """Tests for parse_config."""

    def test_floats_are_exact(self, tmp_path):
        """JSON decimals are parsed straight into Fractions."""
        path = tmp_path / "run.json"
        path.write_text(
            '{"command": "killer-certify", '
            '"killer": {"n": 1, "lambda": -1, "r": 0.35, "epsilon": 0.05, "E": 0.4}}'
        )
        config = parse_config(str(path))
        assert config.killer.r == Fraction(7, 20)

    def test_missing_file(self, tmp_path):
        """A missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            parse_config(str(tmp_path / "nope.json"))

    def test_invalid_json(self, tmp_path):
        """Malformed JSON is a config error."""
        path = tmp_path / "run.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError) as exc:
            parse_config(str(path))
        assert exc.value.errors[0].startswith("config: invalid JSON")


class TestWriters:
    """Tests for report emission."""

    def test_to_plain(self):
        """Exact numbers, enums and numpy values become JSON values."""
        payload = {
            "status": CertificateStatus.CERTIFIED,
            "ratio": Fraction(7, 20),
            "action": PiRational(Fraction(-1, 10), Fraction(1, 25)),
            "value": np.float64(1 / 3),
            "count": np.int64(4),
            "points": np.array([0.5, 0.25]),
        }
        assert to_plain(payload) == {
            "status": "CERTIFIED",
            "ratio": "7/20",
            "action": {"rat": "-1/10", "pi": "1/25"},
            "value": 0.333333333333,
            "count": 4,
            "points": [0.5, 0.25],
        }

    def test_dumps_format(self):
        """Two-space indent and a trailing newline."""
        assert dumps({"a": 1}) == '{\n  "a": 1\n}\n'

    def test_write_reports(self, tmp_path, scenario_input):
        """JSON, CSV and Markdown land next to each other."""
        cert = certify(scenario_input)
        paths = write_reports(
            str(tmp_path / "out"),
            "certificate",
            ("json", "csv", "md"),
            {"certificate": cert.to_json()},
            rows=[row.to_json() for row in cert.table],
            markdown=certificate_markdown(cert),
        )
        assert [p.rsplit(".", 1)[1] for p in paths] == ["json", "csv", "md"]

        with open(paths[0]) as f:
            assert json.load(f)["certificate"]["status"] == "CERTIFIED"
        frame = pd.read_csv(paths[1])
        assert len(frame) == 65
        assert {"step", "verdict", "action_float"} <= set(frame.columns)
        with open(paths[2]) as f:
            assert "**Status:** CERTIFIED" in f.read()

    def test_formats_are_respected(self, tmp_path):
        """Only the requested formats are written."""
        paths = write_reports(str(tmp_path), "x", ("json",), {"a": 1}, rows=[{"a": 1}])
        assert paths == [str(tmp_path / "x.json")]
