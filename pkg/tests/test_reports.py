"""
Tests for report files and the terminal summary
"""

import json

import numpy as np
import pytest

from gibbsposterior import ConfigError, EmissionSequence, bernoulli_family, direct_loss, sample_trajectory
from gibbsposterior.posterior import gibbs_posterior_path
from gibbsposterior.reports import (
    ReportWriter,
    format_summary,
    header_line,
    parse_header,
    read_emissions,
    read_table,
    read_trajectory,
    write_emissions,
    write_trajectory,
)

HEADER = {"seed": 7, "scenario": "direct_gibbs", "beta": 1.0, "grid": "abc123"}


class TestHeader:
    def test_format(self):
        assert header_line(HEADER) == "# seed=7 scenario=direct_gibbs beta=1.0 grid=abc123"

    def test_parse(self):
        assert parse_header(header_line(HEADER)) == {
            "seed": "7",
            "scenario": "direct_gibbs",
            "beta": "1.0",
            "grid": "abc123",
        }

    def test_missing_marker(self):
        with pytest.raises(ConfigError):
            parse_header("seed=7")


class TestReportWriter:
    def setup_method(self):
        self.family = bernoulli_family([0.2, 0.5, 0.8])
        y = sample_trajectory(self.family.model(0), 50, seed=1).symbols
        self.posteriors = gibbs_posterior_path(self.family, direct_loss(self.family), y, [10, 50])

    def test_posterior_table(self, tmp_path):
        writer = ReportWriter(tmp_path, HEADER)
        writer.posterior("posterior_r00.csv", self.posteriors)
        header, rows = read_table(tmp_path / "posterior_r00.csv")
        assert header["grid"] == "abc123"
        assert list(rows[0]) == ["n", "theta", "log_weight", "posterior_mass"]
        assert len(rows) == 6
        final = [float(r["posterior_mass"]) for r in rows if r["n"] == "50"]
        assert np.array_equal(final, self.posteriors[1].masses)

    def test_disabled_writer_touches_nothing(self, tmp_path):
        writer = ReportWriter(tmp_path / "out", HEADER, enabled=False)
        writer.posterior("posterior_r00.csv", self.posteriors)
        writer.summary({"passed": True})
        assert writer.files == ["posterior_r00.csv", "summary.json"]
        assert not (tmp_path / "out").exists()

    def test_summary_json(self, tmp_path):
        writer = ReportWriter(tmp_path, HEADER)
        writer.summary({"passed": True, "metrics": {"limit": np.array([0.5, 0.25])}})
        data = json.loads((tmp_path / "summary.json").read_text())
        assert data == {"metrics": {"limit": [0.5, 0.25]}, "passed": True}


class TestObservationFiles:
    def test_trajectory_file(self, tmp_path):
        path = sample_trajectory(bernoulli_family([0.4]).model(0), 30, seed=12, source="theta[0]")
        write_trajectory(tmp_path / "y.csv", path, theta_star="0.4")
        header, _ = read_table(tmp_path / "y.csv")
        assert header == {"seed": "12", "source": "theta[0]", "theta_star": "0.4"}
        loaded = read_trajectory(tmp_path / "y.csv")
        assert np.array_equal(loaded.symbols, path.symbols)
        assert loaded.seed == 12

    def test_emission_values_survive_exactly(self, tmp_path):
        values = np.random.default_rng(0).standard_normal(20)
        write_emissions(tmp_path / "u.csv", EmissionSequence(values=values, seed=3, source="test"))
        assert np.array_equal(read_emissions(tmp_path / "u.csv").values, values)


class TestFormatSummary:
    def test_pass(self):
        text = format_summary(
            {
                "scenario": "partition_limit",
                "passed": True,
                "checks": [{"name": "partition_limit", "passed": True, "detail": "2/2 replicates"}],
                "metrics": {"reference": 0.0},
                "files": ["rates.csv"],
            }
        )
        assert "Result: PASS" in text
        assert "  [ok] partition_limit: 2/2 replicates" in text
        assert "  reference: 0.0" in text
        assert text.endswith("Files: rates.csv")

    def test_error(self):
        text = format_summary({"scenario": "direct_gibbs", "passed": False, "error": "KindMismatch: nope"})
        assert "Result: FAIL" in text
        assert "Error: KindMismatch: nope" in text
