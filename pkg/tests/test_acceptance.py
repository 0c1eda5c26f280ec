"""
End-to-end runs of the sample scenarios at full desk scale
"""

import math

import pytest

from gibbsposterior.config import load_config

from .conftest import SAMPLE_CONFIGS, binary_entropy

pytestmark = [pytest.mark.slow, pytest.mark.integration]


def _run(name):
    config = load_config(SAMPLE_CONFIGS / f"{name}.json")
    runner = config.runner(threads=2)
    result, success = runner.execute(**config.inputs)
    return result, success


def _checks(result):
    return {c.name: c for c in result.checks}


class TestDirectGibbs:
    def setup_method(self):
        self.result, self.success = _run("direct_gibbs")
        self.checks = _checks(self.result)

    def test_passes(self):
        assert self.result.error is None
        assert self.success, [c.detail for c in self.result.checks if not c.passed]

    def test_partition_limit_is_the_entropy(self):
        assert self.result.metrics["reference"] == pytest.approx(binary_entropy(0.3), abs=1e-10)
        for value in self.result.metrics["limit"]:
            assert abs(value - binary_entropy(0.3)) <= 0.03

    def test_closed_form_minimum(self):
        assert self.result.metrics["closed_form_min"] == pytest.approx(2 * binary_entropy(0.3), abs=1e-10)
        assert self.checks["theta_min_closed_form"].passed

    def test_concentration_and_rate(self):
        assert sum(m < 0.05 for m in self.result.metrics["outside_mass_final"]) >= 7
        assert all(abs(v) <= 0.05 for v in self.result.metrics["log_inside_rate"])

    def test_sandwich(self):
        assert self.checks["sandwich"].passed
        assert math.isclose(self.result.metrics["gibbs_K"], 1.0, abs_tol=1e-9)


class TestHiddenGibbs:
    def test_passes(self):
        result, success = _run("hidden_gibbs")
        assert result.error is None
        assert success, [c.detail for c in result.checks if not c.passed]
        assert result.metrics["identifiability_class"] == ["0.3;0.0", "0.3;1.0"]
        assert sum(m > 0.9 for m in result.metrics["inside_mass_final"]) >= 7


class TestPartitionLimit:
    def test_null_loss(self):
        result, success = _run("partition_limit")
        assert success
        assert result.metrics["limit"] == pytest.approx([0.0, 0.0], abs=1e-12)


class TestMisspecified:
    def test_reports_empirical_minimizer(self):
        result, _ = _run("misspecified")
        assert result.error is None
        assert result.metrics["theta_min_empirical"]
        assert set(result.metrics["ground_state"]) == {"1.0", "4.0", "16.0"}
