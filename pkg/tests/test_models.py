"""
Tests for theta grids, potential families, loss families and regularity reports
"""

import math

import numpy as np
import pytest

from gibbsposterior import (
    DomainError,
    KindMismatch,
    LengthMismatch,
    LossKind,
    Potential,
    ThetaGrid,
    bernoulli_family,
    cylinder_prob,
    discrete_loss,
    gaussian_loss,
    linear_gaussian_loss,
    loss_eval,
    loss_path_sum,
    markov_family,
    regularity_report,
    squared_loss,
    zero_loss,
)
from gibbsposterior.sft import word_array

from .conftest import BERNOULLI_GRID, random_potential


class TestThetaGrid:
    def test_uniform_prior(self):
        grid = ThetaGrid.from_values([0.1, 0.2, 0.3])
        assert grid.dim == 1
        assert np.allclose(grid.prior_weights, 1.0 / 3.0)
        assert grid.index_of(0.2) == 1
        assert grid.label(2) == "0.3"

    @pytest.mark.parametrize(
        "points, prior, message",
        [
            ([0.1, 0.2], [1.0, 0.0], "fully supported"),
            ([0.1, 0.2], [0.5, 0.4], "sum"),
            ([0.1, 0.1], None, "distinct"),
        ],
    )
    def test_invalid_grids(self, points, prior, message):
        with pytest.raises(DomainError, match=message):
            ThetaGrid.from_values(points, prior)

    def test_not_a_grid_point(self):
        grid = ThetaGrid.from_values([0.1, 0.2])
        with pytest.raises(DomainError, match="not a grid point"):
            grid.index_of(0.15)

    def test_neighborhood_and_spacing(self):
        grid = ThetaGrid.from_values([[0.1, 0.0], [0.2, 0.0], [0.3, 0.0], [0.2, 1.0]])
        assert grid.spacing() == pytest.approx(0.1)
        assert grid.neighborhood([1], 0.1).tolist() == [True, True, True, False]
        assert grid.neighborhood([3], 0.5).tolist() == [False, False, False, True]

    def test_grid_hash_tracks_prior(self):
        a = ThetaGrid.from_values([0.1, 0.2])
        b = ThetaGrid.from_values([0.1, 0.2], [0.25, 0.75])
        assert a.grid_hash() == ThetaGrid.from_values([0.1, 0.2]).grid_hash()
        assert a.grid_hash() != b.grid_hash()


class TestPotentialFamilies:
    def test_bernoulli_half_is_uniform(self):
        family = bernoulli_family([0.5])
        assert family.potential_of(0).table == {"0": math.log(0.5), "1": math.log(0.5)}
        assert family.model(0).pressure == pytest.approx(0.0, abs=1e-12)

    def test_bernoulli_cylinders(self, bernoulli_grid):
        model = bernoulli_grid.model(2)
        for word in ["1", "0110", "1011010011"]:
            ones = word.count("1")
            expected = 0.3 ** ones * 0.7 ** (len(word) - ones)
            assert cylinder_prob(model, word) == pytest.approx(expected, rel=1e-10)

    def test_models_are_memoized(self, bernoulli_grid):
        assert bernoulli_grid.model(3) is bernoulli_grid.model(3)

    @pytest.mark.parametrize("values", [[0.0005, 0.5], [0.5, 1.0]])
    def test_bernoulli_bounds(self, values):
        with pytest.raises(DomainError):
            bernoulli_family(values)

    def test_affine_endpoints_and_midpoint(self, golden, rng):
        base_a = random_potential(golden, 2, rng)
        base_b = Potential.constant(golden, 2.0, range=2)
        words = word_array(golden, 2)
        family = markov_family([0.0, 0.5, 1.0], Potential.constant(golden, 0.0, range=2), base_b)
        assert np.all(family.potential_of(0).evaluate(words) == 0.0)
        assert np.allclose(family.potential_of(1).evaluate(words), 1.0)

        family = markov_family([0.0, 1.0], base_a, base_b)
        assert np.array_equal(family.potential_of(0).evaluate(words), base_a.evaluate(words))

    def test_affine_pressure_is_convex(self, golden, rng):
        values = np.linspace(0.0, 1.0, 11)
        family = markov_family(values, random_potential(golden, 2, rng), random_potential(golden, 2, rng))
        pressures = family.pressures()
        assert np.all(np.diff(pressures, 2) >= -1e-10)


class TestRegularity:
    def test_bernoulli_grid(self, bernoulli_grid):
        report = regularity_report(bernoulli_grid)
        assert len(report.rows) == len(BERNOULLI_GRID) - 1
        assert report.max_sup_diff == pytest.approx(math.log(2.0), abs=1e-12)
        assert report.pressure_bound_holds

    def test_affine_sup_diff_is_linear(self, golden, rng):
        family = markov_family([0.0, 0.1, 0.3, 0.6], random_potential(golden, 2, rng), random_potential(golden, 2, rng))
        report = regularity_report(family)
        slopes = [row.sup_diff / row.distance for row in report.rows]
        assert np.allclose(slopes, slopes[0], rtol=1e-9)
        assert report.modulus == pytest.approx(max(slopes))

    def test_single_point(self):
        with pytest.raises(DomainError):
            regularity_report(bernoulli_family([0.5]))


class TestLosses:
    def test_squared(self):
        spec = squared_loss([[0.0, 1.0]])
        assert loss_eval(spec, 0, 1, 1.0) == 0.0
        assert loss_eval(spec, 0, 0, 2.0) == 4.0
        assert loss_path_sum(squared_loss([[0.0, 0.0]]), 0, [0, 0], [1.0, 2.0]) == 5.0

    def test_discrete(self):
        spec = discrete_loss([0, 1], n_theta=1)
        assert loss_eval(spec, 0, 0, 1) == 1.0
        assert loss_eval(spec, 0, 1, 1) == 0.0
        with pytest.raises(KindMismatch):
            loss_eval(spec, 0, 0, 0.5)

    def test_gaussian_at_its_mode(self):
        spec = gaussian_loss([[0.0, 0.0]], 1.0)
        assert loss_eval(spec, 0, 0, 0.0) == pytest.approx(0.918939, abs=1e-6)
        assert loss_eval(spec, 0, 0, 0.0) == pytest.approx(0.5 * math.log(2 * math.pi), abs=1e-15)

    def test_linear_gaussian_means(self):
        grid = ThetaGrid.from_values([0.1, 0.5])
        spec = linear_gaussian_loss(grid, [0.0, 0.0], [0.0, 2.0], 0.5)
        assert spec.kind is LossKind.NEG_LOG_DENSITY
        assert spec.mean.tolist() == [[0.0, 0.2], [0.0, 1.0]]
        assert np.all(spec.std == 0.5)

    def test_std_floor(self):
        with pytest.raises(DomainError):
            gaussian_loss([[0.0, 0.0]], 1e-7)

    def test_zero(self):
        spec = zero_loss(2, 3)
        assert spec.loss_tables([0.3, 1.2]).shape == (3, 2, 2)
        assert not spec.loss_tables([0.3, 1.2]).any()

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            loss_path_sum(squared_loss([[0.0, 0.0]]), 0, [0, 1, 0], [1.0, 2.0])

    def test_symbol_outside_alphabet(self):
        with pytest.raises(DomainError):
            loss_eval(squared_loss([[0.0, 0.0]]), 0, 2, 1.0)

    def test_loss_bound_dominates(self, rng):
        spec = gaussian_loss(rng.standard_normal((4, 2)), 0.7)
        y = rng.standard_normal(50)
        bound = spec.loss_bound(y)
        assert np.all(np.abs(spec.loss_tables(y)) <= bound[None, :, None])
