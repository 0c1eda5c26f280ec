"""
Tests for partition functions, Gibbs and Bayes posteriors, rates and concentration
"""

import math

import numpy as np
import pytest

from gibbsposterior import (
    DomainError,
    InadmissibleObservation,
    KindMismatch,
    Potential,
    RateTable,
    ThetaGrid,
    bayes_posterior_direct,
    bayes_posterior_hidden,
    bernoulli_family,
    build_sft,
    concentration_report,
    direct_loss,
    discrete_loss,
    divergence_rate,
    gaussian_loss,
    gibbs_constant_audit,
    gibbs_posterior,
    identifiability_class,
    linear_gaussian_loss,
    log_partition_curves,
    log_partition_theta,
    markov_family,
    partition_bounds,
    partition_rate_direct,
    posterior_sandwich,
    rate_closed_form_direct,
    rate_estimate,
    rate_table,
    sample_trajectory,
    solve_gibbs,
    squared_loss,
    theta_min,
    zero_loss,
)
from gibbsposterior.posterior import (
    bayes_posterior_direct_path,
    emission_source,
    gibbs_posterior_path,
    log_likelihood_curves,
    trajectory_source,
)
from gibbsposterior.thermo import log_cylinder_prob

from .conftest import BERNOULLI_GRID, binary_entropy, brute_force_log_partition, random_potential

THETA_STAR = BERNOULLI_GRID.index(0.3)


def _oracle_case(case):
    """One (model, loss, observations) triple for the brute-force comparison"""
    rng = np.random.default_rng(1000 + case)
    golden = build_sft(2, ["11"])
    full = build_sft(2)
    builders = [
        lambda: bernoulli_family([0.3]).model(0),
        lambda: solve_gibbs(golden, Potential.constant(golden, 0.0)),
        lambda: solve_gibbs(golden, random_potential(golden, 2, rng)),
        lambda: solve_gibbs(full, random_potential(full, 3, rng)),
        lambda: solve_gibbs(golden, random_potential(golden, 3, rng)),
    ]
    model = builders[case % len(builders)]()
    n = 1 + case % 8
    kind = (case // len(builders)) % 3
    if kind == 0:
        spec = squared_loss(rng.standard_normal((1, 2)))
        y = rng.standard_normal(n)
    elif kind == 1:
        spec = discrete_loss([0, 1], n_theta=1)
        y = rng.integers(0, 2, n)
    else:
        spec = gaussian_loss(rng.standard_normal((1, 2)), rng.uniform(0.5, 2.0, (1, 2)))
        y = rng.standard_normal(n)
    return model, spec, y


class TestLogPartition:
    @pytest.mark.parametrize("case", range(50))
    def test_matches_brute_force(self, case):
        model, spec, y = _oracle_case(case)
        expected = brute_force_log_partition(model, spec, 0, y)
        assert log_partition_theta(model, spec, 0, y) == pytest.approx(expected, abs=1e-9)

    def test_zero_loss(self, parry):
        assert log_partition_theta(parry, zero_loss(2, 1), 0, [0.1, 0.2, 0.3]) == 0.0

    def test_discrete_uniform(self):
        model = bernoulli_family([0.5]).model(0)
        value = log_partition_theta(model, discrete_loss([0, 1], n_theta=1), 0, [0, 0])
        assert value == pytest.approx(2 * math.log((1 + math.exp(-1)) / 2), abs=1e-12)
        assert math.exp(value) == pytest.approx(0.467774, abs=1e-6)

    def test_single_observation(self, parry):
        spec = squared_loss([[0.0, 1.0]])
        expected = math.log(sum(parry.stationary[a] * math.exp(-((a - 0.4) ** 2)) for a in range(2)))
        assert log_partition_theta(parry, spec, 0, [0.4]) == pytest.approx(expected, abs=1e-12)

    def test_curves_agree_with_single_theta(self, bernoulli_grid, rng):
        spec = gaussian_loss(rng.standard_normal((len(BERNOULLI_GRID), 2)), 0.8)
        y = rng.standard_normal(40)
        curves = log_partition_curves(bernoulli_grid, spec, y)
        assert curves.shape == (len(BERNOULLI_GRID), 40)
        for t in (0, 4, 8):
            value = log_partition_theta(bernoulli_grid.model(t), spec, t, y[:25])
            assert curves[t, 24] == pytest.approx(value, abs=1e-10)

    def test_x_independent_loss_is_exact(self, bernoulli_grid):
        spec = squared_loss(np.full((len(BERNOULLI_GRID), 2), 0.5))
        curves = log_partition_curves(bernoulli_grid, spec, [0.0, 1.0, 2.0])
        assert np.allclose(curves, -np.cumsum([0.25, 0.25, 2.25])[None, :])

    def test_empty_observations(self, bernoulli_grid):
        with pytest.raises(DomainError):
            log_partition_curves(bernoulli_grid, direct_loss(bernoulli_grid), np.array([], dtype=np.int64))


class TestDirectLoss:
    def setup_method(self):
        self.family = bernoulli_family(BERNOULLI_GRID)
        self.loss = direct_loss(self.family)

    def test_uniform_loss_is_log_two(self):
        family = bernoulli_family([0.5])
        loss = direct_loss(family)
        assert loss.loss_eval(0, [0]) == pytest.approx(math.log(2.0), abs=1e-12)
        assert loss.loss_eval(0, [1]) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_bernoulli_loss(self):
        assert self.loss.loss_eval(THETA_STAR, [1]) == pytest.approx(-math.log(0.3), abs=1e-12)

    def test_rejects_real_observations(self):
        with pytest.raises(KindMismatch):
            self.loss.step_losses(0, [0.5, 1.0])
        with pytest.raises(KindMismatch):
            self.loss.step_losses(0, [0, 2])

    def test_path_loss(self):
        y = np.array([1, 0, 0, 1, 1])
        curve = log_partition_curves(self.family, self.loss, y, thetas=[THETA_STAR])[0]
        ones = np.cumsum(y)
        zeros = np.arange(1, 6) - ones
        expected = ones * math.log(0.3) + zeros * math.log(0.7)
        assert np.allclose(curve, expected, atol=1e-12)


class TestGibbsPosterior:
    def setup_method(self):
        self.family = bernoulli_family(BERNOULLI_GRID)
        self.loss = direct_loss(self.family)
        self.y = sample_trajectory(self.family.model(THETA_STAR), 2000, seed=17).symbols

    def test_zero_temperature_returns_prior(self):
        prior = np.array([0.05, 0.05, 0.1, 0.1, 0.2, 0.2, 0.1, 0.1, 0.1])
        family = bernoulli_family(BERNOULLI_GRID, prior)
        post = gibbs_posterior(family, direct_loss(family), self.y, beta=0.0)
        assert np.all(post.log_weights == 0.0)
        assert np.allclose(post.masses, prior, rtol=1e-14)

    def test_theta_independent_loss_returns_prior(self):
        spec = squared_loss(np.tile([0.0, 1.0], (len(BERNOULLI_GRID), 1)))
        y = np.random.default_rng(3).standard_normal(50)
        family = markov_family(BERNOULLI_GRID, *[Potential.constant(build_sft(2), 0.0)] * 2)
        post = gibbs_posterior(family, spec, y)
        assert np.allclose(post.masses, family.grid.prior_weights, atol=1e-12)

    def test_masses_sum_to_one(self):
        for post in gibbs_posterior_path(self.family, self.loss, self.y, [10, 100, 2000]):
            assert post.masses.sum() == pytest.approx(1.0, abs=1e-10)

    def test_mode_at_truth(self):
        post = gibbs_posterior(self.family, self.loss, self.y)
        assert post.mode() == [THETA_STAR]

    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    def test_mode_stable_under_beta(self, beta):
        y = sample_trajectory(self.family.model(THETA_STAR), 5000, seed=18).symbols
        assert gibbs_posterior(self.family, self.loss, y, beta=beta).mode() == [THETA_STAR]

    def test_negative_beta(self):
        with pytest.raises(DomainError):
            gibbs_posterior(self.family, self.loss, self.y, beta=-1.0)

    def test_partition_bounds_hold(self):
        for post in gibbs_posterior_path(self.family, self.loss, self.y, [1, 10, 100, 1000, 2000]):
            assert partition_bounds(post).holds


class TestBayesPosterior:
    def setup_method(self):
        self.family = bernoulli_family(BERNOULLI_GRID)
        self.y = sample_trajectory(self.family.model(THETA_STAR), 300, seed=21).symbols

    def test_conjugate_shape(self):
        k, n = int(self.y.sum()), len(self.y)
        values = np.array(BERNOULLI_GRID)
        log_post = k * np.log(values) + (n - k) * np.log(1 - values)
        expected = np.exp(log_post - log_post.max())
        expected /= expected.sum()
        post = bayes_posterior_direct(self.family, self.y)
        assert np.allclose(post.masses, expected, atol=1e-10)

    def test_single_block(self):
        post = bayes_posterior_direct(self.family, [1])
        values = np.array(BERNOULLI_GRID)
        assert np.allclose(post.masses, values / values.sum(), atol=1e-12)

    def test_inadmissible_observation(self, golden):
        family = markov_family([0.0, 0.5, 1.0], Potential.constant(golden, 0.0), Potential.constant(golden, 1.0))
        with pytest.raises(InadmissibleObservation):
            bayes_posterior_direct(family, [0, 1, 1, 0])

    def test_likelihood_curves_on_longer_blocks(self, golden, rng):
        potential = random_potential(golden, 3, rng)
        family = markov_family([0.0, 1.0], potential, potential)
        model = family.model(0)
        y = sample_trajectory(model, 12, seed=4).symbols
        curves = log_likelihood_curves(family, y)
        for k in (1, 2, 7, 12):
            assert curves[0, k - 1] == pytest.approx(log_cylinder_prob(model, y[:k]), abs=1e-12)

    def test_hidden_needs_density_loss(self):
        with pytest.raises(KindMismatch):
            bayes_posterior_hidden(self.family, squared_loss(np.zeros((9, 2))), [0.1, 0.2])

    def test_sandwich_direct(self):
        loss = direct_loss(self.family)
        K = max(gibbs_constant_audit(m, 8).K for m in self.family.models())
        gibbs = gibbs_posterior_path(self.family, loss, self.y, [1, 50, 300])
        bayes = bayes_posterior_direct_path(self.family, self.y, [1, 50, 300])
        for g, b in zip(gibbs, bayes):
            assert posterior_sandwich(g, b, K).holds

    def test_sandwich_markov_family(self, golden, rng):
        family = markov_family(
            [0.0, 0.25, 0.5, 0.75, 1.0],
            random_potential(golden, 2, rng),
            random_potential(golden, 2, rng),
        )
        K = max(gibbs_constant_audit(m, 8).K for m in family.models())
        assert K > 1.0
        y = sample_trajectory(family.model(2), 400, seed=8).symbols
        gibbs = gibbs_posterior_path(family, direct_loss(family), y, [5, 100, 400])
        bayes = bayes_posterior_direct_path(family, y, [5, 100, 400])
        for g, b in zip(gibbs, bayes):
            report = posterior_sandwich(g, b, K)
            assert report.holds
            assert report.log_bound == pytest.approx(2 * math.log(K))


class TestRates:
    def setup_method(self):
        self.family = bernoulli_family(BERNOULLI_GRID)
        self.loss = direct_loss(self.family)
        self.half = BERNOULLI_GRID.index(0.5)

    def test_closed_form_values(self):
        uniform = bernoulli_family([0.5])
        assert rate_closed_form_direct(uniform, 0, 0) == pytest.approx(2 * math.log(2), abs=1e-10)
        assert rate_closed_form_direct(self.family, THETA_STAR, THETA_STAR) == pytest.approx(1.221729, abs=1e-6)
        assert rate_closed_form_direct(self.family, self.half, THETA_STAR) == pytest.approx(1.386294, abs=1e-6)

    def test_closed_form_gap_is_twice_divergence(self):
        gap = rate_closed_form_direct(self.family, self.half, THETA_STAR) - rate_closed_form_direct(
            self.family, THETA_STAR, THETA_STAR
        )
        assert gap == pytest.approx(0.164565, abs=1e-6)
        divergence = divergence_rate(self.family.model(THETA_STAR), self.family.model(self.half))
        assert gap == pytest.approx(2 * divergence, abs=1e-10)

    def test_partition_rate_is_half_the_closed_form(self):
        for t in range(len(BERNOULLI_GRID)):
            assert 2 * partition_rate_direct(self.family, t, THETA_STAR) == pytest.approx(
                rate_closed_form_direct(self.family, t, THETA_STAR)
            )

    def test_zero_loss_rate(self):
        spec = zero_loss(2, len(BERNOULLI_GRID))
        source = emission_source(self.family.model(THETA_STAR), spec, THETA_STAR, 100)
        assert rate_estimate(self.family, spec, 0, source, 100, [1, 2, 3]) == (0.0, 0.0)

    def test_direct_rate_estimate(self):
        source = trajectory_source(self.family.model(THETA_STAR), 20_000)
        mean, stderr = rate_estimate(self.family, self.loss, THETA_STAR, source, 20_000, [1, 2, 3, 4])
        assert mean == pytest.approx(binary_entropy(0.3), abs=0.02)
        assert stderr < 0.01

    def test_rate_table_attaches_closed_forms(self):
        source = trajectory_source(self.family.model(THETA_STAR), 3000)
        table = rate_table(self.family, self.loss, source, 3000, [5, 6], theta_star=THETA_STAR)
        assert table.v_closed is not None and table.v_limit is not None
        assert np.allclose(table.v_closed, 2 * table.v_limit)
        assert int(np.argmin(table.v_closed)) == THETA_STAR
        assert theta_min(table, epsilon=0.01) == [THETA_STAR]
        rows = table.rows()
        assert rows[THETA_STAR]["theta"] == "0.3"
        assert set(rows[0]) == {"theta", "V_hat", "stderr", "V_closed", "V_limit"}

    def test_hidden_rates_flatten_with_noise(self):
        grid = ThetaGrid.from_values([0.1, 0.5, 0.9])
        family = bernoulli_family([0.1, 0.5, 0.9])
        spreads = []
        for std in (1.0, 4.0):
            spec = linear_gaussian_loss(grid, [0.0, 0.0], [0.0, 2.0], std)
            source = emission_source(family.model(1), spec, 1, 4000)
            table = rate_table(family, spec, source, 4000, [1, 2])
            spreads.append(float(np.ptp(table.v_hat)))
        assert spreads[1] < spreads[0]


class TestThetaMin:
    def _table(self, v_hat, stderr=0.0):
        grid = ThetaGrid.from_values(np.linspace(0.1, 0.9, len(v_hat)))
        return RateTable(grid=grid, v_hat=np.array(v_hat), stderr=np.full(len(v_hat), stderr), n_used=100)

    def test_unique_minimizer(self):
        assert theta_min(self._table([0.5, 0.2, 0.4])) == [1]

    def test_constant_rates_select_everything(self):
        assert theta_min(self._table([0.3, 0.3, 0.3, 0.3])) == [0, 1, 2, 3]

    def test_ties_within_stderr(self):
        assert theta_min(self._table([0.30, 0.31, 0.5], stderr=0.01)) == [0, 1]

    def test_explicit_epsilon(self):
        assert theta_min(self._table([0.30, 0.31, 0.5], stderr=0.01), epsilon=0.001) == [0]


class TestConcentration:
    def setup_method(self):
        self.family = bernoulli_family(BERNOULLI_GRID)
        self.loss = direct_loss(self.family)

    def test_whole_grid_target(self):
        y = sample_trajectory(self.family.model(THETA_STAR), 200, seed=1).symbols
        posteriors = gibbs_posterior_path(self.family, self.loss, y, [10, 200])
        report = concentration_report(posteriors, list(range(len(BERNOULLI_GRID))), 0.0)
        assert all(row.outside_mass == 0.0 for row in report.rows)
        assert report.n_reached == 10

    def test_empty_schedule(self):
        with pytest.raises(DomainError):
            concentration_report([], [0], 0.1)

    @pytest.mark.slow
    def test_direct_concentrates_on_truth(self):
        y = sample_trajectory(self.family.model(THETA_STAR), 20_000, seed=2).symbols
        posteriors = gibbs_posterior_path(self.family, self.loss, y, [1000, 5000, 20_000])
        report = concentration_report(posteriors, [THETA_STAR], 0.05)
        assert report.final.outside_mass < 0.05
        assert report.n_reached is not None
        assert abs(report.final.log_inside_rate) <= 0.05


class TestIdentifiability:
    def test_direct_bernoulli_is_identifiable(self):
        family = bernoulli_family(BERNOULLI_GRID)
        assert identifiability_class(family, direct_loss(family), THETA_STAR) == [THETA_STAR]

    def test_hidden_label_swap(self):
        # theta = 0.3 with means (0, 1) emits the same law as theta = 0.7 with means (1, 0)
        family = bernoulli_family([0.3, 0.5, 0.7])
        spec = gaussian_loss([[0.0, 1.0], [0.0, 1.0], [1.0, 0.0]], 0.5)
        assert identifiability_class(family, spec, 0) == [0, 2]

    def test_needs_a_likelihood(self):
        family = bernoulli_family(BERNOULLI_GRID)
        with pytest.raises(KindMismatch):
            identifiability_class(family, squared_loss(np.zeros((9, 2))), 0)
