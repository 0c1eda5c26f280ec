"""
Gibbs and Bayes posteriors over a theta grid
Partition functions by log-domain forward recursion, rate functions, Theta_min and the
concentration diagnostics for ergodic observations
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, InadmissibleObservation, KindMismatch, NonFinite
from .models import LossKind, LossSpec, PotentialFamily, ThetaGrid
from .simulate import Observations, Trajectory, observation_values, observe, sample_trajectory
from .thermo import GibbsModel, expectation, log_cylinder_probs

logger = logging.getLogger(__name__)

SANDWICH_SLACK = 1e-8
IDENTIFIABILITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    """Posterior over the grid after n observations

    Attributes:
        grid: Parameter grid and prior
        n: Observation length
        log_weights: Per-theta log partition (Gibbs) or log likelihood (Bayes)
        log_Z: log of the prior-mixed normalizer, log sum exp(log prior + log_weights)
        beta: Inverse temperature the loss was scaled by
        kind: "gibbs" or "bayes"
    """

    grid: ThetaGrid
    n: int
    log_weights: np.ndarray
    log_Z: float
    beta: float = 1.0
    kind: str = "gibbs"

    @property
    def log_posterior(self) -> np.ndarray:
        return self.grid.log_prior + self.log_weights - self.log_Z

    @property
    def masses(self) -> np.ndarray:
        return np.exp(self.log_posterior)

    def mass(self, mask: np.ndarray) -> float:
        return float(self.masses[np.asarray(mask, dtype=bool)].sum())

    def log_mass(self, mask: np.ndarray) -> float:
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            return float("-inf")
        return float(logsumexp(self.log_posterior[mask]))

    def mode(self, rtol: float = 1e-12) -> List[int]:
        """Indices of the maximal posterior masses"""
        logp = self.log_posterior
        top = float(np.max(logp))
        return [int(i) for i in np.nonzero(logp >= top - rtol * max(1.0, abs(top)))[0]]


def _assemble(grid: ThetaGrid, n: int, log_weights: np.ndarray, beta: float, kind: str) -> PosteriorGrid:
    if np.any(np.isnan(log_weights)):
        raise NonFinite(f"NaN log weight at n={n}")
    log_Z = float(logsumexp(grid.log_prior + log_weights))
    if not np.isfinite(log_Z):
        if kind == "bayes":
            raise InadmissibleObservation(f"every model assigns probability zero to the first {n} observations")
        raise NonFinite(f"log partition function is {log_Z} at n={n}")
    return PosteriorGrid(grid=grid, n=n, log_weights=log_weights, log_Z=log_Z, beta=beta, kind=kind)


@dataclass(frozen=True, eq=False)
class DirectLoss:
    """Direct-observation loss l(theta, y) = P(f_theta) - f_theta(y window)

    The observed system is the model shift itself, so no hidden integral is taken: the
    path loss of y_0 ... y_{n-1} is n P(f_theta) - S_n f_theta(y), the Birkhoff sum
    running over the full range-windows of the observed word.
    """

    family: PotentialFamily

    @property
    def range(self) -> int:
        return self.family.range

    def check_observations(self, observations: Any) -> np.ndarray:
        y = np.asarray(observations)
        if not np.issubdtype(y.dtype, np.integer):
            raise KindMismatch(f"direct observations must be symbols, got dtype {y.dtype}")
        if y.size and (y.min() < 0 or y.max() >= self.family.sft.alphabet_size):
            raise KindMismatch("direct observation symbol outside the alphabet")
        return y.astype(np.int64)

    def loss_eval(self, theta: int, window: Sequence[int]) -> float:
        """Loss of one range-window"""
        model = self.family.model(theta)
        window = np.asarray(window, dtype=np.int64)
        if len(window) != self.range:
            raise DomainError(f"window must have length {self.range}")
        return model.pressure - float(self.family.potential_of(theta).evaluate(window[None, :])[0])

    def step_losses(self, theta: int, observations: Any) -> np.ndarray:
        """Loss added at each position k: P minus f on the window ending at k, if complete"""
        y = self.check_observations(observations)
        steps = np.full(len(y), self.family.model(theta).pressure)
        values = self.family.potential_of(theta).path_values(y)
        steps[self.range - 1:] -= values
        return steps


def direct_loss(family: PotentialFamily) -> DirectLoss:
    return DirectLoss(family=family)


ObservationLoss = Union[LossSpec, DirectLoss]


def _as_array(observations: Union[Observations, np.ndarray, Sequence[Any]]) -> np.ndarray:
    if isinstance(observations, np.ndarray):
        return observations
    if hasattr(observations, "symbols") or hasattr(observations, "values"):
        return observation_values(observations)
    return np.asarray(observations)


def _forward(log_pi: np.ndarray, log_q: np.ndarray, losses: np.ndarray) -> np.ndarray:
    # log_pi (G, B), log_q (G, B, B), losses (G, n, B) -> (G, n) prefix log partitions
    n = losses.shape[1]
    curves = np.empty((losses.shape[0], n))
    alpha = log_pi - losses[:, 0, :]
    curves[:, 0] = logsumexp(alpha, axis=1)
    for k in range(1, n):
        alpha = logsumexp(alpha[:, :, None] + log_q, axis=1) - losses[:, k, :]
        curves[:, k] = logsumexp(alpha, axis=1)
    return curves


def log_partition_curves(
    family: PotentialFamily,
    loss: ObservationLoss,
    observations: Any,
    beta: float = 1.0,
    thetas: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """log Z_k^theta for every prefix length k = 1..n and every requested grid point

    Returns:
        (len(thetas), n) array; column k - 1 holds log of the integral of
        exp(-beta l_k(theta, x, y)) d mu_theta(x)
    """
    y = _as_array(observations)
    thetas = list(range(len(family.grid))) if thetas is None else list(thetas)
    if len(y) == 0:
        raise DomainError("need at least one observation")

    if isinstance(loss, DirectLoss):
        if beta == 0:
            return np.zeros((len(thetas), len(y)))
        steps = np.stack([loss.step_losses(t, y) for t in thetas])
        return -beta * np.cumsum(steps, axis=1)

    tables = np.stack([loss.loss_table(t, y) for t in thetas])
    if np.any(np.isnan(tables)):
        raise NonFinite("loss evaluated to NaN")
    if beta == 0 or not tables.any():
        return np.zeros((len(thetas), len(y)))
    if np.all(tables == tables[:, :, :1]):
        # x-independent loss: the integral against a probability measure is exact
        return -beta * np.cumsum(tables[:, :, 0], axis=1)

    models = [family.model(t) for t in thetas]
    leading = models[0].sft.leading_symbols
    losses = beta * tables[:, :, leading]
    log_pi = np.stack([m.log_stationary for m in models])
    log_q = np.stack([m.log_kernel for m in models])
    return _forward(log_pi, log_q, losses)


def log_partition_theta(
    model: GibbsModel, spec: LossSpec, theta: int, observations: Any, beta: float = 1.0
) -> float:
    """log of the integral of exp(-beta l_n(theta, x, y)) d mu_theta(x) for one model"""
    y = _as_array(observations)
    if len(y) == 0:
        raise DomainError("need at least one observation")
    table = spec.loss_table(theta, y)
    if np.any(np.isnan(table)):
        raise NonFinite("loss evaluated to NaN")
    if beta == 0 or not table.any():
        return 0.0
    losses = beta * table[:, model.sft.leading_symbols]
    curve = _forward(model.log_stationary[None, :], model.log_kernel[None, :, :], losses[None, :, :])
    return float(curve[0, -1])


def _schedule(n_total: int, n_schedule: Optional[Sequence[int]]) -> List[int]:
    schedule = [n_total] if n_schedule is None else [int(n) for n in n_schedule]
    for n in schedule:
        if not 1 <= n <= n_total:
            raise DomainError(f"schedule length {n} outside 1..{n_total}")
    return schedule


def gibbs_posterior_path(
    family: PotentialFamily,
    loss: ObservationLoss,
    observations: Any,
    n_schedule: Optional[Sequence[int]] = None,
    beta: float = 1.0,
    kind: str = "gibbs",
) -> List[PosteriorGrid]:
    """Gibbs posteriors pi_n for every n in the schedule from one forward pass"""
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    curves = log_partition_curves(family, loss, observations, beta)
    return posteriors_from_curves(family.grid, curves, n_schedule, beta, kind)


def posteriors_from_curves(
    grid: ThetaGrid,
    curves: np.ndarray,
    n_schedule: Optional[Sequence[int]] = None,
    beta: float = 1.0,
    kind: str = "gibbs",
) -> List[PosteriorGrid]:
    """Posteriors for every n in the schedule from (G, n) prefix log weights"""
    return [
        _assemble(grid, n, curves[:, n - 1].copy(), beta, kind)
        for n in _schedule(curves.shape[1], n_schedule)
    ]


def gibbs_posterior(
    family: PotentialFamily, loss: ObservationLoss, observations: Any, beta: float = 1.0
) -> PosteriorGrid:
    """Gibbs posterior after all observations, loss scaled by the inverse temperature beta"""
    return gibbs_posterior_path(family, loss, observations, None, beta)[0]


def log_likelihood_curves(family: PotentialFamily, observations: Any) -> np.ndarray:
    """log mu_theta([y_0 ... y_{k-1}]) for every prefix k and grid point, (G, n)"""
    y = DirectLoss(family).check_observations(_as_array(observations))
    n = len(y)
    curves = np.empty((len(family.grid), n))
    for t, model in enumerate(family.models()):
        sft = model.sft
        short = min(sft.block_len - 1, n)
        for k in range(1, short + 1):
            curves[t, k - 1] = log_cylinder_probs(model, y[None, :k])[0]
        if n < sft.block_len:
            continue
        path = sft.blocks_of(y)
        bad = path < 0
        safe = np.where(bad, 0, path)
        steps = model.log_kernel[safe[:-1], safe[1:]]
        values = model.log_stationary[safe[0]] + np.concatenate([[0.0], np.cumsum(steps)])
        dead = np.logical_or.accumulate(bad)
        curves[t, sft.block_len - 1:] = np.where(dead, -np.inf, values)
    return curves


def bayes_posterior_direct_path(
    family: PotentialFamily, observations: Any, n_schedule: Optional[Sequence[int]] = None
) -> List[PosteriorGrid]:
    """Bayes posteriors Pi_n with likelihood mu_theta([y_0^{n-1}]) for every n in the schedule"""
    curves = log_likelihood_curves(family, observations)
    return posteriors_from_curves(family.grid, curves, n_schedule, 1.0, "bayes")


def bayes_posterior_direct(family: PotentialFamily, observations: Any) -> PosteriorGrid:
    """Standard Bayes posterior from direct observation of the model shift"""
    return bayes_posterior_direct_path(family, observations)[0]


def bayes_posterior_hidden_path(
    family: PotentialFamily,
    spec: LossSpec,
    emissions: Any,
    n_schedule: Optional[Sequence[int]] = None,
) -> List[PosteriorGrid]:
    if spec.kind is not LossKind.NEG_LOG_DENSITY:
        raise KindMismatch(f"hidden Bayes posterior needs a neg_log_density loss, got {spec.kind.value}")
    return gibbs_posterior_path(family, spec, emissions, n_schedule, 1.0, kind="bayes")


def bayes_posterior_hidden(family: PotentialFamily, spec: LossSpec, emissions: Any) -> PosteriorGrid:
    """Bayes posterior of hidden-Gibbs emissions; the Gibbs posterior with l = -log density"""
    return bayes_posterior_hidden_path(family, spec, emissions)[0]


def partition_rate_direct(family: PotentialFamily, theta: int, theta_star: int) -> float:
    """P(f_theta) - integral of f_theta d mu_theta*: the almost-sure limit of -(1/n) log Z_n^theta
    for the direct loss and of -(1/n) log mu_theta([y_0^{n-1}])"""
    model = family.model(theta)
    return model.pressure - expectation(family.potential_of(theta), family.model(theta_star))


def rate_closed_form_direct(family: PotentialFamily, theta: int, theta_star: int) -> float:
    """Closed-form rate V(theta) = 2 (P(f_theta) - integral of f_theta d mu_theta*)"""
    return 2.0 * partition_rate_direct(family, theta, theta_star)


@dataclass(frozen=True, eq=False)
class RateTable:
    """Per-theta rate estimates -(1/n) log Z_n^theta over observation replicates"""

    grid: ThetaGrid
    v_hat: np.ndarray
    stderr: np.ndarray
    n_used: int
    v_closed: Optional[np.ndarray] = None
    v_limit: Optional[np.ndarray] = None

    def rows(self) -> List[Dict[str, Any]]:
        out = []
        for i in range(len(self.grid)):
            out.append(
                {
                    "theta": self.grid.label(i),
                    "V_hat": float(self.v_hat[i]),
                    "stderr": float(self.stderr[i]),
                    "V_closed": None if self.v_closed is None else float(self.v_closed[i]),
                    "V_limit": None if self.v_limit is None else float(self.v_limit[i]),
                }
            )
        return out


ObservationSource = Callable[[int], Any]


def _replicate_rates(
    family: PotentialFamily,
    loss: ObservationLoss,
    source: ObservationSource,
    n: int,
    seeds: Sequence[int],
    beta: float,
    thetas: Optional[Sequence[int]] = None,
) -> np.ndarray:
    rates = []
    for seed in seeds:
        y = _as_array(source(seed))
        if len(y) < n:
            raise DomainError(f"source produced {len(y)} observations, need {n}")
        curves = log_partition_curves(family, loss, y[:n], beta, thetas)
        rates.append(-curves[:, n - 1] / n)
    return np.array(rates)


def _mean_stderr(samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mean = samples.mean(axis=0)
    if samples.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(samples.shape[0])


def rate_estimate(
    family: PotentialFamily,
    loss: ObservationLoss,
    theta: int,
    source: ObservationSource,
    n: int,
    seeds: Sequence[int],
    beta: float = 1.0,
) -> Tuple[float, float]:
    """Mean and standard error of -(1/n) log Z_n^theta over independent observation draws"""
    mean, stderr = _mean_stderr(_replicate_rates(family, loss, source, n, seeds, beta, [theta]))
    return float(mean[0]), float(stderr[0])


def rate_table(
    family: PotentialFamily,
    loss: ObservationLoss,
    source: ObservationSource,
    n: int,
    seeds: Sequence[int],
    beta: float = 1.0,
    theta_star: Optional[int] = None,
) -> RateTable:
    """Rate estimates for every grid point; closed forms attached in the direct case"""
    samples = _replicate_rates(family, loss, source, n, seeds, beta)
    return rate_table_from_samples(family, loss, samples, n, beta, theta_star)


def rate_table_from_samples(
    family: PotentialFamily,
    loss: ObservationLoss,
    samples: np.ndarray,
    n: int,
    beta: float = 1.0,
    theta_star: Optional[int] = None,
) -> RateTable:
    """RateTable from an (R, G) array of per-replicate -(1/n) log Z_n^theta"""
    mean, stderr = _mean_stderr(np.atleast_2d(samples))
    if not np.all(np.isfinite(mean)):
        raise NonFinite("rate estimate is not finite")
    v_closed = v_limit = None
    if isinstance(loss, DirectLoss) and theta_star is not None:
        grid_size = len(family.grid)
        v_limit = np.array([beta * partition_rate_direct(family, t, theta_star) for t in range(grid_size)])
        v_closed = np.array([rate_closed_form_direct(family, t, theta_star) for t in range(grid_size)])
    return RateTable(grid=family.grid, v_hat=mean, stderr=stderr, n_used=n, v_closed=v_closed, v_limit=v_limit)


def ground_state_rates(
    family: PotentialFamily,
    loss: ObservationLoss,
    source: ObservationSource,
    n: int,
    seeds: Sequence[int],
    betas: Sequence[float],
) -> Dict[float, np.ndarray]:
    """V_beta / beta for a ladder of inverse temperatures; tends to the ground-state rate"""
    out = {}
    for beta in betas:
        if beta <= 0:
            raise DomainError(f"ground-state ladder needs beta > 0, got {beta}")
        out[float(beta)] = rate_table(family, loss, source, n, seeds, beta).v_hat / beta
    return out


def theta_min(rates: RateTable, epsilon: Optional[float] = None) -> List[int]:
    """Grid points with V_hat within epsilon of the minimum

    epsilon defaults to max(1e-9, 2 * max stderr).
    """
    if epsilon is None:
        epsilon = max(1e-9, 2.0 * float(np.max(rates.stderr)))
    floor = float(np.min(rates.v_hat))
    return [int(i) for i in np.nonzero(rates.v_hat <= floor + epsilon)[0]]


@dataclass(frozen=True)
class ConcentrationRow:
    n: int
    outside_mass: float
    log_inside_rate: float


@dataclass(frozen=True)
class ConcentrationReport:
    """Posterior mass outside the radius-neighborhood U of a target set, per n

    `log_inside_rate` is (1/n) log pi_n(U | y), which stays near zero when U meets Theta_min.
    """

    rows: Tuple[ConcentrationRow, ...]
    target: Tuple[int, ...]
    radius: float
    threshold: float
    n_reached: Optional[int]
    decreasing_fraction: float

    @property
    def final(self) -> ConcentrationRow:
        return self.rows[-1]


def concentration_report(
    posteriors: Sequence[PosteriorGrid],
    target: Sequence[int],
    radius: float,
    threshold: float = 0.05,
) -> ConcentrationReport:
    """Mass outside the radius-neighborhood of `target` along an n-schedule"""
    if not posteriors:
        raise DomainError("no posteriors to report on")
    grid = posteriors[0].grid
    inside = grid.neighborhood(target, radius)
    rows = []
    for post in posteriors:
        if post.grid is not grid:
            raise DomainError("posteriors must share one grid")
        outside = post.mass(~inside)
        rows.append(ConcentrationRow(post.n, outside, post.log_mass(inside) / post.n))

    n_reached = None
    for row in reversed(rows):
        if row.outside_mass >= threshold:
            break
        n_reached = row.n
    steps = [b.outside_mass <= a.outside_mass for a, b in zip(rows, rows[1:])]
    decreasing = sum(steps) / len(steps) if steps else 1.0
    return ConcentrationReport(
        rows=tuple(rows),
        target=tuple(int(t) for t in target),
        radius=radius,
        threshold=threshold,
        n_reached=n_reached,
        decreasing_fraction=decreasing,
    )


@dataclass(frozen=True)
class SandwichReport:
    n: int
    max_abs_log_ratio: float
    log_bound: float

    @property
    def holds(self) -> bool:
        return self.max_abs_log_ratio <= self.log_bound + SANDWICH_SLACK


def posterior_sandwich(gibbs: PosteriorGrid, bayes: PosteriorGrid, K: float) -> SandwichReport:
    """Check K^-2 pi_n(F) <= Pi_n(F) <= K^2 pi_n(F) for every subset F of the grid

    Singletons suffice: both sides are sums over the points of F.
    """
    if gibbs.n != bayes.n or gibbs.grid is not bayes.grid:
        raise DomainError("sandwich needs posteriors of one grid at one n")
    ratio = np.abs(bayes.log_posterior - gibbs.log_posterior)
    return SandwichReport(n=gibbs.n, max_abs_log_ratio=float(np.max(ratio)), log_bound=2.0 * math.log(K))


@dataclass(frozen=True)
class PartitionBounds:
    value: float
    lower: float
    upper: float

    @property
    def holds(self) -> bool:
        return self.lower - 1e-12 <= self.value <= self.upper + 1e-12


def partition_bounds(posterior: PosteriorGrid) -> PartitionBounds:
    """-(1/n) log Z_n against min over theta of -(1/n) log Z_n^theta

    min V - log(G)/n <= -(1/n) log Z_n <= V(i*) - log(prior(i*))/n, i* the minimizer.
    """
    n = posterior.n
    rates = -posterior.log_weights / n
    best = int(np.argmin(rates))
    return PartitionBounds(
        value=-posterior.log_Z / n,
        lower=float(rates[best]) - math.log(len(posterior.grid)) / n,
        upper=float(rates[best]) - float(posterior.grid.log_prior[best]) / n,
    )


def identifiability_class(
    family: PotentialFamily,
    loss: ObservationLoss,
    theta_star: int,
    probe_len: int = 64,
    seeds: Sequence[int] = (11, 23),
) -> List[int]:
    """Grid points whose observation law matches theta*'s on random probe sequences

    Identical laws give identical likelihoods for every sequence; distinct laws differ on
    generic ones. Likelihoods are Bayes cylinder probabilities for direct losses and
    emission likelihoods for Gaussian losses.
    """
    members = np.ones(len(family.grid), dtype=bool)
    for seed in seeds:
        hidden = sample_trajectory(family.model(theta_star), probe_len, seed, source="probe")
        if isinstance(loss, DirectLoss):
            ll = log_likelihood_curves(family, hidden.symbols)[:, -1]
        elif loss.kind is LossKind.NEG_LOG_DENSITY:
            ll = log_partition_curves(family, loss, observe(hidden, loss, theta_star, seed).values)[:, -1]
        else:
            raise KindMismatch("identifiability needs a likelihood: direct or neg_log_density loss")
        members &= np.abs(ll - ll[theta_star]) <= IDENTIFIABILITY_TOL * (1.0 + abs(ll[theta_star]))
    return [int(i) for i in np.nonzero(members)[0]]


def trajectory_source(model: GibbsModel, n: int, name: str = "model") -> ObservationSource:
    """Observation source sampling direct trajectories of a model"""

    def source(seed: int) -> Trajectory:
        return sample_trajectory(model, n, seed, source=name)

    return source


def emission_source(model: GibbsModel, spec: LossSpec, theta: int, n: int, name: str = "model") -> ObservationSource:
    """Observation source drawing hidden paths of a model and observing them through `spec`"""

    def source(seed: int) -> Any:
        return observe(sample_trajectory(model, n, seed, source=name), spec, theta, seed)

    return source
