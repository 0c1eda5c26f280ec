"""
Scenario runners for gibbsposterior
Each runner reproduces one limit or consistency result at desk scale and checks it
against fixed acceptance thresholds
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, GibbsPosteriorError, KindMismatch
from .models import LossKind, LossSpec, PotentialFamily, ThetaGrid, gaussian_loss
from .posterior import (
    ConcentrationReport,
    DirectLoss,
    ObservationLoss,
    PosteriorGrid,
    RateTable,
    bayes_posterior_direct_path,
    concentration_report,
    ground_state_rates,
    identifiability_class,
    log_partition_curves,
    partition_bounds,
    posterior_sandwich,
    posteriors_from_curves,
    rate_table_from_samples,
    theta_min,
)
from .reports import ReportWriter
from .simulate import (
    EmissionSequence,
    emit,
    misspecified_source,
    observation_values,
    observe,
    reference_seeds,
    replicate_seeds,
    sample_trajectory,
)
from .thermo import Potential, gibbs_constant_audit
from .utils import word_codes

logger = logging.getLogger(__name__)

SCENARIO_CATEGORY = "gibbsposterior/scenarios"


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class ScenarioResult:
    """Outcome of one scenario run: threshold checks, headline metrics and written files"""

    scenario: str
    checks: List[Check] = field(default_factory=list)
    metrics: Dict[str, Any] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.checks) and all(c.passed for c in self.checks)

    def check(self, name: str, passed: bool, detail: str) -> None:
        if not passed:
            logger.warning("%s: check %s failed: %s", self.scenario, name, detail)
        self.checks.append(Check(name, bool(passed), detail))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "passed": self.passed,
            "error": self.error,
            "checks": [c.to_dict() for c in self.checks],
            "metrics": self.metrics,
            "files": list(self.files),
        }


ObservationSource = Callable[[int], Any]


def _counted(values: Sequence[bool]) -> str:
    return f"{sum(values)}/{len(values)}"


class ScenarioRunner:
    """Shared plumbing: replicate seeds, the worker pool, observation sources and reports"""

    SCENARIO = ""
    RETURN_TYPES = ("SCENARIO_RESULT", "BOOLEAN")
    RETURN_NAMES = ("result", "success")
    FUNCTION = "run"
    CATEGORY = SCENARIO_CATEGORY

    @classmethod
    def INPUT_TYPES(cls) -> Dict[str, Dict[str, tuple]]:
        return {
            "required": {
                "family": ("FAMILY",),
                "loss": ("LOSS",),
                "n_schedule": ("INT_LIST", {"min": 1}),
            },
            "optional": {
                "replicates": ("INT", {"default": 8, "min": 1, "max": 1024}),
                "seed": ("INT", {"default": 0, "min": 0}),
                "beta": ("FLOAT", {"default": 1.0, "min": 0.0}),
            },
        }

    def __init__(self, writer: Optional[ReportWriter] = None, threads: int = 1) -> None:
        self.writer = writer
        self.threads = max(1, int(threads))

    def execute(self, **inputs: Any) -> Tuple[ScenarioResult, bool]:
        """Run the scenario; library failures become an error result instead of raising"""
        try:
            result = getattr(self, self.FUNCTION)(**inputs)
        except GibbsPosteriorError as e:
            logger.error("%s failed: %s", self.SCENARIO, e)
            result = ScenarioResult(self.SCENARIO, error=f"{type(e).__name__}: {e}")
        if self.writer is not None:
            result.files = list(self.writer.files)
            self.writer.summary(result.to_dict())
            result.files = list(self.writer.files)
        logger.info("%s finished: %s", self.SCENARIO, "pass" if result.passed else "fail")
        return result, result.passed

    def map_replicates(self, fn: Callable[[int, int], Any], seeds: Sequence[int]) -> List[Any]:
        """fn(replicate, seed) over every replicate, results in replicate order"""
        if self.threads == 1 or len(seeds) == 1:
            return [fn(i, s) for i, s in enumerate(seeds)]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, range(len(seeds)), seeds))

    @staticmethod
    def seeds(seed: int, replicates: int) -> List[int]:
        return replicate_seeds(seed, replicates)

    @staticmethod
    def observation_source(
        family: PotentialFamily,
        loss: ObservationLoss,
        n: int,
        theta_star: Optional[int] = None,
        generator: Optional[Dict[str, Any]] = None,
    ) -> ObservationSource:
        """Seed -> observations: a misspecified generator, draws from theta*, or the null stream"""
        if generator is not None:
            name, params = generator["name"], generator.get("params", {})
            return lambda seed: misspecified_source(name, n, seed, params)
        if theta_star is not None:
            model = family.model(theta_star)
            label = f"theta[{theta_star}]"
            if isinstance(loss, DirectLoss):
                return lambda seed: sample_trajectory(model, n, seed, source=label)
            return lambda seed: observe(sample_trajectory(model, n, seed, source=label), loss, theta_star, seed)
        if isinstance(loss, LossSpec) and loss.kind is LossKind.ZERO:
            return lambda seed: EmissionSequence(values=np.zeros(n), seed=int(seed), source="null")
        raise DomainError("observations need theta_star or a generator unless the loss is zero")

    def _curves(
        self,
        family: PotentialFamily,
        loss: ObservationLoss,
        source: ObservationSource,
        seeds: Sequence[int],
        beta: float,
    ) -> List[np.ndarray]:
        def one(replicate: int, seed: int) -> np.ndarray:
            curves = log_partition_curves(family, loss, observation_values(source(seed)), beta)
            logger.debug("replicate %d (seed %d): forward pass over n=%d done", replicate, seed, curves.shape[1])
            return curves

        return self.map_replicates(one, seeds)

    def _rates(
        self,
        family: PotentialFamily,
        loss: ObservationLoss,
        curves: Sequence[np.ndarray],
        n: int,
        beta: float,
        theta_star: Optional[int] = None,
    ) -> RateTable:
        samples = np.array([-c[:, n - 1] / n for c in curves])
        return rate_table_from_samples(family, loss, samples, n, beta, theta_star)

    def _write(self, method: str, *args: Any) -> None:
        if self.writer is not None:
            getattr(self.writer, method)(*args)

    def _partition_check(
        self,
        result: ScenarioResult,
        posteriors: Sequence[Sequence[PosteriorGrid]],
    ) -> List[Tuple[int, int, float, float, float]]:
        rows = []
        held = []
        for replicate, path in enumerate(posteriors):
            for post in path:
                bounds = partition_bounds(post)
                held.append(bounds.holds)
                rows.append((replicate, post.n, bounds.value, bounds.lower, bounds.upper))
        result.check(
            "partition_bounds",
            all(held),
            f"logsumexp bounds on -(1/n) log Z_n hold at {_counted(held)} logged (replicate, n)",
        )
        self._write("rows", "partition.csv", ("replicate", "n", "minus_log_Z_over_n", "lower", "upper"), rows)
        return rows

    def _concentration_check(
        self,
        result: ScenarioResult,
        posteriors: Sequence[Sequence[PosteriorGrid]],
        target: Sequence[int],
        radius: float,
        threshold: float,
        min_pass_fraction: float,
    ) -> List[ConcentrationReport]:
        reports = [concentration_report(path, target, radius, threshold) for path in posteriors]
        below = [r.final.outside_mass < threshold for r in reports]
        needed = math.ceil(min_pass_fraction * len(reports) - 1e-12)
        result.check(
            "concentration",
            sum(below) >= needed,
            f"outside mass < {threshold} at n={reports[0].final.n} on {_counted(below)} replicates (need {needed})",
        )
        result.metrics["outside_mass_final"] = [r.final.outside_mass for r in reports]
        result.metrics["n_reached"] = [r.n_reached for r in reports]
        result.metrics["decreasing_fraction"] = [r.decreasing_fraction for r in reports]
        self._write("concentration", "concentration.csv", reports)
        return reports

    def _dump_posteriors(self, posteriors: Sequence[Sequence[PosteriorGrid]], prefix: str = "posterior") -> None:
        for replicate, path in enumerate(posteriors):
            self._write("posterior", f"{prefix}_r{replicate:02d}.csv", path)


class PartitionLimitScenario(ScenarioRunner):
    """-(1/n) log Z_n against the grid minimum of the per-theta rates"""

    SCENARIO = "partition_limit"

    @classmethod
    def INPUT_TYPES(cls) -> Dict[str, Dict[str, tuple]]:
        types = super().INPUT_TYPES()
        types["optional"].update(
            {
                "theta_star": ("THETA",),
                "generator": ("GENERATOR",),
                "tolerance": ("FLOAT", {"default": 0.03, "min": 0.0}),
            }
        )
        return types

    def run(
        self,
        family: PotentialFamily,
        loss: ObservationLoss,
        n_schedule: Sequence[int],
        replicates: int = 8,
        seed: int = 0,
        beta: float = 1.0,
        theta_star: Optional[int] = None,
        generator: Optional[Dict[str, Any]] = None,
        tolerance: float = 0.03,
    ) -> ScenarioResult:
        result = ScenarioResult(self.SCENARIO)
        n_max = max(n_schedule)
        seeds = self.seeds(seed, replicates)
        source = self.observation_source(family, loss, n_max, theta_star, generator)
        curves = self._curves(family, loss, source, seeds, beta)
        posteriors = [posteriors_from_curves(family.grid, c, n_schedule, beta) for c in curves]
        self._partition_check(result, posteriors)

        rates = self._rates(family, loss, curves, n_max, beta, theta_star)
        if rates.v_limit is None:
            # reference estimated on draws independent of the checked replicates
            held_out = self._curves(family, loss, source, reference_seeds(seed, replicates), beta)
            rates = self._rates(family, loss, held_out, n_max, beta, theta_star)
        reference = float(np.min(rates.v_limit if rates.v_limit is not None else rates.v_hat))
        limits = [-path[-1].log_Z / n_max for path in posteriors]
        close = [abs(v - reference) <= tolerance for v in limits]
        result.check(
            "partition_limit",
            all(close),
            f"|-(1/n) log Z_n - {reference:.6f}| <= {tolerance} at n={n_max} on {_counted(close)} replicates",
        )
        result.metrics.update(
            {
                "limit": limits,
                "reference": reference,
                "theta_min": [family.grid.label(i) for i in theta_min(rates)],
            }
        )
        self._write("rates", "rates.csv", rates)
        return result


class PosteriorConcentrationScenario(ScenarioRunner):
    """Posterior mass leaves every set at positive distance from Theta_min"""

    SCENARIO = "posterior_concentration"

    @classmethod
    def INPUT_TYPES(cls) -> Dict[str, Dict[str, tuple]]:
        types = super().INPUT_TYPES()
        types["optional"].update(
            {
                "theta_star": ("THETA",),
                "generator": ("GENERATOR",),
                "radius": ("FLOAT", {"default": 0.05, "min": 0.0}),
                "threshold": ("FLOAT", {"default": 0.05, "min": 0.0, "max": 1.0}),
                "min_pass_fraction": ("FLOAT", {"default": 0.875, "min": 0.0, "max": 1.0}),
                "log_rate_bound": ("FLOAT", {"default": 0.05, "min": 0.0}),
            }
        )
        return types

    def run(
        self,
        family: PotentialFamily,
        loss: ObservationLoss,
        n_schedule: Sequence[int],
        replicates: int = 8,
        seed: int = 0,
        beta: float = 1.0,
        theta_star: Optional[int] = None,
        generator: Optional[Dict[str, Any]] = None,
        radius: float = 0.05,
        threshold: float = 0.05,
        min_pass_fraction: float = 0.875,
        log_rate_bound: float = 0.05,
    ) -> ScenarioResult:
        result = ScenarioResult(self.SCENARIO)
        n_max = max(n_schedule)
        seeds = self.seeds(seed, replicates)
        source = self.observation_source(family, loss, n_max, theta_star, generator)
        curves = self._curves(family, loss, source, seeds, beta)
        rates = self._rates(family, loss, curves, n_max, beta, theta_star)
        minimizers = theta_min(rates)
        result.metrics["theta_min"] = [family.grid.label(i) for i in minimizers]

        posteriors = [posteriors_from_curves(family.grid, c, n_schedule, beta) for c in curves]
        reports = self._concentration_check(result, posteriors, minimizers, radius, threshold, min_pass_fraction)
        not_small = [abs(r.final.log_inside_rate) <= log_rate_bound for r in reports]
        result.check(
            "log_inside_rate",
            all(not_small),
            f"|(1/n) log pi_n(U)| <= {log_rate_bound} at n={n_max} on {_counted(not_small)} replicates",
        )
        self._partition_check(result, posteriors)
        self._write("rates", "rates.csv", rates)
        self._dump_posteriors(posteriors)
        return result


class DirectGibbsScenario(ScenarioRunner):
    """Direct observation of theta*: limit, concentration and the Gibbs/Bayes sandwich"""

    SCENARIO = "direct_gibbs"

    @classmethod
    def INPUT_TYPES(cls) -> Dict[str, Dict[str, tuple]]:
        types = super().INPUT_TYPES()
        types["required"]["theta_star"] = ("THETA",)
        types["optional"].update(
            {
                "radius": ("FLOAT", {"default": 0.05, "min": 0.0}),
                "threshold": ("FLOAT", {"default": 0.05, "min": 0.0, "max": 1.0}),
                "min_pass_fraction": ("FLOAT", {"default": 0.875, "min": 0.0, "max": 1.0}),
                "tolerance": ("FLOAT", {"default": 0.03, "min": 0.0}),
                "log_rate_bound": ("FLOAT", {"default": 0.05, "min": 0.0}),
                "audit_m": ("INT", {"default": 8, "min": 1, "max": 20}),
            }
        )
        return types

    def run(
        self,
        family: PotentialFamily,
        loss: ObservationLoss,
        n_schedule: Sequence[int],
        theta_star: int,
        replicates: int = 8,
        seed: int = 0,
        beta: float = 1.0,
        radius: float = 0.05,
        threshold: float = 0.05,
        min_pass_fraction: float = 0.875,
        tolerance: float = 0.03,
        log_rate_bound: float = 0.05,
        audit_m: int = 8,
    ) -> ScenarioResult:
        if not isinstance(loss, DirectLoss):
            raise KindMismatch("direct_gibbs needs the direct loss ({'kind': 'direct'})")
        result = ScenarioResult(self.SCENARIO)
        grid = family.grid
        n_max = max(n_schedule)

        audits = [(grid.label(i), gibbs_constant_audit(family.model(i), audit_m)) for i in range(len(grid))]
        K = max(a.K for _, a in audits)
        result.metrics["gibbs_K"] = K
        self._write("audit", "audit.csv", audits)

        model = family.model(theta_star)
        seeds = self.seeds(seed, replicates)

        def one(replicate: int, s: int) -> Tuple[List[PosteriorGrid], List[PosteriorGrid], np.ndarray]:
            y = sample_trajectory(model, n_max, s, source=f"theta[{theta_star}]").symbols
            curves = log_partition_curves(family, loss, y, beta)
            return (
                posteriors_from_curves(grid, curves, n_schedule, beta),
                bayes_posterior_direct_path(family, y, n_schedule),
                curves,
            )

        runs = self.map_replicates(one, seeds)
        gibbs = [r[0] for r in runs]
        bayes = [r[1] for r in runs]
        rates = self._rates(family, loss, [r[2] for r in runs], n_max, beta, theta_star)

        reference = float(np.min(rates.v_limit))
        limits = [-path[-1].log_Z / n_max for path in gibbs]
        close = [abs(v - reference) <= tolerance for v in limits]
        result.check(
            "partition_limit",
            all(close),
            f"|-(1/n) log Z_n - {reference:.6f}| <= {tolerance} at n={n_max} on {_counted(close)} replicates",
        )

        closed_min = theta_min(
            RateTable(grid=grid, v_hat=rates.v_closed, stderr=np.zeros(len(grid)), n_used=n_max)
        )
        result.check(
            "theta_min_closed_form",
            theta_star in closed_min,
            f"argmin of the closed-form rate {[grid.label(i) for i in closed_min]} contains theta*",
        )

        self._concentration_check(result, gibbs, [theta_star], radius, threshold, min_pass_fraction)

        singleton = np.zeros(len(grid), dtype=bool)
        singleton[theta_star] = True
        inside_rates = [path[-1].log_mass(singleton) / n_max for path in gibbs]
        not_small = [abs(v) <= log_rate_bound for v in inside_rates]
        result.check(
            "log_inside_rate",
            all(not_small),
            f"|(1/n) log pi_n({{theta*}})| <= {log_rate_bound} at n={n_max} on {_counted(not_small)} replicates",
        )

        sandwich_rows = []
        held = []
        for replicate, (g_path, b_path) in enumerate(zip(gibbs, bayes)):
            for g, b in zip(g_path, b_path):
                report = posterior_sandwich(g, b, K)
                held.append(report.holds)
                sandwich_rows.append((replicate, g.n, report.max_abs_log_ratio, report.log_bound))
        result.check(
            "sandwich",
            all(held),
            f"K^-2 pi_n <= Pi_n <= K^2 pi_n with K={K:.12g} at {_counted(held)} logged (replicate, n)",
        )

        result.metrics.update(
            {
                "limit": limits,
                "reference": reference,
                "closed_form_min": float(np.min(rates.v_closed)),
                "log_inside_rate": inside_rates,
                "mode": [[grid.label(i) for i in path[-1].mode()] for path in gibbs],
            }
        )
        self._partition_check(result, gibbs)
        self._write("rows", "sandwich.csv", ("replicate", "n", "max_abs_log_ratio", "log_bound"), sandwich_rows)
        self._write("rates", "rates.csv", rates)
        self._dump_posteriors(gibbs, "posterior")
        self._dump_posteriors(bayes, "bayes")
        return result


def relabel_potential(potential: Potential) -> Potential:
    """The potential seen through the symbol reversal a -> |A| - 1 - a"""
    sft = potential.sft
    size = sft.alphabet_size
    words = np.array(list(itertools.product(range(size), repeat=potential.range)), dtype=np.int64)
    values = potential.values[word_codes(size - 1 - words, size)]
    return Potential(sft=sft, range=potential.range, values=values)


def with_relabeled_duplicate(
    family: PotentialFamily, spec: LossSpec, theta_star: int, weight: float
) -> Tuple[PotentialFamily, LossSpec, int]:
    """Append a symbol-reversed copy of theta* to the grid

    The copy draws hidden paths from the reversed potential and emits with reversed
    means, so its emission law equals theta*'s. The grid gains a trailing 0/1 copy
    coordinate; the copy's prior is `weight` times theta*'s before renormalization.
    """
    sft = family.sft
    size = sft.alphabet_size
    if frozenset(tuple(size - 1 - s for s in w) for w in sft.forbidden) != sft.forbidden:
        raise DomainError("relabeled duplicate needs a shift invariant under symbol reversal")
    grid = family.grid
    prior = np.append(grid.prior_weights, weight * grid.prior_weights[theta_star])
    points = np.vstack(
        [
            np.hstack([grid.points, np.zeros((len(grid), 1))]),
            np.append(grid.points[theta_star], 1.0)[None, :],
        ]
    )
    new_grid = ThetaGrid(points=points, prior_weights=prior / prior.sum())
    potentials = family.potentials + (relabel_potential(family.potential_of(theta_star)),)
    new_family = PotentialFamily(grid=new_grid, potentials=potentials, name=f"{family.name}+copy")
    mean = np.vstack([spec.mean, spec.mean[theta_star][::-1]])
    std = np.vstack([spec.std, spec.std[theta_star][::-1]])
    return new_family, gaussian_loss(mean, std), len(grid)


class HiddenGibbsScenario(ScenarioRunner):
    """Gaussian emissions of a hidden Gibbs path: the Bayes posterior finds [theta*]"""

    SCENARIO = "hidden_gibbs"

    @classmethod
    def INPUT_TYPES(cls) -> Dict[str, Dict[str, tuple]]:
        types = super().INPUT_TYPES()
        types["required"]["theta_star"] = ("THETA",)
        del types["optional"]["beta"]
        types["optional"].update(
            {
                "radius": ("FLOAT", {"default": 0.0, "min": 0.0}),
                "mass_threshold": ("FLOAT", {"default": 0.9, "min": 0.0, "max": 1.0}),
                "min_pass_fraction": ("FLOAT", {"default": 0.875, "min": 0.0, "max": 1.0}),
                "duplicate": ("BOOLEAN", {"default": True}),
                "duplicate_weight": ("FLOAT", {"default": 0.5, "min": 0.0}),
                "prior_ratio_tol": ("FLOAT", {"default": 1e-6, "min": 0.0}),
            }
        )
        return types

    def run(
        self,
        family: PotentialFamily,
        loss: ObservationLoss,
        n_schedule: Sequence[int],
        theta_star: int,
        replicates: int = 8,
        seed: int = 0,
        radius: float = 0.0,
        mass_threshold: float = 0.9,
        min_pass_fraction: float = 0.875,
        duplicate: bool = True,
        duplicate_weight: float = 0.5,
        prior_ratio_tol: float = 1e-6,
    ) -> ScenarioResult:
        if not isinstance(loss, LossSpec) or loss.kind is not LossKind.NEG_LOG_DENSITY:
            raise KindMismatch("hidden_gibbs needs a neg_log_density loss")
        result = ScenarioResult(self.SCENARIO)
        copy_index = None
        if duplicate:
            family, loss, copy_index = with_relabeled_duplicate(family, loss, theta_star, duplicate_weight)
        grid = family.grid
        n_max = max(n_schedule)
        step = radius if radius > 0 else grid.spacing()

        target = identifiability_class(family, loss, theta_star)
        result.metrics["identifiability_class"] = [grid.label(i) for i in target]
        inside = grid.neighborhood(target, step)

        model = family.model(theta_star)
        seeds = self.seeds(seed, replicates)

        def one(replicate: int, s: int) -> np.ndarray:
            hidden = sample_trajectory(model, n_max, s, source=f"theta[{theta_star}]")
            return log_partition_curves(family, loss, emit(hidden, loss, theta_star, s).values)

        curves = self.map_replicates(one, seeds)
        posteriors = [posteriors_from_curves(grid, c, n_schedule, 1.0, "bayes") for c in curves]

        masses = [path[-1].mass(inside) for path in posteriors]
        above = [m > mass_threshold for m in masses]
        needed = math.ceil(min_pass_fraction * len(above) - 1e-12)
        result.check(
            "concentration",
            sum(above) >= needed,
            f"mass within {step:g} of [theta*] > {mass_threshold} at n={n_max}"
            f" on {_counted(above)} replicates (need {needed})",
        )
        result.metrics["inside_mass_final"] = masses

        if copy_index is not None:
            expected = float(grid.log_prior[copy_index] - grid.log_prior[theta_star])
            gaps = [
                abs(float(path[-1].log_posterior[copy_index] - path[-1].log_posterior[theta_star]) - expected)
                for path in posteriors
            ]
            result.check(
                "duplicate_split",
                copy_index in target and all(g <= prior_ratio_tol for g in gaps),
                f"copy/theta* mass ratio matches the prior ratio {math.exp(expected):.6g} within {prior_ratio_tol}",
            )
            result.metrics["duplicate_log_ratio_gap"] = gaps

        rates = self._rates(family, loss, curves, n_max, 1.0)
        self._write("rates", "rates.csv", rates)
        self._dump_posteriors(posteriors)
        return result


class MisspecifiedScenario(ScenarioRunner):
    """Observations from outside the model class; reports the empirical Theta_min"""

    SCENARIO = "misspecified"

    @classmethod
    def INPUT_TYPES(cls) -> Dict[str, Dict[str, tuple]]:
        types = super().INPUT_TYPES()
        types["required"]["generator"] = ("GENERATOR",)
        types["optional"].update(
            {
                "radius": ("FLOAT", {"default": 0.05, "min": 0.0}),
                "threshold": ("FLOAT", {"default": 0.05, "min": 0.0, "max": 1.0}),
                "min_pass_fraction": ("FLOAT", {"default": 0.875, "min": 0.0, "max": 1.0}),
                "ground_state_betas": ("FLOAT_LIST", {"default": []}),
            }
        )
        return types

    def run(
        self,
        family: PotentialFamily,
        loss: ObservationLoss,
        n_schedule: Sequence[int],
        generator: Dict[str, Any],
        replicates: int = 8,
        seed: int = 0,
        beta: float = 1.0,
        radius: float = 0.05,
        threshold: float = 0.05,
        min_pass_fraction: float = 0.875,
        ground_state_betas: Sequence[float] = (),
    ) -> ScenarioResult:
        result = ScenarioResult(self.SCENARIO)
        n_max = max(n_schedule)
        seeds = self.seeds(seed, replicates)
        source = self.observation_source(family, loss, n_max, generator=generator)
        curves = self._curves(family, loss, source, seeds, beta)
        rates = self._rates(family, loss, curves, n_max, beta)
        minimizers = theta_min(rates)
        result.metrics["theta_min_empirical"] = [family.grid.label(i) for i in minimizers]
        result.metrics["V_hat_min"] = float(np.min(rates.v_hat))

        posteriors = [posteriors_from_curves(family.grid, c, n_schedule, beta) for c in curves]
        self._concentration_check(result, posteriors, minimizers, radius, threshold, min_pass_fraction)
        self._partition_check(result, posteriors)

        if ground_state_betas:
            ladder = ground_state_rates(family, loss, source, n_max, seeds, ground_state_betas)
            result.metrics["ground_state"] = {
                repr(b): {"min": float(np.min(v)), "argmin": family.grid.label(int(np.argmin(v)))}
                for b, v in ladder.items()
            }
        self._write("rates", "rates.csv", rates)
        self._dump_posteriors(posteriors)
        return result


SCENARIO_RUNNERS = {
    cls.SCENARIO: cls
    for cls in (
        PartitionLimitScenario,
        PosteriorConcentrationScenario,
        DirectGibbsScenario,
        HiddenGibbsScenario,
        MisspecifiedScenario,
    )
}
