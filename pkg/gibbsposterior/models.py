"""
Parametrized model families for gibbsposterior
Theta grids with priors, potential families, the three loss families and regularity reports
"""

import logging
import math
import operator
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from cachetools import LRUCache, cachedmethod

from .errors import DomainError, KindMismatch, LengthMismatch, ShapeMismatch
from .sft import Sft, build_sft
from .thermo import GibbsModel, Potential, solve_gibbs
from .utils import content_hash

logger = logging.getLogger(__name__)

PRIOR_TOL = 1e-12
BERNOULLI_EPS = 1e-3
STD_FLOOR = 1e-6
HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class ThetaGrid:
    """Finite parameter set with a fully supported prior

    Attributes:
        points: (G, d) array of parameter values
        prior_weights: (G,) strictly positive probability vector
        bounds: Optional per-component (low, high) bounds
    """

    points: np.ndarray
    prior_weights: np.ndarray
    bounds: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self) -> None:
        if self.points.ndim != 2 or len(self.points) == 0:
            raise ShapeMismatch(f"grid points must be a non-empty (G, d) array, got {self.points.shape}")
        if self.prior_weights.shape != (len(self.points),):
            raise ShapeMismatch("prior_weights must have one entry per grid point")
        if np.any(self.prior_weights <= 0):
            raise DomainError("prior must be fully supported: every grid weight must be > 0")
        if abs(float(self.prior_weights.sum()) - 1.0) > PRIOR_TOL:
            raise DomainError(f"prior weights sum to {self.prior_weights.sum():.15g}, not 1")
        if len(np.unique(self.points, axis=0)) != len(self.points):
            raise DomainError("grid points must be distinct")
        if self.bounds is not None:
            low = np.array([b[0] for b in self.bounds])
            high = np.array([b[1] for b in self.bounds])
            if np.any(self.points < low) or np.any(self.points > high):
                raise DomainError(f"grid points leave the component bounds {self.bounds}")

    @classmethod
    def from_values(
        cls,
        points: Union[Sequence[float], Sequence[Sequence[float]], np.ndarray],
        prior: Optional[Sequence[float]] = None,
        bounds: Optional[Sequence[Tuple[float, float]]] = None,
    ) -> "ThetaGrid":
        """Grid from scalar or vector points; the prior defaults to uniform

        Raises:
            DomainError: If points or prior are not numeric
        """
        try:
            array = np.asarray(points, dtype=float)
        except (TypeError, ValueError):
            raise DomainError(f"grid points must be numbers, got {points!r}")
        if array.ndim == 1:
            array = array[:, None]
        if prior is None:
            weights = np.full(len(array), 1.0 / len(array))
        else:
            try:
                weights = np.asarray(prior, dtype=float)
            except (TypeError, ValueError):
                raise DomainError(f"prior weights must be numbers, got {prior!r}")
        return cls(
            points=array,
            prior_weights=weights,
            bounds=None if bounds is None else tuple((float(a), float(b)) for a, b in bounds),
        )

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def values(self) -> np.ndarray:
        """First coordinate of every point"""
        return self.points[:, 0]

    @property
    def log_prior(self) -> np.ndarray:
        return np.log(self.prior_weights)

    def label(self, i: int) -> str:
        return ";".join(repr(float(v)) for v in self.points[i])

    def index_of(self, point: Union[float, Sequence[float]], tol: float = 1e-9) -> int:
        """Index of the grid point equal to `point` within tol"""
        target = np.atleast_1d(np.asarray(point, dtype=float))
        distance = np.max(np.abs(self.points - target[None, :]), axis=1)
        i = int(np.argmin(distance))
        if distance[i] > tol:
            raise DomainError(f"{point!r} is not a grid point")
        return i

    def neighborhood(self, targets: Sequence[int], radius: float) -> np.ndarray:
        """Mask of grid points within `radius` (sup norm) of any target point"""
        mask = np.zeros(len(self), dtype=bool)
        for t in targets:
            distance = np.max(np.abs(self.points - self.points[t][None, :]), axis=1)
            mask |= distance <= radius + 1e-12
        return mask

    def spacing(self) -> float:
        """Smallest positive sup-norm distance between grid points"""
        if len(self) < 2:
            return 0.0
        diffs = np.max(np.abs(self.points[:, None, :] - self.points[None, :, :]), axis=2)
        return float(diffs[diffs > 0].min())

    def grid_hash(self) -> str:
        return content_hash({"points": self.points, "prior": self.prior_weights})


@dataclass(eq=False)
class PotentialFamily:
    """Regular family theta -> f_theta on one SFT with one common range"""

    grid: ThetaGrid
    potentials: Tuple[Potential, ...]
    name: str = "family"
    _models: LRUCache = field(default_factory=lambda: LRUCache(maxsize=1024), init=False, repr=False)
    _lock: Any = field(default_factory=threading.RLock, init=False, repr=False)

    def __post_init__(self) -> None:
        self.potentials = tuple(self.potentials)
        if len(self.potentials) != len(self.grid):
            raise ShapeMismatch(f"{len(self.potentials)} potentials for {len(self.grid)} grid points")
        first = self.potentials[0]
        for p in self.potentials[1:]:
            if p.range != first.range or not p.sft.same_shift(first.sft):
                raise ShapeMismatch("all potentials of a family must share one SFT and range")

    @property
    def sft(self) -> Sft:
        return self.potentials[0].sft

    @property
    def range(self) -> int:
        return self.potentials[0].range

    def potential_of(self, i: int) -> Potential:
        return self.potentials[i]

    @cachedmethod(operator.attrgetter("_models"), lock=operator.attrgetter("_lock"))
    def model(self, i: int) -> GibbsModel:
        """Solved Gibbs model of grid point i (memoized)"""
        logger.debug("solving %s at theta[%d]=%s", self.name, i, self.grid.label(i))
        return solve_gibbs(self.sft, self.potentials[i])

    def models(self) -> List[GibbsModel]:
        return [self.model(i) for i in range(len(self.grid))]

    def pressures(self) -> np.ndarray:
        return np.array([m.pressure for m in self.models()])


class LossKind(str, Enum):
    SQUARED = "squared"
    DISCRETE = "discrete"
    NEG_LOG_DENSITY = "neg_log_density"
    ZERO = "zero"


@dataclass(frozen=True, eq=False)
class LossSpec:
    """Window-1 loss l(theta, x, y) reading the hidden point through x_0 only

    Attributes:
        kind: Loss family
        alphabet_size: Symbols of the hidden SFT
        n_theta: Number of grid points the per-theta tables cover
        phi: (n_theta, A) observation map of the squared loss
        output_map: (A,) output symbol of the discrete loss
        mean: (n_theta, A) Gaussian emission means
        std: (n_theta, A) Gaussian emission standard deviations
    """

    kind: LossKind
    alphabet_size: int
    n_theta: int
    phi: Optional[np.ndarray] = None
    output_map: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None
    std: Optional[np.ndarray] = None
    window: int = 1

    def __post_init__(self) -> None:
        shape = (self.n_theta, self.alphabet_size)
        if self.kind is LossKind.SQUARED:
            _require_shape("phi", self.phi, shape)
        elif self.kind is LossKind.DISCRETE:
            _require_shape("output_map", self.output_map, (self.alphabet_size,))
        elif self.kind is LossKind.NEG_LOG_DENSITY:
            _require_shape("mean", self.mean, shape)
            _require_shape("std", self.std, shape)
            if np.any(self.std < STD_FLOOR):
                raise DomainError(f"emission std must be >= {STD_FLOOR}, got {self.std.min():.3g}")
        if self.window != 1:
            raise DomainError("loss window is fixed to 1")

    @property
    def real_valued(self) -> bool:
        return self.kind in (LossKind.SQUARED, LossKind.NEG_LOG_DENSITY)

    def check_observations(self, observations: Any) -> np.ndarray:
        """Observation array of the dtype this kind reads; KindMismatch otherwise"""
        array = np.asarray(observations)
        if self.kind is LossKind.ZERO:
            return array
        if self.kind is LossKind.DISCRETE:
            if not np.issubdtype(array.dtype, np.integer):
                raise KindMismatch(f"discrete loss needs symbol observations, got dtype {array.dtype}")
            return array.astype(np.int64)
        if not (np.issubdtype(array.dtype, np.floating) or np.issubdtype(array.dtype, np.integer)):
            raise KindMismatch(f"{self.kind.value} loss needs real observations, got dtype {array.dtype}")
        return array.astype(float)

    def loss_table(self, theta: int, observations: Any) -> np.ndarray:
        """(n, A) losses l(theta, x_0 = a, y_k)"""
        y = np.atleast_1d(self.check_observations(observations))
        if self.kind is LossKind.ZERO:
            return np.zeros((len(y), self.alphabet_size))
        if self.kind is LossKind.SQUARED:
            return (self.phi[theta][None, :] - y[:, None]) ** 2
        if self.kind is LossKind.DISCRETE:
            return (self.output_map[None, :] != y[:, None]).astype(float)
        mean, std = self.mean[theta][None, :], self.std[theta][None, :]
        return HALF_LOG_TWO_PI + np.log(std) + (y[:, None] - mean) ** 2 / (2.0 * std ** 2)

    def loss_tables(self, observations: Any) -> np.ndarray:
        """(n_theta, n, A) losses for every grid point"""
        return np.stack([self.loss_table(t, observations) for t in range(self.n_theta)])

    def loss_bound(self, observations: Any) -> np.ndarray:
        """l*(y) = max over grid points and symbols of |l(theta, x, y)|"""
        return np.max(np.abs(self.loss_tables(observations)), axis=(0, 2))

    def to_dict(self) -> Dict[str, Any]:
        maps: Dict[str, Any] = {}
        if self.kind is LossKind.SQUARED:
            maps = {"phi": self.phi.tolist()}
        elif self.kind is LossKind.DISCRETE:
            maps = {"output_map": self.output_map.tolist()}
        elif self.kind is LossKind.NEG_LOG_DENSITY:
            maps = {"mean": self.mean.tolist(), "std": self.std.tolist()}
        return {"kind": self.kind.value, "observation_map": maps}


def _require_shape(name: str, array: Optional[np.ndarray], shape: Tuple[int, ...]) -> None:
    if array is None:
        raise ShapeMismatch(f"{name} is required for this loss kind")
    if array.shape != shape:
        raise ShapeMismatch(f"{name} has shape {array.shape}, expected {shape}")


def squared_loss(phi: Sequence[Sequence[float]]) -> LossSpec:
    """Squared loss |phi_theta(x_0) - y|^2 from an (n_theta, A) table"""
    table = np.asarray(phi, dtype=float)
    return LossSpec(LossKind.SQUARED, table.shape[1], table.shape[0], phi=table)


def discrete_loss(output_map: Sequence[int], n_theta: int) -> LossSpec:
    """0-1 loss 1{phi(x_0) != y} with a theta-independent output map"""
    table = np.asarray(output_map, dtype=np.int64)
    return LossSpec(LossKind.DISCRETE, len(table), n_theta, output_map=table)


def gaussian_loss(mean: Sequence[Sequence[float]], std: Union[float, Sequence[Sequence[float]]]) -> LossSpec:
    """Negative log Gaussian emission density with per-(theta, symbol) mean and std"""
    means = np.asarray(mean, dtype=float)
    stds = np.broadcast_to(np.asarray(std, dtype=float), means.shape).copy()
    return LossSpec(LossKind.NEG_LOG_DENSITY, means.shape[1], means.shape[0], mean=means, std=stds)


def linear_gaussian_loss(
    grid: ThetaGrid, intercept: Sequence[float], slope: Sequence[float], std: float
) -> LossSpec:
    """Gaussian emissions with mean_theta(a) = intercept[a] + slope[a] * theta_0"""
    means = np.asarray(intercept, dtype=float)[None, :] + grid.values[:, None] * np.asarray(slope, dtype=float)[None, :]
    return gaussian_loss(means, std)


def zero_loss(alphabet_size: int, n_theta: int) -> LossSpec:
    """The null loss l = 0"""
    return LossSpec(LossKind.ZERO, alphabet_size, n_theta)


def loss_eval(spec: LossSpec, theta: int, symbol: int, y: Any) -> float:
    """Single loss value l(theta, x with x_0 = symbol, y)"""
    if not 0 <= symbol < spec.alphabet_size:
        raise DomainError(f"symbol {symbol} outside the alphabet")
    return float(spec.loss_table(theta, [y])[0, symbol])


def loss_path_sum(spec: LossSpec, theta: int, symbols: Sequence[int], observations: Any) -> float:
    """Sum over k of l(theta, x_k, y_k)"""
    symbols = np.asarray(symbols, dtype=np.int64)
    y = np.atleast_1d(np.asarray(observations))
    if len(symbols) != len(y):
        raise LengthMismatch(f"{len(symbols)} symbols but {len(y)} observations")
    if len(symbols) == 0:
        raise LengthMismatch("paths must have length >= 1")
    table = spec.loss_table(theta, y)
    return float(table[np.arange(len(symbols)), symbols].sum())


def bernoulli_family(
    values: Sequence[float], prior: Optional[Sequence[float]] = None, eps: float = BERNOULLI_EPS
) -> PotentialFamily:
    """Bernoulli(theta) family on the full 2-shift: f_theta(x) = log(theta or 1 - theta)

    Raises:
        DomainError: If a grid point leaves (eps, 1 - eps)
    """
    grid = ThetaGrid.from_values(values, prior)
    if grid.dim != 1 or np.any(grid.values <= eps) or np.any(grid.values >= 1 - eps):
        raise DomainError(f"Bernoulli grid points must lie in ({eps}, {1 - eps})")
    sft = build_sft(2)
    potentials = [
        Potential.from_table(sft, 1, {"0": math.log(1.0 - theta), "1": math.log(theta)})
        for theta in grid.values
    ]
    return PotentialFamily(grid=grid, potentials=tuple(potentials), name="bernoulli")


def markov_family(
    values: Sequence[float],
    base_a: Potential,
    base_b: Potential,
    prior: Optional[Sequence[float]] = None,
) -> PotentialFamily:
    """Affine family f_t = (1 - t) f_a + t f_b between two tables on one SFT"""
    if base_a.range != base_b.range or not base_a.sft.same_shift(base_b.sft):
        raise ShapeMismatch("base tables must share one SFT and range")
    grid = ThetaGrid.from_values(values, prior)
    potentials = [base_a.interpolate(base_b, float(t)) for t in grid.values]
    return PotentialFamily(grid=grid, potentials=tuple(potentials), name="affine")


def family_from_tables(
    sft: Sft,
    range: int,
    points: Sequence[Any],
    tables: Sequence[Mapping[str, float]],
    prior: Optional[Sequence[float]] = None,
) -> PotentialFamily:
    """Family with one explicit {word: value} table per grid point"""
    grid = ThetaGrid.from_values(points, prior)
    potentials = [Potential.from_table(sft, range, table) for table in tables]
    return PotentialFamily(grid=grid, potentials=tuple(potentials), name="tables")


@dataclass(frozen=True)
class RegularityRow:
    i: int
    j: int
    distance: float
    sup_diff: float
    pressure_jump: float


@dataclass(frozen=True)
class RegularityReport:
    """Adjacent-pair sup-norm differences and the pressure jumps they bound"""

    rows: Tuple[RegularityRow, ...]
    modulus: float

    @property
    def max_sup_diff(self) -> float:
        return max(r.sup_diff for r in self.rows)

    @property
    def pressure_bound_holds(self) -> bool:
        # |P(f) - P(g)| <= ||f - g||_sup
        return all(r.pressure_jump <= r.sup_diff + 1e-10 for r in self.rows)


def regularity_report(family: PotentialFamily) -> RegularityReport:
    """Sup-norm modulus of theta -> f_theta over adjacent grid points"""
    if len(family.grid) < 2:
        raise DomainError("regularity needs at least two grid points")
    pressures = family.pressures()
    rows = []
    for i in range(len(family.grid) - 1):
        distance = float(np.max(np.abs(family.grid.points[i + 1] - family.grid.points[i])))
        rows.append(
            RegularityRow(
                i=i,
                j=i + 1,
                distance=distance,
                sup_diff=family.potentials[i].sup_distance(family.potentials[i + 1]),
                pressure_jump=abs(float(pressures[i + 1] - pressures[i])),
            )
        )
    modulus = max((r.sup_diff / r.distance for r in rows if r.distance > 0), default=0.0)
    return RegularityReport(rows=tuple(rows), modulus=modulus)
