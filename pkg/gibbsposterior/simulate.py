"""
Seeded generation of observed systems
Trajectories from Gibbs measures, hidden-state emissions and misspecified sources
"""

import bisect
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Union

import numpy as np

from .errors import DomainError, KindMismatch, UnknownGenerator
from .models import LossKind, LossSpec
from .thermo import MarkovMeasure
from .utils import sliding_codes

logger = logging.getLogger(__name__)

STREAM_HIDDEN = 0
STREAM_EMISSION = 1
STREAM_SOURCE = 2
STREAM_REFERENCE = 3


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator (Philox) for one (seed, stream) pair"""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(sequence))


def replicate_seeds(master_seed: int, count: int) -> List[int]:
    """Disjoint 64-bit replicate seeds derived from one master seed"""
    states = np.random.SeedSequence(int(master_seed)).generate_state(count, dtype=np.uint64)
    return [int(s) for s in states]


def reference_seeds(master_seed: int, count: int) -> List[int]:
    """Seeds for reference estimates, disjoint from replicate_seeds of the same master seed"""
    sequence = np.random.SeedSequence(int(master_seed), spawn_key=(STREAM_REFERENCE,))
    return [int(s) for s in sequence.generate_state(count, dtype=np.uint64)]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Initial segment x_0 ... x_{n-1} of a point, with its provenance"""

    symbols: np.ndarray
    seed: int
    source: str

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True, eq=False)
class EmissionSequence:
    """Observations u_0 ... u_{n-1}, optionally with the hidden path that produced them"""

    values: np.ndarray
    seed: int
    source: str
    hidden: Optional[Trajectory] = None
    theta_star: Optional[int] = None

    def __post_init__(self) -> None:
        if self.hidden is not None and len(self.hidden) != len(self.values):
            raise DomainError("emission length does not match the hidden trajectory")

    def __len__(self) -> int:
        return len(self.values)


Observations = Union[Trajectory, EmissionSequence]


def observation_values(observed: Observations) -> np.ndarray:
    """The array a loss reads: symbols of a trajectory or values of an emission sequence"""
    if isinstance(observed, Trajectory):
        return observed.symbols
    return observed.values


def sample_trajectory(
    model: MarkovMeasure, n: int, seed: int, source: str = "model"
) -> Trajectory:
    """Stationary path of length n: first block from pi, then n - block_len kernel steps"""
    sft = model.sft
    if n < sft.block_len:
        raise DomainError(f"trajectory length {n} is shorter than block_len {sft.block_len}")
    rng = make_rng(seed, STREAM_HIDDEN)
    state = int(rng.choice(sft.n_blocks, p=model.stationary))
    uniforms = rng.random(n - sft.block_len).tolist()

    cumulative = np.cumsum(model.kernel, axis=1)
    cumulative[:, -1] = 1.0
    rows = cumulative.tolist()
    last_symbol = sft.block_array[:, -1].tolist()

    symbols = list(sft.blocks[state])
    for u in uniforms:
        state = bisect.bisect_right(rows[state], u)
        symbols.append(last_symbol[state])
    return Trajectory(symbols=np.array(symbols, dtype=np.int64), seed=int(seed), source=source)


def emit(hidden: Trajectory, spec: LossSpec, theta: int, seed: int) -> EmissionSequence:
    """Gaussian emissions u_k ~ N(m_theta(x_k), s_theta(x_k)^2), independent given the path"""
    if spec.kind is not LossKind.NEG_LOG_DENSITY:
        raise KindMismatch(f"emit needs a neg_log_density loss, got {spec.kind.value}")
    rng = make_rng(seed, STREAM_EMISSION)
    x = hidden.symbols
    values = spec.mean[theta][x] + spec.std[theta][x] * rng.standard_normal(len(x))
    return EmissionSequence(
        values=values, seed=int(seed), source=hidden.source, hidden=hidden, theta_star=theta
    )


def observe(
    hidden: Trajectory, spec: LossSpec, theta: int, seed: int, noise: float = 1.0
) -> EmissionSequence:
    """Observations of a hidden path for any loss kind

    neg_log_density draws Gaussian emissions, squared adds N(0, noise^2) to phi_theta,
    discrete applies the output map and the null loss observes zeros.
    """
    if spec.kind is LossKind.NEG_LOG_DENSITY:
        return emit(hidden, spec, theta, seed)
    x = hidden.symbols
    if spec.kind is LossKind.SQUARED:
        rng = make_rng(seed, STREAM_EMISSION)
        values = spec.phi[theta][x] + noise * rng.standard_normal(len(x))
    elif spec.kind is LossKind.DISCRETE:
        values = spec.output_map[x].copy()
    else:
        values = np.zeros(len(x))
    return EmissionSequence(
        values=values, seed=int(seed), source=hidden.source, hidden=hidden, theta_star=theta
    )


def _logistic_binarized(n: int, seed: int, params: Mapping[str, Any]) -> Trajectory:
    a = float(params.get("a", 3.9))
    burn_in = int(params.get("burn_in", 100))
    rng = make_rng(seed, STREAM_SOURCE)
    x = float(rng.uniform(0.05, 0.95))
    for _ in range(burn_in):
        x = a * x * (1.0 - x)
    symbols = []
    for _ in range(n):
        symbols.append(1 if x > 0.5 else 0)
        x = a * x * (1.0 - x)
    return Trajectory(symbols=np.array(symbols, dtype=np.int64), seed=int(seed), source="logistic_binarized")


def _periodic_noise(n: int, seed: int, params: Mapping[str, Any]) -> EmissionSequence:
    period = int(params.get("period", 2))
    if period < 1:
        raise DomainError(f"period must be >= 1, got {period}")
    pattern = np.asarray(params.get("pattern", [k % 2 for k in range(period)]), dtype=float)
    if len(pattern) != period:
        raise DomainError(f"pattern has {len(pattern)} entries for period {period}")
    jitter = float(params.get("jitter", 0.1))
    values = pattern[np.arange(n) % period]
    if jitter > 0:
        values = values + jitter * make_rng(seed, STREAM_SOURCE).standard_normal(n)
    return EmissionSequence(values=values, seed=int(seed), source="periodic_noise")


MISSPECIFIED_GENERATORS: Dict[str, Callable[[int, int, Mapping[str, Any]], Observations]] = {
    "logistic_binarized": _logistic_binarized,
    "periodic_noise": _periodic_noise,
}


def misspecified_source(
    name: str, n: int, seed: int, params: Optional[Mapping[str, Any]] = None
) -> Observations:
    """Ergodic observation process outside the model class

    logistic_binarized: x_{k+1} = a x_k (1 - x_k) with a = 3.9, symbol 1{x_k > 1/2}
    periodic_noise: period-p pattern plus Gaussian jitter

    Raises:
        UnknownGenerator: If no generator is registered under `name`
    """
    try:
        generator = MISSPECIFIED_GENERATORS[name]
    except KeyError:
        raise UnknownGenerator(
            f"unknown generator {name!r}; available: {sorted(MISSPECIFIED_GENERATORS)}"
        )
    logger.debug("misspecified source %s: n=%d seed=%d", name, n, seed)
    return generator(int(n), int(seed), dict(params or {}))


def empirical_word_frequencies(symbols: np.ndarray, m: int, alphabet_size: int) -> np.ndarray:
    """Relative frequency of every base-|A| word code of length m along a path"""
    codes = sliding_codes(symbols, m, alphabet_size)
    counts = np.bincount(codes, minlength=alphabet_size ** m)
    return counts / max(len(codes), 1)
