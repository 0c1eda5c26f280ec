"""
Thermodynamic formalism for finite-range potentials
Transfer matrices, Gibbs measures, entropy, cylinder probabilities, Gibbs-constant
audits and divergence rates of block-Markov measures
"""

import dataclasses
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.special import entr

from .errors import DomainError, NoConvergence, NonFinite, NotMixing, ResourceLimit, ShapeMismatch
from .sft import Sft, count_words, reblock, word_array
from .utils import WordLike, format_word, parse_word, sliding_codes, word_codes

logger = logging.getLogger(__name__)

POWER_TOLERANCE = 1e-13
POWER_MAX_ITER = 100_000
AUDIT_WORD_CAP = 2 ** 22
STOCHASTIC_TOL = 1e-12
STATIONARY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Potential:
    """Locally constant potential f(x) = values[x_0 ... x_{range-1}]

    `values` is dense over every base-|A| word code of length `range`; entries for
    inadmissible words are NaN and never read.
    """

    sft: Sft
    range: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.range < 1:
            raise DomainError(f"potential range must be >= 1, got {self.range}")
        expected = self.sft.alphabet_size ** self.range
        if self.values.shape != (expected,):
            raise ShapeMismatch(f"potential table has shape {self.values.shape}, expected ({expected},)")
        admissible = self.evaluate(self.words)
        if not np.all(np.isfinite(admissible)):
            bad = self.words[~np.isfinite(admissible)][0]
            raise NonFinite(f"potential is not finite on admissible word {format_word(bad)!r}")

    @classmethod
    def from_table(cls, sft: Sft, range: int, table: Mapping[WordLike, float]) -> "Potential":
        """Potential from a {word: value} mapping covering every admissible range-word"""
        values = np.full(sft.alphabet_size ** range, np.nan)
        for word, value in table.items():
            key = parse_word(word)
            if len(key) != range:
                raise ShapeMismatch(f"word {format_word(key)!r} does not have length {range}")
            if max(key, default=0) >= sft.alphabet_size:
                raise DomainError(
                    f"word {format_word(key)!r} uses a symbol outside the {sft.alphabet_size}-letter alphabet"
                )
            try:
                values[word_codes(np.array([key]), sft.alphabet_size)[0]] = float(value)
            except (TypeError, ValueError):
                raise DomainError(f"value {value!r} for word {format_word(key)!r} is not a number")
        return cls(sft=sft, range=range, values=values)

    @classmethod
    def constant(cls, sft: Sft, value: float, range: int = 1) -> "Potential":
        return cls(sft=sft, range=range, values=np.full(sft.alphabet_size ** range, float(value)))

    @cached_property
    def words(self) -> np.ndarray:
        return word_array(self.sft, self.range)

    @property
    def table(self) -> Dict[str, float]:
        return {format_word(w): float(v) for w, v in zip(self.words, self.evaluate(self.words))}

    def evaluate(self, words: np.ndarray) -> np.ndarray:
        """f on each row of a (count, range) word array"""
        return self.values[word_codes(words, self.sft.alphabet_size)]

    def path_values(self, symbols: np.ndarray) -> np.ndarray:
        """f on every full window of a symbol path (length n - range + 1)"""
        return self.values[sliding_codes(symbols, self.range, self.sft.alphabet_size)]

    def birkhoff_sums(self, words: np.ndarray) -> np.ndarray:
        """Sum of f over the full windows inside each row of a (count, m) word array"""
        words = np.asarray(words, dtype=np.int64)
        if words.shape[1] < self.range:
            return np.zeros(words.shape[0])
        windows = np.lib.stride_tricks.sliding_window_view(words, self.range, axis=1)
        weights = self.sft.alphabet_size ** np.arange(self.range - 1, -1, -1, dtype=np.int64)
        return self.values[windows @ weights].sum(axis=1)

    def shifted(self, offset: float) -> "Potential":
        return dataclasses.replace(self, values=self.values + offset)

    def rebound(self, sft: Sft) -> "Potential":
        """Same table on another presentation of the same shift"""
        if not sft.same_shift(self.sft):
            raise ShapeMismatch("potential and target SFT describe different shifts")
        return dataclasses.replace(self, sft=sft)

    def sup_distance(self, other: "Potential") -> float:
        _check_compatible(self, other)
        return float(np.max(np.abs(self.evaluate(self.words) - other.evaluate(self.words))))

    def interpolate(self, other: "Potential", t: float) -> "Potential":
        """(1 - t) * self + t * other"""
        _check_compatible(self, other)
        return dataclasses.replace(self, values=(1.0 - t) * self.values + t * other.values)


def _check_compatible(a: Potential, b: Potential) -> None:
    if a.range != b.range or not a.sft.same_shift(b.sft):
        raise ShapeMismatch(
            f"potentials differ in shift or range ({a.range} vs {b.range})"
        )


@dataclass(eq=False)
class MarkovMeasure:
    """Shift-invariant block-Markov measure: stationary law and kernel over blocks"""

    sft: Sft
    stationary: np.ndarray
    kernel: np.ndarray

    def __post_init__(self) -> None:
        size = self.sft.n_blocks
        if self.kernel.shape != (size, size) or self.stationary.shape != (size,):
            raise ShapeMismatch(f"measure arrays do not match {size} blocks")
        if np.any(self.kernel[~self.sft.transition] != 0):
            raise DomainError("kernel charges a forbidden block transition")
        if np.any(self.kernel < 0) or np.any(np.abs(self.kernel.sum(axis=1) - 1) > STOCHASTIC_TOL):
            raise DomainError("kernel is not row-stochastic")
        if np.any(self.stationary < 0) or abs(self.stationary.sum() - 1) > STOCHASTIC_TOL:
            raise DomainError("stationary vector is not a probability vector")
        if np.max(np.abs(self.stationary @ self.kernel - self.stationary)) > STATIONARY_TOL:
            raise DomainError("stationary vector is not invariant under the kernel")

    @cached_property
    def log_kernel(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.kernel)

    @cached_property
    def log_stationary(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.stationary)


@dataclass(eq=False)
class GibbsModel(MarkovMeasure):
    """Computable form of the Gibbs measure of a potential

    Attributes:
        potential: The potential the measure is Gibbs for (bound to `sft`)
        pressure: P(f) in nats per step, log(lambda_max)
        lambda_max: Perron eigenvalue of the transfer matrix
        right_vec: Right Perron vector, sums to 1
        left_vec: Left Perron vector, scaled so that left_vec . right_vec = 1
        gibbs_K: Gibbs constant from the last audit, None until audited
    """

    potential: Optional[Potential] = None
    pressure: float = 0.0
    lambda_max: float = 1.0
    right_vec: Optional[np.ndarray] = None
    left_vec: Optional[np.ndarray] = None
    gibbs_K: Optional[float] = None


def transfer_matrix(sft: Sft, potential: Potential) -> np.ndarray:
    """Matrix with entries A[u, v] * exp(f(w_uv)) over blocks

    w_uv is block u followed by the last symbol of v; f reads its last `range` symbols.
    """
    return np.exp(_log_transfer(sft, potential))


def _log_transfer(sft: Sft, potential: Potential) -> np.ndarray:
    if potential.range > sft.block_len + 1:
        raise ShapeMismatch(
            f"potential range {potential.range} exceeds block_len + 1 = {sft.block_len + 1}; re-block first"
        )
    if not sft.same_shift(potential.sft):
        raise ShapeMismatch("potential is defined on a different shift")
    size = sft.alphabet_size
    block_codes = word_codes(sft.block_array, size)
    last = sft.block_array[:, -1]
    joined = block_codes[:, None] * size + last[None, :]
    values = potential.values[joined % size ** potential.range]
    return np.where(sft.transition, values, -np.inf)


def _perron(matrix: np.ndarray, tol: float, max_iter: int) -> Tuple[float, np.ndarray]:
    # Power iteration from the all-ones vector; the Rayleigh quotient and the iterate
    # must both settle to relative tolerance `tol`.
    x = np.full(matrix.shape[0], 1.0 / matrix.shape[0])
    lam = 0.0
    for iteration in range(1, max_iter + 1):
        y = matrix @ x
        lam_new = float(x @ y) / float(x @ x)
        x_new = y / y.sum()
        settled = abs(lam_new - lam) <= tol * lam_new and np.max(np.abs(x_new - x)) <= tol * np.max(x_new)
        x, lam = x_new, lam_new
        if settled:
            logger.debug("power iteration converged in %d steps, lambda=%.15g", iteration, lam)
            return lam, x
    residual = float(np.linalg.norm(matrix @ x - lam * x) / max(lam, 1e-300))
    raise NoConvergence(f"power iteration did not converge in {max_iter} steps", residual)


def solve_gibbs(
    sft: Sft,
    potential: Potential,
    tol: float = POWER_TOLERANCE,
    max_iter: int = POWER_MAX_ITER,
) -> GibbsModel:
    """Gibbs measure of `potential` on a mixing SFT from the Perron data of its transfer matrix

    Potentials whose range exceeds block_len + 1 are solved on a re-blocked presentation;
    the returned model then lives on that presentation.

    Raises:
        NotMixing: If the SFT is not mixing
        NoConvergence: If power iteration stalls
    """
    if not sft.is_mixing:
        raise NotMixing(f"{sft.describe()} is not mixing; the Gibbs measure is not unique")
    if potential.range > sft.block_len + 1:
        sft = reblock(sft, potential.range - 1)
    potential = potential if potential.sft is sft else potential.rebound(sft)

    log_weights = _log_transfer(sft, potential)
    offset = float(np.max(log_weights[sft.transition]))
    matrix = np.exp(log_weights - offset)

    lam, right = _perron(matrix, tol, max_iter)
    _, left = _perron(matrix.T, tol, max_iter)
    left = left / float(left @ right)

    kernel = matrix * right[None, :] / (lam * right[:, None])
    kernel /= kernel.sum(axis=1, keepdims=True)
    stationary = left * right
    stationary /= stationary.sum()

    lambda_max = lam * float(np.exp(offset))
    return GibbsModel(
        sft=sft,
        stationary=stationary,
        kernel=kernel,
        potential=potential,
        pressure=float(np.log(lambda_max)),
        lambda_max=lambda_max,
        right_vec=right,
        left_vec=left,
    )


def markov_measure_from_kernel(
    sft: Sft, kernel: np.ndarray, tol: float = POWER_TOLERANCE
) -> MarkovMeasure:
    """Stationary block-Markov measure of a row-stochastic kernel supported on the SFT"""
    kernel = np.asarray(kernel, dtype=float)
    if kernel.shape != sft.transition.shape:
        raise ShapeMismatch(f"kernel shape {kernel.shape} does not match {sft.transition.shape}")
    kernel = kernel / kernel.sum(axis=1, keepdims=True)
    _, stationary = _perron(kernel.T, tol, POWER_MAX_ITER)
    return MarkovMeasure(sft=sft, stationary=stationary / stationary.sum(), kernel=kernel)


def perturbed_measure(
    measure: MarkovMeasure, rng: np.random.Generator, scale: float = 0.5
) -> MarkovMeasure:
    """Random kernel on the same support: log-normal multiplicative noise, renormalized"""
    noise = np.exp(scale * rng.standard_normal(measure.kernel.shape))
    kernel = np.where(measure.sft.transition, measure.kernel * noise, 0.0)
    return markov_measure_from_kernel(measure.sft, kernel)


def log_cylinder_probs(measure: MarkovMeasure, words: np.ndarray) -> np.ndarray:
    """log mu([w]) for each row of a (count, m) word array; -inf for inadmissible words"""
    words = np.asarray(words, dtype=np.int64)
    sft = measure.sft
    count, m = words.shape
    if m < sft.block_len:
        prefix_mass = np.zeros(sft.alphabet_size ** m)
        np.add.at(prefix_mass, word_codes(sft.block_array[:, :m], sft.alphabet_size), measure.stationary)
        with np.errstate(divide="ignore"):
            return np.log(prefix_mass[word_codes(words, sft.alphabet_size)])

    windows = np.lib.stride_tricks.sliding_window_view(words, sft.block_len, axis=1)
    weights = sft.alphabet_size ** np.arange(sft.block_len - 1, -1, -1, dtype=np.int64)
    path = sft.code_to_block[windows @ weights]
    valid = np.all(path >= 0, axis=1)
    safe = np.where(path >= 0, path, 0)
    logp = measure.log_stationary[safe[:, 0]]
    if path.shape[1] > 1:
        logp = logp + measure.log_kernel[safe[:, :-1], safe[:, 1:]].sum(axis=1)
    return np.where(valid, logp, -np.inf)


def log_cylinder_prob(measure: MarkovMeasure, word: WordLike) -> float:
    """log mu([word]); words shorter than block_len are summed over their completions"""
    key = parse_word(word)
    if not key:
        return 0.0
    if max(key) >= measure.sft.alphabet_size:
        return float("-inf")
    return float(log_cylinder_probs(measure, np.array([key]))[0])


def cylinder_prob(measure: MarkovMeasure, word: WordLike) -> float:
    return float(np.exp(log_cylinder_prob(measure, word)))


def entropy(measure: MarkovMeasure) -> float:
    """Kolmogorov-Sinai entropy -sum_u pi(u) sum_v Q(u,v) log Q(u,v)"""
    return float(measure.stationary @ entr(measure.kernel).sum(axis=1))


def expectation(potential: Potential, measure: MarkovMeasure) -> float:
    """Integral of f against the measure, summed over admissible range-words"""
    if not potential.sft.same_shift(measure.sft):
        raise ShapeMismatch("potential and measure live on different shifts")
    words = word_array(measure.sft, potential.range)
    probs = np.exp(log_cylinder_probs(measure, words))
    return float(probs @ potential.evaluate(words))


@dataclass(frozen=True)
class AuditRow:
    m: int
    ratio_min: float
    ratio_max: float


@dataclass(frozen=True)
class GibbsAudit:
    """Envelope of mu(w) / exp(-P m + S_m f(w)) per word length m"""

    rows: Tuple[AuditRow, ...]
    K: float

    def K_through(self, m: int) -> float:
        """Envelope constant over lengths 1..m"""
        rows = [r for r in self.rows if r.m <= m]
        return max(max(r.ratio_max, 1.0 / r.ratio_min) for r in rows)


def gibbs_constant_audit(model: GibbsModel, m_max: int, cap: int = AUDIT_WORD_CAP) -> GibbsAudit:
    """Enumerate admissible words up to m_max and record the Gibbs ratio envelope

    The resulting K is also stored on the model as `gibbs_K`.
    """
    if m_max < 1:
        raise DomainError(f"m_max must be >= 1, got {m_max}")
    rows: List[AuditRow] = []
    for m in range(1, m_max + 1):
        if count_words(model.sft, m) > cap:
            raise ResourceLimit(f"|L_{m}| exceeds the audit cap {cap}")
        words = word_array(model.sft, m, cap=max(cap, model.sft.alphabet_size ** m))
        log_ratio = log_cylinder_probs(model, words) + model.pressure * m - model.potential.birkhoff_sums(words)
        rows.append(AuditRow(m, float(np.exp(log_ratio.min())), float(np.exp(log_ratio.max()))))
    K = max(max(r.ratio_max, 1.0 / r.ratio_min) for r in rows)
    model.gibbs_K = K
    logger.debug("Gibbs audit through m=%d: K=%.12g", m_max, K)
    return GibbsAudit(rows=tuple(rows), K=K)


def kl_rate_empirical(
    eta: MarkovMeasure, model: MarkovMeasure, n: int, cap: int = AUDIT_WORD_CAP
) -> float:
    """(1/n) KL(eta | mu) on the partition into n-cylinders; inf if eta charges a mu-null word"""
    if not eta.sft.same_shift(model.sft):
        raise ShapeMismatch("eta and the model live on different shifts")
    if count_words(model.sft, n) > cap:
        raise ResourceLimit(f"|L_{n}| exceeds the cap {cap}")
    words = word_array(model.sft, n, cap=max(cap, model.sft.alphabet_size ** n))
    log_eta = log_cylinder_probs(eta, words)
    log_mu = log_cylinder_probs(model, words)
    charged = np.isfinite(log_eta)
    if np.any(charged & ~np.isfinite(log_mu)):
        return float("inf")
    return float(np.sum(np.exp(log_eta[charged]) * (log_eta[charged] - log_mu[charged])) / n)


def kl_rate_extrapolated(eta: MarkovMeasure, model: MarkovMeasure, n: int) -> float:
    """Richardson step n r_n - (n-1) r_{n-1}, cancelling the O(1/n) term"""
    if n < 2:
        raise DomainError(f"extrapolation needs n >= 2, got {n}")
    return n * kl_rate_empirical(eta, model, n) - (n - 1) * kl_rate_empirical(eta, model, n - 1)


def divergence_rate(eta: MarkovMeasure, model: GibbsModel) -> float:
    """P(f) - h(eta) - integral f d(eta): divergence rate of eta from the Gibbs measure"""
    value = model.pressure - entropy(eta) - expectation(model.potential, eta)
    # Roundoff can leave a tiny negative value at eta = mu.
    return 0.0 if -1e-12 < value < 0.0 else value
