"""
Shared fixtures for the gibbsposterior test suite
"""

import math
from pathlib import Path

import numpy as np
import pytest

from gibbsposterior import (
    Potential,
    bernoulli_family,
    build_sft,
    enumerate_words,
    loss_path_sum,
    solve_gibbs,
)
from gibbsposterior.thermo import log_cylinder_probs
from gibbsposterior.utils import format_word

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0
BERNOULLI_GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
SAMPLE_CONFIGS = Path(__file__).resolve().parents[1] / "sample-configs"


def binary_entropy(p: float) -> float:
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def random_potential(sft, range_, rng, scale=1.0):
    """Random table over the admissible words of one length"""
    table = {format_word(w): float(scale * rng.standard_normal()) for w in enumerate_words(sft, range_)}
    return Potential.from_table(sft, range_, table)


def brute_force_log_partition(model, spec, theta, observations):
    """log of the sum over admissible x_0^{n-1} of mu([x]) exp(-sum_k l(theta, x_k, y_k))"""
    y = np.asarray(observations)
    words = np.array(enumerate_words(model.sft, len(y)), dtype=np.int64)
    logp = log_cylinder_probs(model, words)
    total = 0.0
    for word, lp in zip(words, logp):
        total += math.exp(lp - loss_path_sum(spec, theta, word, y))
    return math.log(total)


@pytest.fixture
def full_shift():
    return build_sft(2)


@pytest.fixture
def golden():
    return build_sft(2, ["11"])


@pytest.fixture
def parry(golden):
    return solve_gibbs(golden, Potential.constant(golden, 0.0))


@pytest.fixture
def bernoulli_grid():
    return bernoulli_family(BERNOULLI_GRID)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
