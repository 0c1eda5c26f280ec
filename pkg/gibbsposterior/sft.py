"""
Shifts of finite type for gibbsposterior
Block presentation, pruning to the maximal subshift, mixing check and word enumeration
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from .errors import DomainError, EmptyShift, NotMixing, ResourceLimit
from .utils import Word, WordLike, format_word, parse_word, sliding_codes, word_codes

logger = logging.getLogger(__name__)

DEFAULT_WORD_CAP = 2 ** 26
MAX_CANDIDATE_WORDS = 2 ** 24


@dataclass(frozen=True, eq=False)
class Sft:
    """Mixing shift of finite type presented as a first-order chain on blocks

    Attributes:
        alphabet_size: Number of symbols |A|
        order: Length of the forbidden words (0 for the full shift)
        forbidden: Forbidden words, all of length `order`
        block_len: Markov memory of the block chain, max(order - 1, 1) unless re-blocked
        blocks: Surviving admissible blocks in lexicographic order; position is the index
        transition: Boolean block transition matrix
        mixing_index: Least N with transition^N entrywise positive, None if not mixing
    """

    alphabet_size: int
    order: int
    forbidden: FrozenSet[Word]
    block_len: int
    blocks: Tuple[Word, ...]
    transition: np.ndarray
    mixing_index: Optional[int] = None

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def is_mixing(self) -> bool:
        return self.mixing_index is not None

    @cached_property
    def block_index(self) -> Dict[Word, int]:
        return {block: i for i, block in enumerate(self.blocks)}

    @cached_property
    def block_array(self) -> np.ndarray:
        return np.array(self.blocks, dtype=np.int64).reshape(self.n_blocks, self.block_len)

    @cached_property
    def leading_symbols(self) -> np.ndarray:
        return self.block_array[:, 0].copy()

    @cached_property
    def code_to_block(self) -> np.ndarray:
        """Dense map from base-|A| block code to block index (-1 if not a block)"""
        table = np.full(self.alphabet_size ** self.block_len, -1, dtype=np.int64)
        table[word_codes(self.block_array, self.alphabet_size)] = np.arange(self.n_blocks)
        return table

    @cached_property
    def successors(self) -> np.ndarray:
        """successors[u, s] is the block reached from u by appending symbol s, or -1"""
        size = self.alphabet_size
        shifted = self.block_array[:, 1:]
        table = np.full((self.n_blocks, size), -1, dtype=np.int64)
        for s in range(size):
            words = np.hstack([shifted, np.full((self.n_blocks, 1), s, dtype=np.int64)])
            targets = self.code_to_block[word_codes(words, size)]
            ok = targets >= 0
            ok[ok] = self.transition[np.nonzero(ok)[0], targets[ok]]
            table[ok, s] = targets[ok]
        return table

    def index(self, block: WordLike) -> int:
        """Index of an admissible block"""
        key = parse_word(block)
        if key not in self.block_index:
            raise DomainError(f"{format_word(key)!r} is not an admissible block")
        return self.block_index[key]

    def block(self, i: int) -> Word:
        return self.blocks[i]

    def same_shift(self, other: "Sft") -> bool:
        """True when both presentations forbid the same words"""
        if self.alphabet_size != other.alphabet_size:
            return False
        if self.forbidden == other.forbidden:
            return True
        length = max(self.order, other.order)
        return _pad_words(self.forbidden, self.alphabet_size, length) == _pad_words(
            other.forbidden, other.alphabet_size, length
        )

    def blocks_of(self, symbols: np.ndarray) -> np.ndarray:
        """Block index sequence of a symbol path (-1 where a window is not a block)"""
        codes = sliding_codes(symbols, self.block_len, self.alphabet_size)
        return self.code_to_block[codes]

    def describe(self) -> str:
        words = ",".join(sorted(format_word(w) for w in self.forbidden)) or "-"
        return (
            f"SFT |A|={self.alphabet_size} order={self.order} forbidden={{{words}}} "
            f"blocks={self.n_blocks} block_len={self.block_len} "
            f"mixing={self.is_mixing} N={self.mixing_index}"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alphabet_size": self.alphabet_size,
            "forbidden": sorted(format_word(w) for w in self.forbidden),
        }


def _pad_words(words: Iterable[Word], alphabet_size: int, length: int) -> FrozenSet[Word]:
    """All words of `length` that contain at least one of `words`"""
    words = list(words)
    if not words:
        return frozenset()
    padded = set()
    for word in words:
        extra = length - len(word)
        for offset in range(extra + 1):
            for left in itertools.product(range(alphabet_size), repeat=offset):
                for right in itertools.product(range(alphabet_size), repeat=extra - offset):
                    padded.add(left + word + right)
    return frozenset(padded)


def build_sft(
    alphabet_size: int,
    forbidden: Iterable[WordLike] = (),
    *,
    block_len: Optional[int] = None,
    require_mixing: bool = True,
) -> Sft:
    """Build the block presentation of the shift avoiding `forbidden`

    Args:
        alphabet_size: Number of symbols, at least 2
        forbidden: Forbidden words as digit strings or integer sequences; shorter words
            are expanded to every word of the maximal length containing them
        block_len: Optional longer block length (re-blocking); defaults to max(order - 1, 1)
        require_mixing: Raise NotMixing when the pruned shift is not mixing

    Returns:
        Pruned Sft with its mixing index

    Raises:
        DomainError: If the alphabet or a word is invalid
        EmptyShift: If pruning removes every block
        NotMixing: If require_mixing and no power of the transition matrix is positive
        ResourceLimit: If the candidate word space is too large
    """
    if int(alphabet_size) < 2:
        raise DomainError(f"alphabet_size must be >= 2, got {alphabet_size}")
    alphabet_size = int(alphabet_size)

    words = {parse_word(w) for w in forbidden}
    for word in words:
        if not word:
            raise DomainError("forbidden words must have length >= 1")
        if max(word) >= alphabet_size or min(word) < 0:
            raise DomainError(f"forbidden word {format_word(word)!r} leaves the alphabet")

    order = max((len(w) for w in words), default=0)
    minimal_len = max(order - 1, 1)
    if block_len is None:
        block_len = minimal_len
    elif block_len < minimal_len:
        raise DomainError(f"block_len {block_len} is shorter than the minimum {minimal_len}")

    if alphabet_size ** (block_len + 1) > MAX_CANDIDATE_WORDS:
        raise ResourceLimit(
            f"{alphabet_size}^{block_len + 1} candidate transitions exceed {MAX_CANDIDATE_WORDS}"
        )

    padded = _pad_words(words, alphabet_size, order)
    transition_words = np.array(
        list(itertools.product(range(alphabet_size), repeat=block_len + 1)), dtype=np.int64
    )
    allowed = np.ones(len(transition_words), dtype=bool)
    if padded:
        bad_codes = np.array(sorted(word_codes(np.array(sorted(padded)), alphabet_size)))
        for start in range(block_len + 2 - order):
            window = word_codes(transition_words[:, start:start + order], alphabet_size)
            allowed &= ~np.isin(window, bad_codes)

    n_candidates = alphabet_size ** block_len
    matrix = np.zeros((n_candidates, n_candidates), dtype=bool)
    codes = np.arange(len(transition_words))[allowed]
    matrix[codes // alphabet_size, codes % n_candidates] = True

    alive = np.arange(n_candidates)
    while True:
        sub = matrix[np.ix_(alive, alive)]
        keep = sub.any(axis=1) & sub.any(axis=0)
        if keep.all():
            break
        alive = alive[keep]
        if alive.size == 0:
            break
    if alive.size == 0:
        raise EmptyShift(
            f"forbidden words {sorted(format_word(w) for w in words)} leave no admissible point"
        )

    candidates = list(itertools.product(range(alphabet_size), repeat=block_len))
    transition = matrix[np.ix_(alive, alive)].copy()
    transition.setflags(write=False)
    sft = Sft(
        alphabet_size=alphabet_size,
        order=order,
        forbidden=padded,
        block_len=block_len,
        blocks=tuple(candidates[i] for i in alive),
        transition=transition,
        mixing_index=_primitivity_index(transition),
    )
    logger.debug("built %s", sft.describe())
    if require_mixing and not sft.is_mixing:
        raise NotMixing(f"{sft.describe()} is not mixing")
    return sft


def _primitivity_index(transition: np.ndarray) -> Optional[int]:
    # Wielandt: a primitive B x B matrix has a positive power at or before B^2 - 2B + 2.
    size = transition.shape[0]
    bound = max(size * size - 2 * size + 2, 1)
    base = transition.astype(np.int64)
    power = base.copy()
    for n in range(1, bound + 1):
        if power.all():
            return n
        power = ((power @ base) > 0).astype(np.int64)
    return None


def is_mixing(sft: Sft) -> Tuple[bool, Optional[int]]:
    """Least N with transition^N entrywise positive, or (False, None)"""
    index = _primitivity_index(sft.transition)
    return index is not None, index


def reblock(sft: Sft, block_len: int) -> Sft:
    """Same shift presented with longer blocks"""
    if block_len == sft.block_len:
        return sft
    return build_sft(
        sft.alphabet_size,
        sft.forbidden,
        block_len=block_len,
        require_mixing=sft.is_mixing,
    )


def word_array(sft: Sft, m: int, cap: int = DEFAULT_WORD_CAP) -> np.ndarray:
    """All admissible words of length m as a lexicographically sorted (count, m) array"""
    if m < 1:
        raise DomainError(f"word length must be >= 1, got {m}")
    if sft.alphabet_size ** m > cap:
        raise ResourceLimit(f"{sft.alphabet_size}^{m} candidate words exceed the cap {cap}")

    blocks = sft.block_array
    if m <= sft.block_len:
        return np.unique(blocks[:, :m], axis=0)

    size = sft.alphabet_size
    words = blocks
    last = np.arange(sft.n_blocks)
    symbols = np.arange(size, dtype=np.int64)
    for _ in range(m - sft.block_len):
        nxt = sft.successors[last]
        mask = (nxt >= 0).ravel()
        words = np.hstack(
            [np.repeat(words, size, axis=0)[mask], np.tile(symbols, len(last))[mask, None]]
        )
        last = nxt.ravel()[mask]
    return words


def enumerate_words(sft: Sft, m: int, cap: int = DEFAULT_WORD_CAP) -> List[Word]:
    """Lexicographically ordered admissible words of length m"""
    return [tuple(int(s) for s in row) for row in word_array(sft, m, cap)]


def count_words(sft: Sft, m: int) -> int:
    """|L_m| computed exactly from powers of the transition matrix"""
    if m < 1:
        raise DomainError(f"word length must be >= 1, got {m}")
    if m <= sft.block_len:
        return len(np.unique(sft.block_array[:, :m], axis=0))
    matrix = sft.transition.astype(object) * 1
    vector = np.ones(sft.n_blocks, dtype=object)
    for _ in range(m - sft.block_len):
        vector = matrix @ vector
    return int(sum(vector))


def topological_entropy(sft: Sft) -> float:
    """log of the Perron eigenvalue of the transition matrix"""
    eigenvalues = np.linalg.eigvals(sft.transition.astype(float))
    return float(np.log(np.max(np.abs(eigenvalues))))


def sft_from_dict(data: Mapping[str, Any], require_mixing: bool = True) -> Sft:
    """Build an Sft from its file form {"alphabet_size": int, "forbidden": [...]}"""
    return build_sft(
        int(data["alphabet_size"]),
        data.get("forbidden", []),
        block_len=data.get("block_len"),
        require_mixing=require_mixing,
    )
