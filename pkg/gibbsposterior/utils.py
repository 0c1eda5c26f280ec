"""
Small helpers shared across gibbsposterior modules
Word codec (base-36 digit strings), canonical JSON and content hashing
"""

import hashlib
import json
from typing import Any, Iterable, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_ALPHABET = len(DIGITS)

Word = Tuple[int, ...]
WordLike = Union[str, Sequence[int], np.ndarray]


def format_word(word: Iterable[int]) -> str:
    """Render a word as a base-36 digit string"""
    try:
        return "".join(DIGITS[int(s)] for s in word)
    except IndexError:
        raise DomainError(f"symbol out of base-36 range in word {list(word)!r}")


def parse_word(text: WordLike) -> Word:
    """Parse a digit string (or pass through an integer sequence) into a word tuple"""
    if isinstance(text, str):
        symbols = []
        for ch in text.strip().lower():
            index = DIGITS.find(ch)
            if index < 0:
                raise DomainError(f"invalid symbol {ch!r} in word {text!r}")
            symbols.append(index)
        return tuple(symbols)
    return tuple(int(s) for s in text)


def word_codes(words: np.ndarray, alphabet_size: int) -> np.ndarray:
    """Integer code of each row of a (count, length) word array, base alphabet_size"""
    words = np.asarray(words, dtype=np.int64)
    if words.ndim == 1:
        words = words[None, :]
    weights = alphabet_size ** np.arange(words.shape[1] - 1, -1, -1, dtype=np.int64)
    return words @ weights


def sliding_codes(symbols: np.ndarray, width: int, alphabet_size: int) -> np.ndarray:
    """Codes of every length-`width` window of a symbol sequence"""
    symbols = np.asarray(symbols, dtype=np.int64)
    if width > symbols.size:
        return np.zeros(0, dtype=np.int64)
    windows = np.lib.stride_tricks.sliding_window_view(symbols, width)
    return word_codes(windows, alphabet_size)


def canonical_json(data: Any) -> str:
    """Deterministic JSON text: sorted keys, compact separators"""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=_json_default)


def content_hash(data: Any, length: int = 12) -> str:
    """Short sha256 digest of the canonical JSON form of data"""
    digest = hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()
    return digest[:length]


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")
