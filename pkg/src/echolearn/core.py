"""Bit words, preambles and bit-error accounting.

Words are plain integers in ``[0, 2**b)``; bit vectors are big-endian
(most significant bit first) and only materialised when a model needs
them or when errors are counted.
"""
from __future__ import annotations

import numpy as np

SUPPORTED_BPS = (1, 2, 3, 4)


def check_bps(b: int) -> int:
    if int(b) != b or b not in SUPPORTED_BPS:
        raise ValueError(f"bits per symbol must be one of {SUPPORTED_BPS}, got {b!r}")
    return int(b)


def make_rng(*key: int) -> np.random.Generator:
    """PCG64 generator keyed by a tuple of non-negative integers.

    ``make_rng(seed, trial)`` and ``make_rng(seed, trial, 1)`` give
    independent, platform-stable streams.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(key))))


def random_preamble(rng: np.random.Generator, n: int, b: int) -> np.ndarray:
    if n <= 0:
        raise ValueError(f"preamble length must be positive, got {n}")
    b = check_bps(b)
    return rng.integers(0, 2**b, size=n, dtype=np.int64)


def word_to_bits(words, b: int) -> np.ndarray:
    """Expand words to an ``(..., b)`` array of 0/1, MSB first."""
    words = np.asarray(words, dtype=np.int64)
    if np.any(words < 0) or np.any(words >= 2**b):
        raise ValueError(f"word out of range for {b} bits per symbol")
    shifts = np.arange(b - 1, -1, -1, dtype=np.int64)
    return ((words[..., None] >> shifts) & 1).astype(np.int64)


def bits_to_word(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    b = bits.shape[-1]
    weights = 1 << np.arange(b - 1, -1, -1, dtype=np.int64)
    return (bits * weights).sum(axis=-1)


def all_words(b: int) -> np.ndarray:
    return np.arange(2**b, dtype=np.int64)


_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def bit_errors(a, c, b: int) -> tuple[np.ndarray, int]:
    """Per-word Hamming distances between two word sequences, and their total."""
    a = np.asarray(a, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    if a.shape != c.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {c.shape}")
    per_word = _POPCOUNT[(a ^ c) & (2**b - 1)]
    return per_word, int(per_word.sum())
