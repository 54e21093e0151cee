"""Maximal-length shift-register sequences and sync-word construction.

A sync word of length N is built from an m-sequence prefix of length
floor(N/K) = 2^m - 1 (mapping sequence bit 1 to the idle symbol x(0) and bit 0
to the active symbol x(1)) followed by an all-x(1) tail. Symbols are stored as
indices: 0 = x(0), 1 = x(1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# One canonical primitive polynomial per degree, exponent tuples for
# x^m + ... + 1. Standard PRBS feedback taps (Golomb, "Shift Register
# Sequences"; also the common PRBS tap tables).
PRIMITIVE_POLYS: dict[int, tuple[int, ...]] = {
    2: (2, 1, 0),
    3: (3, 1, 0),
    4: (4, 1, 0),
    5: (5, 2, 0),
    6: (6, 1, 0),
    7: (7, 1, 0),
    8: (8, 4, 3, 2, 0),
    9: (9, 4, 0),
    10: (10, 3, 0),
    11: (11, 2, 0),
    12: (12, 6, 4, 1, 0),
    13: (13, 4, 3, 1, 0),
    14: (14, 10, 6, 1, 0),
    15: (15, 1, 0),
    16: (16, 12, 3, 1, 0),
}

MIN_DEGREE = 2
MAX_DEGREE = 16


class SequenceError(ValueError):
    pass


class UnsupportedDegree(SequenceError):
    pass


class ZeroSeed(SequenceError):
    pass


class IncompatibleLength(SequenceError):
    """floor(N/K) + 1 is not a power of two (or the register would be degenerate)."""


class NoValidLength(SequenceError):
    pass


class Lfsr:
    """Fibonacci LFSR over GF(2) with a primitive feedback polynomial."""

    def __init__(self, degree: int, seed: int = 1):
        if degree not in PRIMITIVE_POLYS:
            raise UnsupportedDegree(
                f"degree must be in [{MIN_DEGREE}, {MAX_DEGREE}], got {degree}"
            )
        if not 0 < seed < (1 << degree):
            if seed == 0:
                raise ZeroSeed("the all-zero state is a fixed point")
            raise SequenceError(f"seed must be a nonzero {degree}-bit value, got {seed}")
        self.degree = degree
        self.mask = sum(1 << e for e in PRIMITIVE_POLYS[degree] if e < degree)
        self.state = seed

    def step(self) -> int:
        out = self.state & 1
        fb = bin(self.state & self.mask).count("1") & 1
        self.state = (self.state >> 1) | (fb << (self.degree - 1))
        return out

    @property
    def period(self) -> int:
        return (1 << self.degree) - 1


def generate_mlsr(m: int, seed: int = 1) -> np.ndarray:
    """One full period (2^m - 1 bits) of the degree-m maximal-length sequence."""
    reg = Lfsr(m, seed)
    return np.array([reg.step() for _ in range(reg.period)], dtype=np.int8)


@dataclass(frozen=True)
class SyncWord:
    """Binary sync word: symbols over {0 = x(0), 1 = x(1)}."""

    symbols: np.ndarray
    prefix_len: int
    k: int

    def __post_init__(self):
        sym = np.asarray(self.symbols, dtype=np.int8)
        if sym.ndim != 1 or sym.size == 0:
            raise SequenceError("word must be a non-empty 1-D symbol sequence")
        if not np.all((sym == 0) | (sym == 1)):
            raise SequenceError("word symbols must be 0 or 1")
        if not 0 <= self.prefix_len <= sym.size:
            raise SequenceError("prefix length out of range")
        sym = sym.copy()
        sym.flags.writeable = False
        object.__setattr__(self, "symbols", sym)

    def __len__(self) -> int:
        return int(self.symbols.size)

    @property
    def n(self) -> int:
        return len(self)

    def active_fraction(self) -> float:
        return float(self.symbols.mean())

    def to_line(self) -> str:
        return "".join(str(int(b)) for b in self.symbols)

    @staticmethod
    def from_line(line: str, prefix_len: int = 0, k: int = 0) -> "SyncWord":
        sym = np.array([int(c) for c in line.strip()], dtype=np.int8)
        return SyncWord(sym, prefix_len, k)


def build_sync_word(n: int, k: int, seed: int = 1) -> SyncWord:
    """Construct the word: mapped m-sequence prefix of length floor(n/k), all-x(1) tail."""
    if n < 1 or k < 1:
        raise SequenceError(f"need n >= 1 and k >= 1, got n={n}, k={k}")
    prefix = n // k
    if ((prefix + 1) & prefix) != 0 or prefix < (1 << MIN_DEGREE) - 1:
        raise IncompatibleLength(
            f"floor({n}/{k}) = {prefix} is not 2^m - 1 for any m in "
            f"[{MIN_DEGREE}, {MAX_DEGREE}]"
        )
    m = (prefix + 1).bit_length() - 1
    if m > MAX_DEGREE:
        raise IncompatibleLength(f"required register degree {m} exceeds {MAX_DEGREE}")
    bits = generate_mlsr(m, seed)
    symbols = np.ones(n, dtype=np.int8)
    symbols[:prefix] = np.where(bits == 0, 1, 0)
    return SyncWord(symbols, prefix_len=prefix, k=k)


def nearest_valid_length(n_target: int, k: int) -> int:
    """Largest N <= n_target with floor(N/k) = 2^m - 1 for some m in range."""
    if k < 1:
        raise SequenceError(f"k must be >= 1, got {k}")
    best = None
    for m in range(MIN_DEGREE, MAX_DEGREE + 1):
        prefix = (1 << m) - 1
        lo = k * prefix
        if lo > n_target:
            break
        best = min(n_target, lo + k - 1)
    if best is None:
        raise NoValidLength(
            f"no valid length <= {n_target} for k={k} (minimum is {k * 3})"
        )
    return best


def min_shift_hamming_distance(word: SyncWord) -> tuple[int, int]:
    """Minimum Hamming distance to any nonzero cyclic shift, by brute force.

    Returns (distance, smallest argmin shift). A shift-invariant word (all one
    symbol) has distance 0.
    """
    sym = word.symbols
    n = len(sym)
    if n < 2:
        raise SequenceError("word length must be >= 2")
    best, arg = n + 1, 0
    for tau in range(1, n):
        d = int(np.count_nonzero(sym != np.roll(sym, tau)))
        if d < best:
            best, arg = d, tau
    return best, arg
