"""Erasure channels: iid memoryless, explicit pattern tables, Gilbert-Elliott.

A channel only decides *which* positions are erased; the erasure law never
looks at the transmitted symbols, and unerased positions are copied through
untouched.  The erasure mark is carried out of band as a boolean mask, so
every field value remains a legal symbol.

Pattern indexing: the pattern with bits ``e_0 e_1 ... e_{N-1}`` has index
``int("e_0 e_1 ... e_{N-1}", 2)``, i.e. position 0 is the most significant
bit.  ``Table`` probabilities and :func:`enumerate_patterns` use this order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

MAX_ENUM_LENGTH = 20


class ChannelError(ValueError):
    pass


class LengthMismatch(ChannelError):
    pass


class TooLarge(ChannelError):
    pass


@dataclass(frozen=True)
class ErasurePattern:
    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ChannelError("erasure pattern bits must be 0 or 1")

    @classmethod
    def from_array(cls, arr) -> "ErasurePattern":
        return cls(tuple(int(b) for b in np.asarray(arr).astype(np.int64)))

    @classmethod
    def from_index(cls, index: int, n: int) -> "ErasurePattern":
        return cls(tuple((index >> (n - 1 - j)) & 1 for j in range(n)))

    @property
    def length(self) -> int:
        return len(self.bits)

    @property
    def weight(self) -> int:
        return sum(self.bits)

    @property
    def index(self) -> int:
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v

    def mask(self) -> np.ndarray:
        return np.array(self.bits, dtype=bool)

    def kept(self) -> np.ndarray:
        """Positions that arrived intact."""
        return np.flatnonzero(~self.mask())

    def __str__(self):
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class ReceivedWord:
    """Channel output; ``erased[j]`` marks the erasure symbol at position j."""

    symbols: np.ndarray
    erased: np.ndarray

    def __len__(self):
        return len(self.symbols)

    def values(self) -> list:
        """Symbols with ``None`` standing in for the erasure mark."""
        return [None if e else int(s) for s, e in zip(self.symbols, self.erased)]

    def pattern(self) -> ErasurePattern:
        return ErasurePattern.from_array(self.erased)


Prob = Union[float, Fraction]


def _check_prob(name: str, value) -> None:
    if not 0 <= value <= 1:
        raise ChannelError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class Memoryless:
    """Each symbol erased independently with probability ``pi``.

    Passing ``pi`` as a :class:`~fractions.Fraction` makes every pattern
    probability an exact rational.
    """

    pi: Prob

    def __post_init__(self):
        _check_prob("pi", self.pi)

    @property
    def exact(self) -> bool:
        return isinstance(self.pi, Fraction)

    def sample(self, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random((count, n)) < float(self.pi)

    def pattern_prob(self, e: ErasurePattern) -> Prob:
        m = e.weight
        return self.pi**m * (1 - self.pi) ** (e.length - m)

    def pattern_probs(self, n: int) -> np.ndarray:
        w = _weights(n)
        pi = float(self.pi)
        return pi**w * (1.0 - pi) ** (n - w)

    def describe(self) -> str:
        return f"memoryless:pi={float(self.pi):g}"


@dataclass(frozen=True)
class Table:
    """Arbitrary law over the 2^n patterns of a fixed length n."""

    n: int
    probabilities: tuple

    def __post_init__(self):
        if len(self.probabilities) != 2**self.n:
            raise ChannelError(f"table needs {2**self.n} entries, got {len(self.probabilities)}")
        for pr in self.probabilities:
            _check_prob("table entry", pr)
        total = sum(self.probabilities)
        if abs(float(total) - 1.0) > 1e-12:
            raise ChannelError(f"table probabilities sum to {float(total)!r}, not 1")

    @property
    def exact(self) -> bool:
        return all(isinstance(p, (Fraction, int)) for p in self.probabilities)

    def _check_len(self, n: int) -> None:
        if n != self.n:
            raise LengthMismatch(f"table channel has length {self.n}, got {n}")

    def sample(self, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
        self._check_len(n)
        p = np.array([float(x) for x in self.probabilities])
        idx = rng.choice(p.size, size=count, p=p / p.sum())
        return _index_bits(idx, n)

    def pattern_prob(self, e: ErasurePattern) -> Prob:
        self._check_len(e.length)
        return self.probabilities[e.index]

    def pattern_probs(self, n: int) -> np.ndarray:
        self._check_len(n)
        return np.array([float(x) for x in self.probabilities])

    def describe(self) -> str:
        return f"table:n={self.n}"


@dataclass(frozen=True)
class GilbertElliott:
    """Two-state Markov erasure process started in its stationary law.

    ``p_gb`` / ``p_bg`` are the good->bad and bad->good transition
    probabilities; ``pi_good`` / ``pi_bad`` the per-state erasure
    probabilities.
    """

    p_gb: float
    p_bg: float
    pi_good: float
    pi_bad: float

    def __post_init__(self):
        for name in ("p_gb", "p_bg", "pi_good", "pi_bad"):
            _check_prob(name, getattr(self, name))
        if self.p_gb + self.p_bg == 0:
            raise ChannelError("p_gb + p_bg must be positive for a stationary law")

    exact = False

    @property
    def stationary_bad(self) -> float:
        return self.p_gb / (self.p_gb + self.p_bg)

    @property
    def mean_erasure_rate(self) -> float:
        b = self.stationary_bad
        return (1 - b) * self.pi_good + b * self.pi_bad

    def sample(self, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
        u_state = rng.random((count, n))
        u_erase = rng.random((count, n))
        bad = u_state[:, 0] < self.stationary_bad
        out = np.empty((count, n), dtype=bool)
        for j in range(n):
            if j:
                bad = np.where(bad, u_state[:, j] >= self.p_bg, u_state[:, j] < self.p_gb)
            out[:, j] = u_erase[:, j] < np.where(bad, self.pi_bad, self.pi_good)
        return out

    def pattern_prob(self, e: ErasurePattern) -> float:
        if e.length > MAX_ENUM_LENGTH:
            raise TooLarge(f"exact Gilbert-Elliott probabilities need N <= {MAX_ENUM_LENGTH}")
        trans = np.array([[1 - self.p_gb, self.p_gb], [self.p_bg, 1 - self.p_bg]])
        erase = np.array([self.pi_good, self.pi_bad])
        alpha = np.array([1 - self.stationary_bad, self.stationary_bad])
        for j, bit in enumerate(e.bits):
            if j:
                alpha = alpha @ trans
            alpha = alpha * (erase if bit else 1 - erase)
        return float(alpha.sum())

    def pattern_probs(self, n: int) -> np.ndarray:
        if n > MAX_ENUM_LENGTH:
            raise TooLarge(f"exact Gilbert-Elliott probabilities need N <= {MAX_ENUM_LENGTH}")
        # forward pass over all patterns at once, one position per step
        trans = np.array([[1 - self.p_gb, self.p_gb], [self.p_bg, 1 - self.p_bg]])
        erase = np.array([self.pi_good, self.pi_bad])
        alpha = np.array([[1 - self.stationary_bad, self.stationary_bad]])
        for j in range(n):
            if j:
                alpha = alpha @ trans
            alpha = np.concatenate([alpha * (1 - erase), alpha * erase])
            # index order: bit j becomes the next less-significant bit
            alpha = alpha.reshape(2, -1, 2).transpose(1, 0, 2).reshape(-1, 2)
        return alpha.sum(axis=1)

    def describe(self) -> str:
        return (f"ge:pgb={self.p_gb:g},pbg={self.p_bg:g},"
                f"pig={self.pi_good:g},pib={self.pi_bad:g}")


ChannelSpec = Union[Memoryless, Table, GilbertElliott]


def _weights(n: int) -> np.ndarray:
    idx = np.arange(2**n, dtype=np.int64)
    w = np.zeros_like(idx)
    for j in range(n):
        w += (idx >> j) & 1
    return w


def _index_bits(idx, n: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(bool)


def transmit(x, ch: ChannelSpec, rng: np.random.Generator) -> tuple[ReceivedWord, ErasurePattern]:
    """Send one codeword; the erasure draw never depends on ``x``."""
    x = np.asarray(x, dtype=np.int64)
    mask = ch.sample(len(x), 1, rng)[0]
    y = ReceivedWord(np.where(mask, 0, x), mask)
    return y, ErasurePattern.from_array(mask)


def pattern_prob(e: ErasurePattern, ch: ChannelSpec) -> Prob:
    return ch.pattern_prob(e)


def enumerate_patterns(n: int, ch: ChannelSpec, exact: bool = False):
    """All 2^n patterns as a (2^n, n) bool array, plus their probabilities.

    With ``exact=True`` the probabilities come back as a list of whatever
    exact type the channel produces (Fractions for rational ``pi``);
    otherwise as a float array.
    """
    if n > MAX_ENUM_LENGTH:
        raise TooLarge(f"pattern enumeration limited to N <= {MAX_ENUM_LENGTH}")
    patterns = _index_bits(np.arange(2**n), n)
    if exact:
        probs = [ch.pattern_prob(ErasurePattern.from_index(i, n)) for i in range(2**n)]
    else:
        probs = ch.pattern_probs(n)
    return patterns, probs


def full_support(n: int, ch: ChannelSpec) -> bool:
    """True when every erasure pattern of length n has positive probability."""
    _, probs = enumerate_patterns(n, ch)
    return bool(np.all(np.asarray(probs, dtype=float) > 0))


def parse_channel(text: str) -> ChannelSpec:
    """Parse ``memoryless:pi=0.015`` or ``ge:pgb=..,pbg=..,pig=..,pib=..``."""
    kind, _, rest = text.partition(":")
    kw = {}
    for item in filter(None, rest.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise ChannelError(f"malformed channel parameter {item!r}")
        kw[key.strip()] = val.strip()
    kind = kind.strip().lower()
    try:
        if kind in ("memoryless", "iid", "bec"):
            ch: ChannelSpec = Memoryless(_parse_prob(kw.pop("pi")))
        elif kind in ("ge", "gilbert-elliott", "gilbert_elliott"):
            ch = GilbertElliott(float(kw.pop("pgb")), float(kw.pop("pbg")),
                                float(kw.pop("pig")), float(kw.pop("pib")))
        else:
            raise ChannelError(f"unknown channel kind {kind!r}")
    except KeyError as exc:
        raise ChannelError(f"channel {kind!r} is missing parameter {exc.args[0]!r}") from None
    if kw:
        raise ChannelError(f"unknown channel parameters {sorted(kw)}")
    return ch


def _parse_prob(text: str) -> Prob:
    if "/" in text:
        return Fraction(text)
    val = float(text)
    if math.isnan(val):
        raise ChannelError("probability is NaN")
    return val
