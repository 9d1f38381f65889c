"""Reed-Solomon, iid random and linear random block codes over GF(q).

Codewords and messages are int64 arrays of field elements.  Explicit
codebooks store all q^K codewords as rows; row ``i`` encodes the i-th message
in lexicographic order (``b_0`` most significant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channel import ErasurePattern, ReceivedWord
from .galois import FieldSpec

MAX_CODEWORDS = 10**6
MAX_PAIRWISE = 10**4


class CodecError(ValueError):
    pass


class TooLongForField(CodecError):
    pass


class DuplicateEvalPoints(CodecError):
    pass


class TooManyErasures(CodecError):
    pass


class TooLargeToEnumerate(CodecError):
    pass


class DimensionMismatch(CodecError):
    pass


class NotEnoughSymbols(CodecError):
    pass


class RankDeficient(CodecError):
    pass


class InconsistentSystem(CodecError):
    pass


@dataclass(frozen=True)
class CodeParams:
    N: int
    K: int
    field: FieldSpec

    def __post_init__(self):
        if not 1 <= self.K < self.N:
            raise CodecError(f"need 1 <= K < N, got N={self.N}, K={self.K}")

    @property
    def q(self) -> int:
        return self.field.order

    @property
    def overhead(self) -> float:
        return (self.N - self.K) / self.N

    @property
    def rate(self) -> float:
        """Nats per channel symbol."""
        return self.K / self.N * math.log(self.q)

    @property
    def normalized_rate(self) -> float:
        return self.K / self.N

    @property
    def num_codewords(self) -> int:
        return self.q**self.K


@dataclass(frozen=True, eq=False)
class Codebook:
    params: CodeParams
    words: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        w = np.asarray(self.words, dtype=np.int64)
        if w.shape != (self.params.num_codewords, self.params.N):
            raise DimensionMismatch(
                f"codebook needs shape {(self.params.num_codewords, self.params.N)}, got {w.shape}")
        if w.size and (w.min() < 0 or w.max() >= self.params.q):
            raise CodecError("codeword symbols must be field elements")
        w.setflags(write=False)
        object.__setattr__(self, "words", w)

    def __len__(self):
        return self.words.shape[0]


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    entries: np.ndarray
    params: CodeParams

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.int64)
        if e.shape != (self.params.K, self.params.N):
            raise DimensionMismatch(f"generator must be {self.params.K}x{self.params.N}, got {e.shape}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)


def all_messages(q: int, K: int) -> np.ndarray:
    if q**K > MAX_CODEWORDS:
        raise TooLargeToEnumerate(f"q^K = {q**K} exceeds {MAX_CODEWORDS}")
    return np.indices((q,) * K).reshape(K, -1).T.astype(np.int64)


def _check_enumerable(params: CodeParams) -> None:
    if params.num_codewords > MAX_CODEWORDS:
        raise TooLargeToEnumerate(f"q^K = {params.num_codewords} exceeds {MAX_CODEWORDS}")


# --- Reed-Solomon --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReedSolomon:
    """Evaluation code: message m encodes to (f(x_0), ..., f(x_{N-1})),
    f(x) = m_0 + m_1 x + ... + m_{K-1} x^{K-1}."""

    params: CodeParams
    eval_points: np.ndarray
    generator: GeneratorMatrix

    def encode(self, message) -> np.ndarray:
        return linear_encode(message, self.generator)

    def encode_batch(self, messages, backend=None) -> np.ndarray:
        return _kernels.encode_batch(self.params.field, messages, self.generator.entries, backend)

    def codebook(self) -> Codebook:
        return linear_codebook(self.generator, label="MDS")


def vandermonde(field: FieldSpec, points, K: int) -> np.ndarray:
    points = np.asarray(points, dtype=np.int64)
    return np.stack([field.pow(points, k) for k in range(K)])


def rs_code(params: CodeParams, eval_points=None) -> ReedSolomon:
    F = params.field
    if params.N > F.order:
        raise TooLongForField(f"N={params.N} exceeds q={F.order}")
    if eval_points is None:
        pts = np.arange(params.N, dtype=np.int64)
    else:
        pts = np.asarray(eval_points, dtype=np.int64)
        if pts.shape != (params.N,):
            raise DimensionMismatch(f"need {params.N} evaluation points, got {pts.shape}")
        if len(set(pts.tolist())) != params.N:
            raise DuplicateEvalPoints("evaluation points must be distinct")
        if pts.min() < 0 or pts.max() >= F.order:
            raise CodecError("evaluation points must be field elements")
    pts.setflags(write=False)
    G = GeneratorMatrix(vandermonde(F, pts, params.K), params)
    return ReedSolomon(params, pts, G)


def _received_symbols(received, pattern: ErasurePattern) -> np.ndarray:
    if isinstance(received, ReceivedWord):
        if not np.array_equal(received.erased, pattern.mask()):
            raise CodecError("received word does not match the erasure pattern")
        return np.asarray(received.symbols, dtype=np.int64)
    y = np.asarray(received, dtype=np.int64)
    if y.shape != (pattern.length,):
        raise DimensionMismatch(f"received word has shape {y.shape}, pattern length {pattern.length}")
    return y


def rs_erasure_decode(received, pattern: ErasurePattern, code: ReedSolomon) -> np.ndarray:
    """Recover the message from the first K unerased positions.

    Raises :class:`TooManyErasures` when more than N-K symbols are lost.
    """
    N, K = code.params.N, code.params.K
    if pattern.length != N:
        raise DimensionMismatch(f"pattern length {pattern.length} != N={N}")
    y = _received_symbols(received, pattern)
    if pattern.weight > N - K:
        raise TooManyErasures(f"{pattern.weight} erasures > N-K = {N - K}")
    cols = pattern.kept()[:K]
    sub = code.generator.entries[:, cols]
    status, msgs, _ = _kernels.solve_batch(
        code.params.field, sub, y[cols][None], np.zeros((1, K), dtype=bool))
    # any K columns of a Vandermonde matrix with distinct points are independent
    assert status[0] == _kernels.OK
    return msgs[0]


# --- iid random codebooks ----------------------------------------------------------

def random_codebook(params: CodeParams, rng: np.random.Generator) -> Codebook:
    """q^K codewords with every symbol iid uniform; duplicates allowed."""
    _check_enumerable(params)
    words = params.field.sample_uniform(rng, (params.num_codewords, params.N))
    return Codebook(params, words, label="random")


# --- linear random codes -------------------------------------------------------------

def linear_random_generator(params: CodeParams, rng: np.random.Generator) -> GeneratorMatrix:
    return GeneratorMatrix(params.field.sample_uniform(rng, (params.K, params.N)), params)


def linear_encode(b, G: GeneratorMatrix) -> np.ndarray:
    b = np.asarray(b, dtype=np.int64)
    if b.shape != (G.params.K,):
        raise DimensionMismatch(f"message length {b.shape} != K={G.params.K}")
    return _kernels.encode_batch(G.params.field, b[None], G.entries)[0]


def linear_codebook(G: GeneratorMatrix, label: str = "linear") -> Codebook:
    _check_enumerable(G.params)
    msgs = all_messages(G.params.q, G.params.K)
    return Codebook(G.params, _kernels.encode_batch(G.params.field, msgs, G.entries), label)


def linear_erasure_decode(y, e: ErasurePattern, G: GeneratorMatrix) -> np.ndarray:
    """Solve b G~ = y~ on the unerased columns.

    Raises :class:`NotEnoughSymbols` if fewer than K symbols arrived,
    :class:`RankDeficient` if the reduced generator matrix has rank < K and
    :class:`InconsistentSystem` if ``y`` is not a codeword of ``G``.
    """
    N, K = G.params.N, G.params.K
    if e.length != N:
        raise DimensionMismatch(f"pattern length {e.length} != N={N}")
    y = _received_symbols(y, e)
    if N - e.weight < K:
        raise NotEnoughSymbols(f"{N - e.weight} symbols received, need {K}")
    status, msgs, rank = _kernels.solve_batch(G.params.field, G.entries, y[None], e.mask()[None])
    if status[0] == _kernels.RANK_DEFICIENT:
        raise RankDeficient(f"reduced generator matrix has rank {rank[0]} < {K}")
    if status[0] == _kernels.INCONSISTENT:
        raise InconsistentSystem("received symbols are not a codeword of G")
    return msgs[0]


# --- small MDS families usable for any q -------------------------------------------

def repetition_codebook(params: CodeParams) -> Codebook:
    if params.K != 1:
        raise CodecError("repetition code needs K = 1")
    words = np.repeat(params.field.elements()[:, None], params.N, axis=1)
    return Codebook(params, words, label="MDS")


def parity_check_codebook(params: CodeParams) -> Codebook:
    """[K+1, K] code: the message followed by minus the sum of its symbols."""
    if params.N != params.K + 1:
        raise CodecError("single parity-check code needs N = K + 1")
    F = params.field
    msgs = all_messages(F.order, params.K)
    parity = F.neg(F.sum(msgs, axis=1))
    return Codebook(params, np.column_stack([msgs, parity]), label="MDS")


def mds_codebook(params: CodeParams) -> Codebook:
    """Some explicit MDS codebook of the requested size.

    Reed-Solomon when N <= q, otherwise the repetition or single
    parity-check code, which are MDS over every alphabet.
    """
    if params.N <= params.q:
        return rs_code(params).codebook()
    if params.K == 1:
        return repetition_codebook(params)
    if params.N == params.K + 1:
        return parity_check_codebook(params)
    raise TooLongForField(f"no MDS construction for N={params.N}, K={params.K}, q={params.q}")


# --- distance ----------------------------------------------------------------------

def min_distance(cb: Codebook) -> int:
    """Minimum pairwise Hamming distance (0 if two codewords coincide)."""
    words = cb.words
    if len(words) > MAX_PAIRWISE:
        raise TooLargeToEnumerate(f"{len(words)} codewords exceeds the pairwise ceiling {MAX_PAIRWISE}")
    best = cb.params.N
    for i in range(len(words) - 1):
        d = (words[i + 1:] != words[i]).sum(axis=1).min()
        if d < best:
            best = int(d)
            if best == 0:
                break
    return best


def is_mds(cb: Codebook) -> bool:
    return min_distance(cb) == cb.params.N - cb.params.K + 1
