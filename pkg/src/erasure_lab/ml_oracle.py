"""Exact maximum-likelihood analysis of explicit codebooks over erasure channels.

For an erasure pattern e, the codebook splits into bins keyed by the symbols
at the unerased positions.  An ML decoder picks uniformly inside the bin of
the received word, so the conditional error given e is ``1 - b_e^+ / q^K``
where ``b_e^+`` counts occupied bins.  Everything here is an exact
enumeration over all 2^N patterns; sums run in fixed pattern order so the
float results are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channel import (ChannelSpec, ErasurePattern, Memoryless, ReceivedWord,
                      enumerate_patterns, full_support)
from .codecs import (Codebook, CodeParams, TooLargeToEnumerate, is_mds,
                     mds_codebook, random_codebook)

FLOAT_TOL = 1e-12


class NoConsistentCodeword(ValueError):
    pass


@dataclass(frozen=True)
class BinProfile:
    pattern: ErasurePattern
    bin_sizes: dict

    @property
    def occupied(self) -> int:
        return len(self.bin_sizes)

    @property
    def total(self) -> int:
        return sum(self.bin_sizes.values())


def _occupied_bins(words: np.ndarray, kept: np.ndarray, q: int) -> int:
    if kept.size == 0:
        return 1
    sub = words[:, kept]
    if kept.size * math.log2(q) < 62:
        keys = sub @ (q ** np.arange(kept.size, dtype=np.int64))
        return int(np.unique(keys).size)
    return int(np.unique(sub, axis=0).shape[0])


def bin_profile(cb: Codebook, e: ErasurePattern) -> BinProfile:
    if e.length != cb.params.N:
        raise ValueError(f"pattern length {e.length} != N={cb.params.N}")
    kept = e.kept()
    if kept.size == 0:
        return BinProfile(e, {(): len(cb)})
    keys, counts = np.unique(cb.words[:, kept], axis=0, return_counts=True)
    return BinProfile(e, {tuple(int(v) for v in k): int(c) for k, c in zip(keys, counts)})


def occupied_bin_counts(cb: Codebook) -> np.ndarray:
    """``b_e^+`` for every pattern, in enumeration order."""
    N = cb.params.N
    if N > 20:
        raise TooLargeToEnumerate("pattern enumeration limited to N <= 20")
    out = np.empty(2**N, dtype=np.int64)
    for idx in range(2**N):
        kept = np.array([j for j in range(N) if not (idx >> (N - 1 - j)) & 1], dtype=np.int64)
        out[idx] = _occupied_bins(cb.words, kept, cb.params.q)
    return out


def _use_exact(ch: ChannelSpec, exact: bool | None) -> bool:
    if exact is None:
        return bool(getattr(ch, "exact", False))
    if exact and not getattr(ch, "exact", False):
        raise ValueError("exact mode needs rational channel probabilities")
    return exact


def exact_ml_error(cb: Codebook, ch: ChannelSpec, exact: bool | None = None):
    """ML error probability with equiprobable codewords and random tie-breaks.

    Returns a :class:`~fractions.Fraction` when the channel probabilities are
    rational (or ``exact=True``), else a float summed with ``math.fsum``.
    """
    N = cb.params.N
    qk = cb.params.num_codewords
    occupied = occupied_bin_counts(cb)
    if _use_exact(ch, exact):
        _, probs = enumerate_patterns(N, ch, exact=True)
        return sum((Fraction(pr) * (1 - Fraction(int(b), qk)) for pr, b in zip(probs, occupied)),
                   Fraction(0))
    _, probs = enumerate_patterns(N, ch)
    return math.fsum(probs * (1.0 - occupied / qk))


def exact_ml_error_by_weight(cb: Codebook, ch: Memoryless) -> float:
    """Memoryless shortcut: group patterns by weight before weighting."""
    N = cb.params.N
    qk = cb.params.num_codewords
    occupied = occupied_bin_counts(cb)
    weights = np.array([bin(i).count("1") for i in range(2**N)])
    pi = float(ch.pi)
    terms = []
    for m in range(N + 1):
        inner = math.fsum(1.0 - occupied[weights == m] / qk)
        terms.append(pi**m * (1 - pi) ** (N - m) * inner)
    return math.fsum(terms)


def singleton_lower_bound(params: CodeParams, ch: ChannelSpec, exact: bool | None = None):
    """Lower bound on the ML error of *any* [N, K] codebook.

    Patterns with m > N-K erasures leave at most q^(N-m) bins, so the error
    given such a pattern is at least 1 - q^(N-m-K).  Memoryless channels use
    the binomial closed form for any N; other channels enumerate patterns.
    """
    N, K, q = params.N, params.K, params.q
    use_exact = _use_exact(ch, exact)
    if isinstance(ch, Memoryless):
        if use_exact:
            pi = Fraction(ch.pi)
            return sum((math.comb(N, m) * pi**m * (1 - pi) ** (N - m) * (1 - Fraction(1, q ** (m + K - N)))
                        for m in range(N - K + 1, N + 1)), Fraction(0))
        pi = float(ch.pi)
        terms = []
        for m in range(N - K + 1, N + 1):
            terms.append(_binom_pmf(N, m, pi) * -math.expm1(-(m + K - N) * math.log(q)))
        return math.fsum(terms)
    patterns, probs = enumerate_patterns(N, ch, exact=use_exact)
    weights = patterns.sum(axis=1)
    if use_exact:
        return sum((Fraction(pr) * (1 - Fraction(1, q ** (int(m) + K - N)))
                    for pr, m in zip(probs, weights) if m > N - K), Fraction(0))
    sel = weights > N - K
    return math.fsum(probs[sel] * (1.0 - float(q) ** (N - K - weights[sel]).astype(float)))


def _binom_pmf(n: int, k: int, p: float) -> float:
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    return math.exp(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
                    + k * math.log(p) + (n - k) * math.log1p(-p))


def ml_decode(cb: Codebook, y: ReceivedWord, e: ErasurePattern, rng: np.random.Generator) -> int:
    """ML decision as a codeword index, uniform among the consistent ones.

    Returning the index rather than the symbols keeps duplicate codewords
    apart: two messages with identical codewords are different decisions.
    """
    kept = e.kept()
    symbols = np.asarray(y.symbols if isinstance(y, ReceivedWord) else y, dtype=np.int64)
    match = np.all(cb.words[:, kept] == symbols[kept], axis=1)
    candidates = np.flatnonzero(match)
    if candidates.size == 0:
        raise NoConsistentCodeword("no codeword agrees with the unerased symbols")
    return int(candidates[rng.integers(candidates.size)])


# --- optimality verification ---------------------------------------------------

def near_clone_codebook(cb: Codebook, rng: np.random.Generator) -> Codebook:
    """Copy of ``cb`` where one codeword is overwritten by a copy of another
    with at most one symbol changed, forcing min distance <= 1."""
    words = cb.words.copy()
    i, j = rng.choice(len(words), size=2, replace=False)
    words[j] = words[i]
    if cb.params.N > 1 and rng.random() < 0.5:
        pos = rng.integers(cb.params.N)
        words[j, pos] = (words[j, pos] + 1 + rng.integers(cb.params.q - 1)) % cb.params.q
    return Codebook(cb.params, words, label="custom")


def _as_float(x) -> float:
    return float(x)


def _ge(a, b, exact: bool) -> bool:
    return a >= b if exact else a >= b - FLOAT_TOL


def _gt(a, b, exact: bool) -> bool:
    return a > b if exact else a > b + FLOAT_TOL


def verify_proposition_one(params: CodeParams, ch: ChannelSpec, trials: int,
                           rng: np.random.Generator, exact: bool | None = None,
                           extra_codebooks=()) -> dict:
    """Check MDS optimality exhaustively on one small instance.

    Builds an MDS codebook, computes its exact ML error and the lower bound,
    then samples ``trials`` non-MDS codebooks (alternating iid-uniform draws
    with near-clones of the MDS code) and checks each is no better.  Strict
    inequality is only required when every erasure pattern has positive
    probability.  Returns a JSON-ready report.
    """
    use_exact = _use_exact(ch, exact)
    mds = mds_codebook(params)
    mds_err = exact_ml_error(mds, ch, exact=use_exact)
    bound = singleton_lower_bound(params, ch, exact=use_exact)
    strict = full_support(params.N, ch)

    sampled = []
    sampled_mds = []
    attempts = 0
    while len(sampled) < trials:
        attempts += 1
        if attempts > 100 * max(trials, 1):
            raise RuntimeError("could not sample enough non-MDS codebooks")
        if len(sampled) % 2 == 0:
            cb = random_codebook(params, rng)
        else:
            cb = near_clone_codebook(mds, rng)
        if is_mds(cb):
            sampled_mds.append(exact_ml_error(cb, ch, exact=use_exact))
            continue
        sampled.append(exact_ml_error(cb, ch, exact=use_exact))
    extra = [exact_ml_error(cb, ch, exact=use_exact) for cb in extra_codebooks]
    extra_non_mds = [v for cb, v in zip(extra_codebooks, extra) if not is_mds(cb)]

    if use_exact:
        mds_equals_bound = mds_err == bound
    else:
        mds_equals_bound = abs(mds_err - bound) <= FLOAT_TOL
    non_mds = sampled + extra_non_mds
    all_ge = all(_ge(v, mds_err, use_exact) for v in non_mds + sampled_mds + extra)
    all_strict = all(_gt(v, mds_err, use_exact) for v in non_mds)
    sampled_mds_ok = all((v == bound) if use_exact else abs(v - bound) <= FLOAT_TOL
                         for v in sampled_mds)
    passed = mds_equals_bound and all_ge and sampled_mds_ok and (all_strict or not strict)
    report = {
        "inputs": {"N": params.N, "K": params.K, "q": params.q,
                   "channel": ch.describe(), "trials": trials, "exact": use_exact},
        "mds_error": _as_float(mds_err),
        "lower_bound": _as_float(bound),
        "mds_equals_bound": mds_equals_bound,
        "sampled_non_mds": len(non_mds),
        "sampled_mds": len(sampled_mds),
        "min_non_mds_error": _as_float(min(non_mds)) if non_mds else None,
        "all_at_least_mds": all_ge,
        "strictness_asserted": strict,
        "all_non_mds_strictly_worse": all_strict,
        "sampled_mds_equal_bound": sampled_mds_ok,
        "passed": passed,
    }
    if use_exact:
        report["mds_error_exact"] = str(mds_err)
        report["lower_bound_exact"] = str(bound)
    return report
